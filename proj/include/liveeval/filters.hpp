#pragma once
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "liveeval/error.hpp"

namespace liveeval {

struct CandidateQuestion {
    std::string id;
    std::string question_text;
    std::vector<std::string> options;  // ≥2, pairwise distinct
    int correct_index = 0;
    std::string media_ref;  // "" = none

    bool operator==(const CandidateQuestion&) const = default;
};

enum class Capability { text_only, multimodal };

// A question as presented for one blind-test repeat: options arrive already
// shuffled and nothing identifies the right one. No media field at all, so a
// text-only judge can't accidentally be shown the image.
struct ChoiceRequest {
    std::string question_id;
    std::string question_text;
    std::vector<std::string> options;  // presentation order
};

struct AgreementRequest {
    std::string question_id;
    std::string question_text;
    std::vector<std::string> options;
    std::string proposed_answer;
    std::string media_ref;
};

// Transport-level judge failure (after the transport's own retries). Filters
// catch this and fall back to their conservative disposition.
class JudgeError : public Error {
public:
    using Error::Error;
};

// Answer methods return the judge's raw text; parsing is the caller's
// problem. Implementations must tolerate concurrent calls when used with
// parallelism > 1.
class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual Capability capability() const = 0;
    virtual const std::string& identity() const = 0;
    virtual std::string answer_choice(const ChoiceRequest& request) = 0;
    virtual std::string answer_agreement(const AgreementRequest& request) = 0;
};

// First standalone letter within range, case-insensitive; neighbors must not
// be alphanumeric ("(B)", "b.", "answer: c" all work). Out-of-range letters
// are skipped, not errors.
std::optional<int> try_parse_choice(const std::string& raw, int num_options);
int parse_choice(const std::string& raw, int num_options);  // errors if none

// First whole word equal to yes/no, case-insensitive.
std::optional<bool> try_parse_agreement(const std::string& raw);
bool parse_agreement(const std::string& raw);

// Prompt texts sent by transport judges; exposed so tests can pin them.
std::string choice_prompt(const ChoiceRequest& request);
std::string agreement_prompt(const AgreementRequest& request);

enum class Disposition { kept, removed_blind, removed_agreement, undecided_kept };
const char* to_string(Disposition d);

struct QuestionDisposition {
    std::string id;
    Disposition disposition = Disposition::kept;
    std::string note;  // "" unless something went wrong
};

struct BlindConfig {
    int repeats = 5;  // K; a uniform guesser on 4 options survives w.p. 1−4⁻⁵
    std::uint64_t seed = 0;  // drives the per-question option shuffles
    int parallelism = 1;
};

struct FilterOutcome {
    std::vector<CandidateQuestion> kept;     // input order
    std::vector<CandidateQuestion> removed;  // input order
    std::vector<QuestionDisposition> dispositions;  // one per input, in order
};

// Poses each question `repeats` times with independently shuffled options; a
// question is removed iff the judge picks the correct option every time.
// Unparseable answers count as misses; a transport failure leaves the
// question kept but undecided (and logged). Judge must be text_only.
// Deterministic per (question id, seed) regardless of order or parallelism.
FilterOutcome blind_test(const std::vector<CandidateQuestion>& questions,
                         JudgeClient& judge, const BlindConfig& config = {},
                         std::ostream* log = nullptr);

// Shows the media, the question and the proposed correct answer; keeps only
// on a clear "yes". Unparseable or failed responses remove the question
// (conservative). Judge must be multimodal and every question needs media.
FilterOutcome agreement_filter(const std::vector<CandidateQuestion>& questions,
                               JudgeClient& judge, int parallelism = 1,
                               std::ostream* log = nullptr);

struct FilterReport {
    int input_count = 0;
    int removed_blind = 0;
    int removed_agreement = 0;
    int retained = 0;  // includes undecided-kept
    std::vector<std::string> retained_ids;
    std::vector<QuestionDisposition> dispositions;  // input order, final state
};

// Blind test first, agreement over its survivors.
FilterReport two_stage_filter(const std::vector<CandidateQuestion>& questions,
                              JudgeClient& blind_judge,
                              JudgeClient& agreement_judge,
                              const BlindConfig& config = {},
                              std::ostream* log = nullptr);

// Report for a single-stage run.
FilterReport summarize(const FilterOutcome& outcome);

// One JSON object per line: id, question_text, options, correct_index,
// optional media_ref.
std::vector<CandidateQuestion> read_questions_jsonl(
    const std::filesystem::path& path);
void write_questions_jsonl(const std::vector<CandidateQuestion>& questions,
                           const std::filesystem::path& path);
void write_filter_report(const FilterReport& report,
                         const std::filesystem::path& path);

}  // namespace liveeval
