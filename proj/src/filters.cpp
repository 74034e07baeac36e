#include "liveeval/filters.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "liveeval/rng.hpp"

namespace liveeval {

namespace {

bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool ascii_alnum(char c) { return ascii_alpha(c) || (c >= '0' && c <= '9'); }
char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c; }

void validate_question(const CandidateQuestion& q) {
    if (q.id.empty()) fail("question id must be nonempty");
    if (q.options.size() < 2)
        fail("question '" + q.id + "' needs at least 2 options");
    if (q.options.size() > 26)
        fail("question '" + q.id + "' has more than 26 options");
    std::set<std::string> distinct(q.options.begin(), q.options.end());
    if (distinct.size() != q.options.size())
        fail("question '" + q.id + "' has duplicate options");
    if (q.correct_index < 0 ||
        static_cast<std::size_t>(q.correct_index) >= q.options.size())
        fail("question '" + q.id + "' has correct_index out of range");
}

void validate_questions(const std::vector<CandidateQuestion>& questions) {
    std::set<std::string> ids;
    for (const auto& q : questions) {
        validate_question(q);
        if (!ids.insert(q.id).second) fail("duplicate question id '" + q.id + "'");
    }
}

std::string excerpt(const std::string& raw) {
    std::string s = raw.substr(0, 60);
    for (char& c : s)
        if (static_cast<unsigned char>(c) < 0x20) c = ' ';
    if (raw.size() > 60) s += "...";
    return s;
}

// Runs fn(0..n−1), possibly on several threads; slot writes keep results in
// input order and the first exception is rethrown after all workers join.
template <class Fn>
void for_each_index(std::size_t n, int parallelism, Fn&& fn) {
    if (parallelism < 1) fail("parallelism must be at least 1");
    std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(parallelism), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

FilterOutcome assemble(const std::vector<CandidateQuestion>& questions,
                       std::vector<QuestionDisposition> dispositions,
                       std::ostream* log, const char* stage) {
    FilterOutcome out;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto& d = dispositions[i];
        if (log && !d.note.empty())
            (*log) << stage << ": question '" << d.id << "': " << d.note << "\n";
        if (d.disposition == Disposition::removed_blind ||
            d.disposition == Disposition::removed_agreement)
            out.removed.push_back(questions[i]);
        else
            out.kept.push_back(questions[i]);
    }
    out.dispositions = std::move(dispositions);
    return out;
}

}  // namespace

std::optional<int> try_parse_choice(const std::string& raw, int num_options) {
    if (num_options < 2 || num_options > 26)
        fail("num_options must be in 2..26");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!ascii_alpha(raw[i])) continue;
        bool standalone = (i == 0 || !ascii_alnum(raw[i - 1])) &&
                          (i + 1 == raw.size() || !ascii_alnum(raw[i + 1]));
        if (!standalone) continue;
        int idx = ascii_lower(raw[i]) - 'a';
        if (idx < num_options) return idx;  // out-of-range letters are skipped
    }
    return std::nullopt;
}

int parse_choice(const std::string& raw, int num_options) {
    auto idx = try_parse_choice(raw, num_options);
    if (!idx)
        fail("unparseable choice response: '" + excerpt(raw) + "'");
    return *idx;
}

std::optional<bool> try_parse_agreement(const std::string& raw) {
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && !ascii_alpha(raw[i])) ++i;
        std::size_t j = i;
        while (j < raw.size() && ascii_alpha(raw[j])) ++j;
        std::string word;
        for (std::size_t k = i; k < j; ++k) word += ascii_lower(raw[k]);
        if (word == "yes") return true;
        if (word == "no") return false;
        i = j;
    }
    return std::nullopt;
}

bool parse_agreement(const std::string& raw) {
    auto a = try_parse_agreement(raw);
    if (!a) fail("unparseable agreement response: '" + excerpt(raw) + "'");
    return *a;
}

std::string choice_prompt(const ChoiceRequest& request) {
    std::string p = request.question_text;
    p += "\n\n";
    for (std::size_t i = 0; i < request.options.size(); ++i) {
        p += static_cast<char>('A' + i);
        p += ". ";
        p += request.options[i];
        p += "\n";
    }
    p += "\nAnswer with the letter of the correct option directly.\n";
    return p;
}

std::string agreement_prompt(const AgreementRequest& request) {
    std::string p = request.question_text;
    p += "\n\n";
    for (std::size_t i = 0; i < request.options.size(); ++i) {
        p += static_cast<char>('A' + i);
        p += ". ";
        p += request.options[i];
        p += "\n";
    }
    p += "\nProposed answer: ";
    p += request.proposed_answer;
    p += "\n\nDoes the proposed answer correctly answer the question about the "
         "image? Write only the words yes or no.\n";
    return p;
}

const char* to_string(Disposition d) {
    switch (d) {
        case Disposition::kept: return "kept";
        case Disposition::removed_blind: return "removed_blind";
        case Disposition::removed_agreement: return "removed_agreement";
        case Disposition::undecided_kept: return "undecided_kept";
    }
    return "?";
}

FilterOutcome blind_test(const std::vector<CandidateQuestion>& questions,
                         JudgeClient& judge, const BlindConfig& config,
                         std::ostream* log) {
    if (judge.capability() != Capability::text_only)
        fail("blind test requires a text-only judge");
    if (config.repeats < 1) fail("repeats must be at least 1");
    validate_questions(questions);

    std::vector<QuestionDisposition> dispositions(questions.size());
    for_each_index(questions.size(), config.parallelism, [&](std::size_t qi) {
        const CandidateQuestion& q = questions[qi];
        QuestionDisposition d{q.id, Disposition::kept, ""};
        // One stream per question id: the shuffles this question sees do not
        // depend on batch order or on which thread got here first.
        Pcg32 rng = substream(config.seed, "blind-test", fnv1a64(q.id));
        int correct = 0;
        for (int k = 0; k < config.repeats; ++k) {
            std::vector<std::uint32_t> perm(q.options.size());
            std::iota(perm.begin(), perm.end(), 0u);
            rng.shuffle(perm);
            ChoiceRequest req;
            req.question_id = q.id;
            req.question_text = q.question_text;
            for (std::uint32_t src : perm) req.options.push_back(q.options[src]);
            std::string raw;
            try {
                raw = judge.answer_choice(req);
            } catch (const JudgeError& e) {
                d.disposition = Disposition::undecided_kept;
                d.note = std::string("kept undecided, judge failed: ") + e.what();
                break;
            }
            auto pos = try_parse_choice(raw, static_cast<int>(q.options.size()));
            if (pos && perm[static_cast<std::size_t>(*pos)] ==
                           static_cast<std::uint32_t>(q.correct_index))
                ++correct;  // an unparseable repeat counts as a miss
        }
        if (d.disposition == Disposition::kept && correct == config.repeats)
            d.disposition = Disposition::removed_blind;
        dispositions[qi] = std::move(d);
    });
    return assemble(questions, std::move(dispositions), log, "blind-test");
}

FilterOutcome agreement_filter(const std::vector<CandidateQuestion>& questions,
                               JudgeClient& judge, int parallelism,
                               std::ostream* log) {
    if (judge.capability() != Capability::multimodal)
        fail("agreement filter requires a multimodal judge");
    validate_questions(questions);
    for (const auto& q : questions)
        if (q.media_ref.empty())
            fail("question '" + q.id + "' has no media reference");

    std::vector<QuestionDisposition> dispositions(questions.size());
    for_each_index(questions.size(), parallelism, [&](std::size_t qi) {
        const CandidateQuestion& q = questions[qi];
        QuestionDisposition d{q.id, Disposition::kept, ""};
        AgreementRequest req;
        req.question_id = q.id;
        req.question_text = q.question_text;
        req.options = q.options;
        req.proposed_answer = q.options[static_cast<std::size_t>(q.correct_index)];
        req.media_ref = q.media_ref;
        try {
            std::string raw = judge.answer_agreement(req);
            auto verdict = try_parse_agreement(raw);
            if (!verdict) {
                d.disposition = Disposition::removed_agreement;
                d.note = "removed, unparseable response: '" + excerpt(raw) + "'";
            } else if (!*verdict) {
                d.disposition = Disposition::removed_agreement;
            }
        } catch (const JudgeError& e) {
            // No usable verdict — drop rather than risk a bad question.
            d.disposition = Disposition::removed_agreement;
            d.note = std::string("removed, judge failed: ") + e.what();
        }
        dispositions[qi] = std::move(d);
    });
    return assemble(questions, std::move(dispositions), log, "agreement");
}

FilterReport two_stage_filter(const std::vector<CandidateQuestion>& questions,
                              JudgeClient& blind_judge,
                              JudgeClient& agreement_judge,
                              const BlindConfig& config, std::ostream* log) {
    FilterOutcome blind = blind_test(questions, blind_judge, config, log);
    FilterOutcome agree =
        agreement_filter(blind.kept, agreement_judge, config.parallelism, log);

    FilterReport report;
    report.input_count = static_cast<int>(questions.size());
    std::map<std::string, const QuestionDisposition*> agree_of;
    for (const auto& d : agree.dispositions) agree_of[d.id] = &d;

    for (const auto& d : blind.dispositions) {
        QuestionDisposition resolved = d;
        auto it = agree_of.find(d.id);
        if (it != agree_of.end() &&
            it->second->disposition == Disposition::removed_agreement)
            resolved = *it->second;  // agreement removal trumps a blind keep
        switch (resolved.disposition) {
            case Disposition::removed_blind: ++report.removed_blind; break;
            case Disposition::removed_agreement: ++report.removed_agreement; break;
            default:
                ++report.retained;
                report.retained_ids.push_back(resolved.id);
        }
        report.dispositions.push_back(std::move(resolved));
    }
    return report;
}

FilterReport summarize(const FilterOutcome& outcome) {
    FilterReport report;
    report.input_count = static_cast<int>(outcome.dispositions.size());
    for (const auto& d : outcome.dispositions) {
        switch (d.disposition) {
            case Disposition::removed_blind: ++report.removed_blind; break;
            case Disposition::removed_agreement: ++report.removed_agreement; break;
            default:
                ++report.retained;
                report.retained_ids.push_back(d.id);
        }
        report.dispositions.push_back(d);
    }
    return report;
}

std::vector<CandidateQuestion> read_questions_jsonl(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '" + path.string() + "'");
    std::vector<CandidateQuestion> questions;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
            CandidateQuestion q;
            q.id = doc.at("id").get<std::string>();
            q.question_text = doc.at("question_text").get<std::string>();
            q.options = doc.at("options").get<std::vector<std::string>>();
            q.correct_index = doc.at("correct_index").get<int>();
            q.media_ref = doc.value("media_ref", std::string{});
            questions.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            fail(path.string() + " line " + std::to_string(line_no) + ": " +
                 e.what());
        }
    }
    try {
        validate_questions(questions);
    } catch (const Error& e) {
        fail(path.string() + ": " + e.what());
    }
    return questions;
}

void write_questions_jsonl(const std::vector<CandidateQuestion>& questions,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '" + path.string() + "'");
    for (const auto& q : questions) {
        nlohmann::json doc;
        doc["id"] = q.id;
        doc["question_text"] = q.question_text;
        doc["options"] = q.options;
        doc["correct_index"] = q.correct_index;
        if (!q.media_ref.empty()) doc["media_ref"] = q.media_ref;
        out << doc.dump() << '\n';
    }
    if (!out) fail("write failed for '" + path.string() + "'");
}

void write_filter_report(const FilterReport& report,
                         const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["input_count"] = report.input_count;
    doc["removed_blind"] = report.removed_blind;
    doc["removed_agreement"] = report.removed_agreement;
    doc["retained"] = report.retained;
    doc["retained_ids"] = report.retained_ids;
    doc["dispositions"] = nlohmann::json::array();
    for (const auto& d : report.dispositions) {
        nlohmann::json jd;
        jd["id"] = d.id;
        jd["disposition"] = to_string(d.disposition);
        if (!d.note.empty()) jd["note"] = d.note;
        doc["dispositions"].push_back(std::move(jd));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out) fail("write failed for '" + path.string() + "'");
}

}  // namespace liveeval
