#pragma once
// Deterministic in-process judges. These exist so every filter behavior —
// including transport failure — can be exercised without a live service.
#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "liveeval/filters.hpp"

namespace liveeval {

// Answers correctly for the ids it "knows" and deterministically wrong for
// the rest.
class OracleChoiceJudge : public JudgeClient {
public:
    explicit OracleChoiceJudge(const std::vector<CandidateQuestion>& questions)
        : OracleChoiceJudge(questions, all_ids(questions)) {}
    OracleChoiceJudge(const std::vector<CandidateQuestion>& questions,
                      std::set<std::string> known)
        : known_(std::move(known)) {
        for (const auto& q : questions)
            answer_of_[q.id] = q.options[static_cast<std::size_t>(q.correct_index)];
    }

    Capability capability() const override { return Capability::text_only; }
    const std::string& identity() const override { return id_; }

    std::string answer_choice(const ChoiceRequest& request) override {
        auto it = answer_of_.find(request.question_id);
        if (it == answer_of_.end())
            fail("oracle judge has no key for '" + request.question_id + "'");
        auto pos = std::find(request.options.begin(), request.options.end(),
                             it->second) -
                   request.options.begin();
        if (!known_.count(request.question_id))
            pos = pos == 0 ? 1 : 0;  // deliberately wrong, and stable
        return std::string(1, static_cast<char>('A' + pos));
    }
    std::string answer_agreement(const AgreementRequest&) override {
        fail("oracle judge is text-only");
    }

private:
    static std::set<std::string> all_ids(
        const std::vector<CandidateQuestion>& questions) {
        std::set<std::string> ids;
        for (const auto& q : questions) ids.insert(q.id);
        return ids;
    }
    std::string id_ = "mock-oracle";
    std::unordered_map<std::string, std::string> answer_of_;
    std::set<std::string> known_;
};

// Always picks the option at a fixed presented position; the shuffle is what
// defeats it.
class PositionalChoiceJudge : public JudgeClient {
public:
    explicit PositionalChoiceJudge(int position = 0) : position_(position) {}

    Capability capability() const override { return Capability::text_only; }
    const std::string& identity() const override { return id_; }

    std::string answer_choice(const ChoiceRequest& request) override {
        auto pos = std::min<std::size_t>(static_cast<std::size_t>(position_),
                                         request.options.size() - 1);
        return std::string(1, static_cast<char>('A' + pos));
    }
    std::string answer_agreement(const AgreementRequest&) override {
        fail("positional judge is text-only");
    }

private:
    std::string id_ = "mock-positional";
    int position_;
};

// Fixed raw response per question id; ids in fail_ids throw JudgeError to
// simulate a dead transport. An id with no script is a test bug and throws a
// plain Error (which filters do not swallow).
class ScriptedChoiceJudge : public JudgeClient {
public:
    explicit ScriptedChoiceJudge(std::map<std::string, std::string> script,
                                 std::set<std::string> fail_ids = {})
        : script_(std::move(script)), fail_ids_(std::move(fail_ids)) {}

    Capability capability() const override { return Capability::text_only; }
    const std::string& identity() const override { return id_; }

    std::string answer_choice(const ChoiceRequest& request) override {
        if (fail_ids_.count(request.question_id))
            throw JudgeError("scripted transport failure for '" +
                             request.question_id + "'");
        auto it = script_.find(request.question_id);
        if (it == script_.end())
            fail("no script for '" + request.question_id + "'");
        return it->second;
    }
    std::string answer_agreement(const AgreementRequest&) override {
        fail("scripted choice judge is text-only");
    }

private:
    std::string id_ = "mock-scripted";
    std::map<std::string, std::string> script_;
    std::set<std::string> fail_ids_;
};

class ConstantAgreementJudge : public JudgeClient {
public:
    explicit ConstantAgreementJudge(std::string response)
        : response_(std::move(response)) {}

    Capability capability() const override { return Capability::multimodal; }
    const std::string& identity() const override { return id_; }

    std::string answer_choice(const ChoiceRequest&) override {
        fail("agreement judge answers agreement requests only");
    }
    std::string answer_agreement(const AgreementRequest&) override {
        return response_;
    }

private:
    std::string id_ = "mock-agree-const";
    std::string response_;
};

class ScriptedAgreementJudge : public JudgeClient {
public:
    explicit ScriptedAgreementJudge(std::map<std::string, std::string> script,
                                    std::set<std::string> fail_ids = {})
        : script_(std::move(script)), fail_ids_(std::move(fail_ids)) {}

    Capability capability() const override { return Capability::multimodal; }
    const std::string& identity() const override { return id_; }

    std::string answer_choice(const ChoiceRequest&) override {
        fail("agreement judge answers agreement requests only");
    }
    std::string answer_agreement(const AgreementRequest& request) override {
        if (fail_ids_.count(request.question_id))
            throw JudgeError("scripted transport failure for '" +
                             request.question_id + "'");
        auto it = script_.find(request.question_id);
        if (it == script_.end())
            fail("no script for '" + request.question_id + "'");
        return it->second;
    }

private:
    std::string id_ = "mock-agree-scripted";
    std::map<std::string, std::string> script_;
    std::set<std::string> fail_ids_;
};

}  // namespace liveeval
