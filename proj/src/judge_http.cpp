#include "liveeval/judge_http.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace liveeval {

namespace {

class HttpJudge : public JudgeClient {
public:
    explicit HttpJudge(HttpJudgeConfig config) : config_(std::move(config)) {
        if (config_.endpoint.empty()) fail("judge endpoint must be nonempty");
        if (config_.model.empty()) fail("judge model name must be nonempty");
        if (config_.retries < 1) fail("judge retries must be at least 1");
        if (config_.timeout_ms < 1) fail("judge timeout must be positive");
        identity_ = "http:" + config_.model;
    }

    Capability capability() const override { return config_.capability; }
    const std::string& identity() const override { return identity_; }

    std::string answer_choice(const ChoiceRequest& request) override {
        return ask(choice_prompt(request), "");
    }
    std::string answer_agreement(const AgreementRequest& request) override {
        return ask(agreement_prompt(request), request.media_ref);
    }

private:
    std::string ask(const std::string& prompt, const std::string& media_ref) {
        nlohmann::json body;
        body["model"] = config_.model;
        body["prompt"] = prompt;
        if (!media_ref.empty()) body["media_ref"] = media_ref;
        const std::string payload = body.dump();

        httplib::Headers headers;
        if (const char* token = std::getenv(config_.token_env.c_str()))
            if (*token) headers.emplace("Authorization", std::string("Bearer ") + token);

        std::string last_error;
        for (int attempt = 1; attempt <= config_.retries; ++attempt) {
            // Fresh client per attempt: reconnects after a dead socket and
            // keeps concurrent filter workers independent.
            httplib::Client client(config_.endpoint);
            auto timeout = std::chrono::milliseconds(config_.timeout_ms);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            auto res = client.Post("/v1/answer", headers, payload,
                                   "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            try {
                auto doc = nlohmann::json::parse(res->body);
                return doc.at("text").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed response body: ") + e.what();
            }
        }
        throw JudgeError("judge '" + identity_ + "' failed after " +
                         std::to_string(config_.retries) + " attempts (" +
                         last_error + ")");
    }

    HttpJudgeConfig config_;
    std::string identity_;
};

}  // namespace

std::unique_ptr<JudgeClient> make_http_judge(const HttpJudgeConfig& config) {
    return std::make_unique<HttpJudge>(config);
}

}  // namespace liveeval
