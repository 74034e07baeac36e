#pragma once
#include <memory>
#include <string>

#include "liveeval/filters.hpp"

namespace liveeval {

// Remote judge speaking a minimal HTTP protocol: POST {endpoint}/v1/answer
// with JSON {"model", "prompt"} (+"media_ref" for multimodal requests); the
// service replies {"text": "..."}. A bearer token is read from the named
// environment variable when present.
struct HttpJudgeConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8901"
    std::string model;
    Capability capability = Capability::multimodal;
    std::string token_env = "LIVEEVAL_JUDGE_TOKEN";
    int timeout_ms = 30000;
    int retries = 3;  // total attempts before JudgeError
};

std::unique_ptr<JudgeClient> make_http_judge(const HttpJudgeConfig& config);

}  // namespace liveeval
