#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "liveeval/judge_http.hpp"

using namespace liveeval;

namespace {

// In-process service the judge talks to; captures every request it sees.
struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    std::mutex mutex;
    std::vector<nlohmann::json> bodies;
    std::vector<std::string> content_types;
    std::vector<std::string> auth_headers;  // "" when absent
    std::atomic<int> calls{0};

    explicit TestServer(
        std::function<void(int call, httplib::Response&)> respond) {
        server.Post("/v1/answer", [this, respond](const httplib::Request& req,
                                                  httplib::Response& res) {
            int call = calls.fetch_add(1);
            {
                std::lock_guard<std::mutex> lock(mutex);
                bodies.push_back(nlohmann::json::parse(req.body));
                content_types.push_back(req.get_header_value("Content-Type"));
                auth_headers.push_back(req.has_header("Authorization")
                                           ? req.get_header_value("Authorization")
                                           : "");
            }
            respond(call, res);
        });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        thread.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port);
    }
};

void reply_text(httplib::Response& res, const std::string& text) {
    nlohmann::json doc;
    doc["text"] = text;
    res.set_content(doc.dump(), "application/json");
}

HttpJudgeConfig base_config(const TestServer& srv) {
    HttpJudgeConfig cfg;
    cfg.endpoint = srv.endpoint();
    cfg.model = "mini";
    cfg.token_env = "LIVEEVAL_TEST_TOKEN";
    cfg.timeout_ms = 5000;
    cfg.retries = 3;
    return cfg;
}

}  // namespace

TEST_CASE("choice requests post the rendered prompt as JSON") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    TestServer srv([](int, httplib::Response& res) { reply_text(res, "B"); });
    auto cfg = base_config(srv);
    cfg.capability = Capability::text_only;
    auto judge = make_http_judge(cfg);

    CHECK(judge->identity() == "http:mini");
    CHECK(judge->capability() == Capability::text_only);

    ChoiceRequest req{"q1", "Pick one.", {"left", "right"}};
    CHECK(judge->answer_choice(req) == "B");

    REQUIRE(srv.calls.load() == 1);
    std::lock_guard<std::mutex> lock(srv.mutex);
    CHECK(srv.content_types[0] == "application/json");
    CHECK(srv.bodies[0].at("model") == "mini");
    CHECK(srv.bodies[0].at("prompt") == choice_prompt(req));
    CHECK(!srv.bodies[0].contains("media_ref"));
    CHECK(srv.auth_headers[0] == "");  // no token in the environment
}

TEST_CASE("agreement requests carry the media reference") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    TestServer srv([](int, httplib::Response& res) { reply_text(res, "yes"); });
    auto judge = make_http_judge(base_config(srv));
    CHECK(judge->capability() == Capability::multimodal);

    AgreementRequest req{"q1", "Is it a cat?", {"yes", "no"}, "yes",
                         "img/cat.png"};
    CHECK(judge->answer_agreement(req) == "yes");

    std::lock_guard<std::mutex> lock(srv.mutex);
    CHECK(srv.bodies[0].at("prompt") == agreement_prompt(req));
    CHECK(srv.bodies[0].at("media_ref") == "img/cat.png");
}

TEST_CASE("a bearer token is attached only while the variable is set") {
    TestServer srv([](int, httplib::Response& res) { reply_text(res, "A"); });
    auto judge = make_http_judge(base_config(srv));
    ChoiceRequest req{"q1", "t", {"x", "y"}};

    setenv("LIVEEVAL_TEST_TOKEN", "sekrit", 1);
    judge->answer_choice(req);
    setenv("LIVEEVAL_TEST_TOKEN", "", 1);  // empty value counts as absent
    judge->answer_choice(req);
    unsetenv("LIVEEVAL_TEST_TOKEN");
    judge->answer_choice(req);

    std::lock_guard<std::mutex> lock(srv.mutex);
    REQUIRE(srv.auth_headers.size() == 3);
    CHECK(srv.auth_headers[0] == "Bearer sekrit");
    CHECK(srv.auth_headers[1] == "");
    CHECK(srv.auth_headers[2] == "");
}

TEST_CASE("a transient server error is retried") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    TestServer srv([](int call, httplib::Response& res) {
        if (call == 0)
            res.status = 500;
        else
            reply_text(res, "recovered");
    });
    auto judge = make_http_judge(base_config(srv));
    CHECK(judge->answer_choice({"q1", "t", {"x", "y"}}) == "recovered");
    CHECK(srv.calls.load() == 2);
}

TEST_CASE("persistent failure exhausts the attempt budget") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    TestServer srv([](int, httplib::Response& res) { res.status = 500; });
    auto judge = make_http_judge(base_config(srv));
    CHECK_THROWS_WITH_AS(judge->answer_choice({"q1", "t", {"x", "y"}}),
                         "judge 'http:mini' failed after 3 attempts "
                         "(HTTP status 500)",
                         JudgeError);
    CHECK(srv.calls.load() == 3);
}

TEST_CASE("malformed response bodies are judge failures, not crashes") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    TestServer srv([](int, httplib::Response& res) {
        res.set_content("this is not json", "text/plain");
    });
    auto cfg = base_config(srv);
    cfg.retries = 2;
    auto judge = make_http_judge(cfg);
    CHECK_THROWS_WITH_AS(judge->answer_choice({"q1", "t", {"x", "y"}}),
                         doctest::Contains("malformed response body"),
                         JudgeError);
    CHECK(srv.calls.load() == 2);

    TestServer wrong_key([](int, httplib::Response& res) {
        res.set_content(R"({"answer":"B"})", "application/json");
    });
    auto cfg2 = base_config(wrong_key);
    cfg2.retries = 1;
    auto judge2 = make_http_judge(cfg2);
    CHECK_THROWS_WITH_AS(judge2->answer_choice({"q1", "t", {"x", "y"}}),
                         doctest::Contains("after 1 attempts"), JudgeError);
}

TEST_CASE("an unreachable endpoint surfaces as a transport error") {
    unsetenv("LIVEEVAL_TEST_TOKEN");
    HttpJudgeConfig cfg;
    cfg.endpoint = "http://127.0.0.1:1";  // nothing listens here
    cfg.model = "mini";
    cfg.timeout_ms = 500;
    cfg.retries = 2;
    auto judge = make_http_judge(cfg);
    CHECK_THROWS_WITH_AS(judge->answer_choice({"q1", "t", {"x", "y"}}),
                         doctest::Contains("transport error"), JudgeError);
}

TEST_CASE("judge configuration is validated up front") {
    HttpJudgeConfig cfg;
    cfg.model = "mini";
    CHECK_THROWS_WITH_AS(make_http_judge(cfg),
                         "judge endpoint must be nonempty", Error);

    cfg.endpoint = "http://127.0.0.1:8901";
    cfg.model = "";
    CHECK_THROWS_WITH_AS(make_http_judge(cfg),
                         "judge model name must be nonempty", Error);

    cfg.model = "mini";
    cfg.retries = 0;
    CHECK_THROWS_WITH_AS(make_http_judge(cfg),
                         "judge retries must be at least 1", Error);

    cfg.retries = 3;
    cfg.timeout_ms = 0;
    CHECK_THROWS_WITH_AS(make_http_judge(cfg),
                         "judge timeout must be positive", Error);
}
