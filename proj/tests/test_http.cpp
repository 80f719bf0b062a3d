#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "mamr/gateway.hpp"
#include "support.hpp"

using namespace mamr;

namespace {

struct LocalServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    LocalServer() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

}  // namespace

TEST_CASE("chat backend round-trip, retries and errors") {
    LocalServer s;
    std::atomic<int> flaky_calls{0};
    std::string seen_auth;
    json seen_body;
    s.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_body = json::parse(req.body);
        const std::string prompt = seen_body["messages"][0]["content"];
        res.set_content(json{{"choices", {{{"message", {{"content", "echo: " + prompt}}}}}}}.dump(),
                        "application/json");
    });
    s.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        if (flaky_calls++ == 0) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices": [{"message": {"content": "late"}}]})", "application/json");
    });
    s.server.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content(R"({"error": "invalid"})", "application/json");
    });
    s.server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "text/plain");
    });
    s.server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"data": [{"embedding": [0.5, 0.25, 0.0]}]})", "application/json");
    });

    HttpEndpoint ep;
    ep.url = s.url("/v1/chat/completions");
    ep.model = "toy-model";
    ep.api_key = "secret";
    HttpChatBackend chat(ep);
    GenerationRequest r;
    r.prompt = "Q: hi\nA:";
    r.params.temperature = 0.7;
    r.params.seed = 11;
    CHECK(chat.complete(r) == "echo: Q: hi\nA:");
    CHECK(seen_auth == "Bearer secret");
    CHECK(seen_body["model"] == "toy-model");
    CHECK(seen_body["temperature"] == 0.7);
    CHECK(seen_body["seed"] == 11);
    CHECK(seen_body["max_tokens"] == kDefaultMaxTokens);

    HttpEndpoint flaky = ep;
    flaky.url = s.url("/flaky");
    CallLedger ledger;
    Gateway gw(std::make_shared<HttpChatBackend>(flaky), nullptr, ledger, testing::no_sleep());
    CHECK(gw.generate(r) == "late");
    CHECK(flaky_calls == 2);
    CHECK(ledger.snapshot().generation_total() == 1);

    HttpEndpoint bad = ep;
    bad.url = s.url("/bad");
    try {
        HttpChatBackend(bad).complete(r);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(e.raw_payload == R"({"error": "invalid"})");
    }
    HttpEndpoint garbage = ep;
    garbage.url = s.url("/garbage");
    CHECK_THROWS_AS(HttpChatBackend(garbage).complete(r), BackendError);

    HttpEndpoint emb = ep;
    emb.url = s.url("/v1/embeddings");
    HttpEmbeddingBackend embedder(emb, 3);
    CHECK(embedder.embed("x") == std::vector<double>{0.5, 0.25, 0.0});
}

TEST_CASE("unreachable endpoint is a transport error") {
    HttpEndpoint ep;
    ep.url = "http://127.0.0.1:1/v1/chat/completions";
    ep.timeout = std::chrono::seconds(2);
    CHECK_THROWS_AS(HttpChatBackend(ep).complete({}), TransportError);
    ep.url = "localhost/no-scheme";
    CHECK_THROWS_AS(HttpChatBackend{ep}, ConfigError);
}
