#include <doctest.h>

#include <cmath>

#include "mamr/gateway.hpp"
#include "support.hpp"

using namespace mamr;

namespace {

ScriptRule rule(MatcherKind k, std::string p, std::vector<std::string> r) { return {k, std::move(p), std::move(r)}; }

}  // namespace

TEST_CASE("scripted precedence: exact, then longest suffix, then longest substring") {
    ScriptedBackend b({rule(MatcherKind::exact, "Q: x\nA:", {"exact"}),
                       rule(MatcherKind::suffix, "\nA:", {"short suffix"}),
                       rule(MatcherKind::suffix, "Q: x\nA:", {"long suffix"}),
                       rule(MatcherKind::substring, "Q:", {"short sub"}),
                       rule(MatcherKind::substring, "Q: y", {"long sub"})},
                      "fallback");
    CHECK(b.lookup("Q: x\nA:", 0, 0) == "exact");
    CHECK(b.lookup("intro\nQ: x\nA:", 0, 0) == "long suffix");
    CHECK(b.lookup("Q: z\nA:", 0, 0) == "short suffix");
    CHECK(b.lookup("Q: y and more", 0, 0) == "long sub");
    CHECK(b.lookup("Q: w", 0, 0) == "short sub");
    CHECK(b.lookup("nothing", 0, 0) == "fallback");
}

TEST_CASE("sampled responses rotate by sample index") {
    ScriptedBackend b({rule(MatcherKind::exact, "p", {"a", "b", "c"})});
    CHECK(b.lookup("p", 0.0, 2) == "a");
    CHECK(b.lookup("p", 0.7, 0) == "a");
    CHECK(b.lookup("p", 0.7, 1) == "b");
    CHECK(b.lookup("p", 0.7, 5) == "c");
}

TEST_CASE("ambiguous and conflicting rules") {
    CHECK_THROWS_AS(ScriptedBackend({rule(MatcherKind::exact, "p", {"a"}), rule(MatcherKind::exact, "p", {"b"})}),
                    ConfigError);
    ScriptedBackend dup({rule(MatcherKind::exact, "p", {"a"}), rule(MatcherKind::exact, "p", {"a"})});
    CHECK(dup.lookup("p", 0, 0) == "a");

    ScriptedBackend b({rule(MatcherKind::substring, "abc", {"1"}), rule(MatcherKind::substring, "xyz", {"2"})});
    CHECK(b.lookup("--abc--", 0, 0) == "1");
    CHECK_THROWS_AS(b.lookup("abc xyz", 0, 0), BackendError);
}

TEST_CASE("script files round-trip") {
    const auto dir = testing::temp_dir("script");
    const std::vector<ScriptRule> rules = {rule(MatcherKind::suffix, "A:", {"one"}),
                                           rule(MatcherKind::substring, "Q", {"x", "y"})};
    save_script(dir / "s.jsonl", rules, "fb");
    std::string fallback;
    const auto back = load_script(dir / "s.jsonl", &fallback);
    REQUIRE(back.size() == 2);
    CHECK(back[0].pattern == "A:");
    CHECK(back[1].responses == std::vector<std::string>{"x", "y"});
    CHECK(fallback == "fb");

    std::ofstream(dir / "bad.jsonl") << "{\"matcher_kind\": \"exact\", \"pattern\": \"p\", \"response\": \"r\"}\n"
                                     << "{\"matcher_kind\": \"regex\", \"pattern\": \"p\", \"response\": \"r\"}\n";
    try {
        load_script(dir / "bad.jsonl");
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("gateway retries transport errors with doubling backoff") {
    auto flaky = std::make_shared<testing::FlakyBackend>(2, "ok");
    CallLedger ledger;
    std::vector<long> delays;
    RetryPolicy retry;
    retry.sleep = [&](std::chrono::milliseconds d) { delays.push_back(static_cast<long>(d.count())); };
    Gateway gw(flaky, nullptr, ledger, retry);
    GenerationRequest r;
    r.prompt = "p";
    r.tag = CallTag::reason_call;
    CHECK(gw.generate(r) == "ok");
    CHECK(flaky->calls == 3);
    CHECK(delays == std::vector<long>{1000, 2000});
    CHECK(ledger.snapshot().at(Phase::validation, CallTag::reason_call) == 1);
    CHECK(ledger.snapshot().generation_total() == 1);
}

TEST_CASE("retry exhaustion and backend errors surface as GenerationFailed") {
    CallLedger ledger;
    auto flaky = std::make_shared<testing::FlakyBackend>(5, "ok");
    Gateway gw(flaky, nullptr, ledger, testing::no_sleep());
    GenerationRequest r;
    r.prompt = "p";
    CHECK_THROWS_AS(gw.generate(r), GenerationFailed);
    CHECK(flaky->calls == 3);

    auto failing = std::make_shared<testing::FailingBackend>();
    Gateway gw2(failing, nullptr, ledger, testing::no_sleep());
    CHECK_THROWS_AS(gw2.generate(r), GenerationFailed);
    CHECK(ledger.snapshot().generation_total() == 0);
}

TEST_CASE("ledger phases and tags") {
    CallLedger ledger;
    auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{}, "x");
    Gateway gw(b, std::make_shared<MockEmbedder>(8), ledger);
    GenerationRequest r;
    r.prompt = "p";
    r.phase = Phase::training;
    r.tag = CallTag::ap_call;
    gw.generate(r);
    r.phase = Phase::validation;
    r.tag = CallTag::summarizer_answer;
    gw.generate(r);
    gw.generate(r);
    gw.embed("hello");
    const auto s = ledger.snapshot();
    CHECK(s.training_total() == 1);
    CHECK(s.validation_total() == 2);
    CHECK(s.at(Phase::validation, CallTag::summarizer_answer) == 2);
    CHECK(s.embedding_calls == 1);

    CallLedger other;
    Gateway g2 = gw.with_ledger(other);
    g2.generate(r);
    CHECK(other.snapshot().generation_total() == 1);
    CHECK(ledger.snapshot().generation_total() == 3);
}

TEST_CASE("mock embedder") {
    MockEmbedder e(16);
    const auto a = e.embed("Alice has the red ball");
    const auto b = e.embed("alice HAS the red ball!");
    CHECK(a == b);
    double n = 0;
    for (double x : a) n += x * x;
    CHECK(n == doctest::Approx(1.0));
    const auto z = e.embed("  ...  ");
    CHECK(std::all_of(z.begin(), z.end(), [](double x) { return x == 0.0; }));
    CHECK(e.embed("red ball") != e.embed("blue cube"));
}
