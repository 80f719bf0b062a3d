#include <doctest.h>

#include "aggregation_checks.hpp"
#include "mamr/orchestrate.hpp"
#include "support.hpp"

using namespace mamr;

namespace {

TaskExample example(const std::string& q, const std::string& gold) {
    TaskExample e;
    e.id = "ex-1";
    e.question = q;
    e.gold_answer = gold;
    e.split = Split::validation;
    return e;
}

}  // namespace

TEST_CASE("plurality vote") {
    CHECK(testing::vote_mismatches(2000) == 0);
    const std::vector<std::string> tie{"b", "a", "a", "b"};
    CHECK(plurality_vote(tie) == "b");
    CHECK_FALSE(plurality_vote(std::vector<std::string>{}).has_value());
    const auto t = tally_votes(tie);
    REQUIRE(t.size() == 2);
    CHECK(t[0].answer == "b");
    CHECK(t[0].count == 2);
}

TEST_CASE("majority-correct subset sets the vote accuracy") {
    const auto r = testing::majority_set_accuracy();
    CHECK(r.accuracy == r.expected);
}

TEST_CASE("sc agents sample at temperature with distinct seeds; greedy at zero") {
    auto recorder = std::make_shared<testing::RecordingBackend>(
        std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{}, "the red ball."));
    CallLedger ledger;
    Gateway gw(recorder, nullptr, ledger);
    ExampleContext ctx;
    const auto sc = run_example(example("q", "red ball"), parse_combo_spec("style=direct,agents=sc,m=4"), gw, ctx);
    CHECK(sc.correct);
    std::set<std::uint64_t> seeds;
    for (const auto& r : recorder->requests()) {
        CHECK(r.params.temperature == kSamplingTemperature);
        seeds.insert(r.params.seed.value());
    }
    CHECK(seeds.size() == 4);
    const auto g = run_example(example("q", "red ball"), parse_combo_spec("style=zcot,agents=greedy"), gw, ctx);
    CHECK(recorder->requests().back().params.temperature == 0.0);
    CHECK(g.traces.size() == 1);
    CHECK(g.traces[0].prompts.size() == 2);
}

TEST_CASE("summarizer adds two calls and decides the answer") {
    std::vector<ScriptRule> rules = {
        {MatcherKind::suffix, "Q: q\nA: Let's think step by step.", {"r1", "r2", "r3"}},
        {MatcherKind::suffix, "answer is ", {"the blue ball."}},
        {MatcherKind::suffix, "Solution 3: r3\nA: Let's think step by step.", {"Summary says red."}},
        {MatcherKind::suffix, "Summary says red.\nTherefore, the answer is ", {"the red ball."}},
    };
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(rules), nullptr, ledger);
    ExampleContext ctx;
    const auto combo = parse_combo_spec("style=zcot,agents=sc,m=3,aggregation=summarizer");
    const auto o = run_example(example("q", "red ball"), combo, gw, ctx);
    CHECK(o.correct);
    CHECK(o.final_canonical == "red");
    REQUIRE(o.aggregation.summarizer.has_value());
    CHECK(o.aggregation.summarizer->prompts[0].find("Solution 1: r1\nSolution 2: r2\nSolution 3: r3\n") !=
          std::string::npos);
    CHECK(o.aggregation.summarizer->decoding.temperature == 0.0);
    CHECK(ledger.snapshot().at(Phase::validation, CallTag::summarizer_reason) == 1);
    CHECK(ledger.snapshot().at(Phase::validation, CallTag::summarizer_answer) == 1);
    CHECK(ledger.snapshot().validation_total() == 3 * 2 + 2);
}

TEST_CASE("failures are recorded, not thrown") {
    CallLedger ledger;
    Gateway gw(std::make_shared<testing::FailingBackend>(), nullptr, ledger, testing::no_sleep());
    ExampleContext ctx;
    const auto o = run_example(example("q", "red ball"), parse_combo_spec("style=direct,agents=sc,m=3"), gw, ctx);
    CHECK(o.failed);
    CHECK_FALSE(o.correct);
    CHECK(o.traces.size() == 3);
    CHECK(o.traces[0].error.find("bad request") != std::string::npos);
}

TEST_CASE("analogical extraction failures are excluded from the vote") {
    std::vector<ScriptRule> rules = {{MatcherKind::substring, "# Initial Problem:", {"no box", "\\boxed{the red ball}", "nothing"}}};
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(rules), nullptr, ledger);
    ExampleContext ctx;
    const auto o = run_example(example("q", "red ball"), parse_combo_spec("style=ap,agents=sc,m=3"), gw, ctx);
    CHECK(o.traces[0].extraction_failed);
    CHECK(o.correct);
    CHECK(o.aggregation.tallies.size() == 1);
}

TEST_CASE("bank presence must match the combo") {
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{}, "x"), nullptr, ledger);
    ExampleContext ctx;
    CHECK_THROWS_AS(run_example(example("q", "x"), parse_combo_spec("style=ncot,agents=greedy,k=3,memory=frozen_random"),
                                gw, ctx),
                    ConfigError);
    CHECK_THROWS_AS(run_example(example("q", "x"), parse_combo_spec("style=zcot,agents=greedy,m=3"), gw, ctx),
                    ConfigError);
    CHECK(ledger.snapshot().generation_total() == 0);
}

TEST_CASE("outcome json") {
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{}, "the red ball."), nullptr, ledger);
    const auto o = run_example(example("q", "red ball"), parse_combo_spec("style=direct,agents=greedy"), gw, {});
    const json brief = to_json(o, false);
    const json full = to_json(o, true);
    CHECK(brief["correct"] == true);
    CHECK_FALSE(brief["traces"][0].contains("prompts"));
    CHECK(full["traces"][0]["prompts"][0] == "Q: q\nA:");
}
