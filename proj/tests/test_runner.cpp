#include <doctest.h>

#include <random>
#include <set>

#include "compute_checks.hpp"
#include "mamr/canonicalize.hpp"
#include "mamr/runner.hpp"
#include "mamr/tasks.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mamr;

namespace {

bool contains(const std::vector<MethodCombo>& cs, const std::string& spec) {
    const auto c = parse_combo_spec(spec);
    return std::find(cs.begin(), cs.end(), c) != cs.end();
}

}  // namespace

TEST_CASE("family matrices") {
    const auto main = enumerate_matrix(Family::main);
    CHECK(main.size() == 14);
    CHECK(contains(main, "style=ncot,agents=varied,m=10,k=3,memory=learned_random"));
    CHECK_FALSE(contains(main, "style=ncot,agents=varied,m=10,k=3,memory=learned_similar"));
    CHECK(contains(main, "style=direct,agents=sc,m=10,k=0,memory=none"));

    const auto shots = enumerate_matrix(Family::shots_vs_varied);
    REQUIRE(shots.size() == 3);
    CHECK(contains(shots, "style=ncot,agents=greedy,m=1,k=15,memory=frozen_random"));
    CHECK(contains(shots, "style=ncot,agents=sc,m=5,k=15,memory=frozen_random"));
    CHECK(contains(shots, "style=ncot,agents=varied,m=5,k=3,memory=frozen_random"));

    const auto summ = enumerate_matrix(Family::summarizer);
    CHECK(summ.size() == 10);
    for (const auto& c : summ) CHECK(c.agent_count == 10);
    std::size_t with_summarizer = 0;
    for (const auto& c : summ) with_summarizer += c.aggregation == Aggregation::summarizer;
    CHECK(with_summarizer == 5);

    const auto ap = enumerate_matrix(Family::ap_vs_cot);
    CHECK(ap.size() == 14);
    CHECK(contains(ap, "style=ap_memory,agents=varied,m=10,k=3,memory=learned_random"));
    for (const Family f : {Family::main, Family::ap_vs_cot, Family::shots_vs_varied, Family::summarizer})
        for (const auto& c : enumerate_matrix(f)) CHECK(validate_combo(c).empty());
    CHECK(parse_family("summarizer") == Family::summarizer);
    CHECK_THROWS_AS(parse_family("ablation"), ConfigError);
}

TEST_CASE("predict_calls follows the compute table") {
    const auto direct = parse_combo_spec("style=direct,agents=sc,m=10");
    CHECK(predict_calls(direct, 1004, 204, 6).validation == 10 * 204 * 6);
    const auto zcot = parse_combo_spec("style=zcot,agents=greedy");
    CHECK(predict_calls(zcot, 1004, 204, 6).validation == 2448);
    const auto ncot = parse_combo_spec("style=ncot,agents=varied,m=10,k=3,memory=learned_random");
    const auto p = predict_calls(ncot, 1004, 204, 6);
    CHECK(p.training == 2 * 10 * 1004 * 6);
    CHECK(p.max_stored == 10 * 1004 * 6);
    const auto ap = parse_combo_spec("style=ap_memory,agents=sc,m=10,k=3,memory=learned_similar");
    CHECK(predict_calls(ap, 40, 20, 2).max_stored == 10 * 3 * 40 * 2);
    CHECK(predict_calls(ap, 40, 20, 2).training == 10 * 40 * 2);
    const auto frozen = parse_combo_spec("style=ncot,agents=sc,m=10,k=3,memory=frozen_fixed,aggregation=summarizer");
    const auto pf = predict_calls(frozen, 40, 20, 2);
    CHECK(pf.training == 80);
    CHECK(pf.shared_frozen_build);
    CHECK(pf.validation == 2 * 10 * 20 * 2 + 2 * 20 * 2);
}

TEST_CASE("error bars") {
    const std::vector<double> flat{0.5, 0.5, 0.5};
    CHECK(error_bars(flat) == std::pair<double, double>{0.5, 0.0});
    const std::vector<double> two{0.4, 0.6};
    const auto [m, s] = error_bars(two);
    CHECK(std::abs(m - 0.5) <= 1e-12);
    CHECK(std::abs(s - 0.28284271247461906) <= 1e-12);
    const std::vector<double> one{0.7};
    CHECK(error_bars(one) == std::pair<double, double>{0.7, 0.0});
    CHECK_THROWS_AS(error_bars(std::vector<double>{}), Error);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> xs(2 + t % 9);
        for (auto& x : xs) x = u(rng);
        const auto got = error_bars(xs);
        const auto want = oracle::mean_two_sigma(xs);
        CHECK(std::abs(got.first - want.first) <= 1e-12);
        CHECK(std::abs(got.second - want.second) <= 1e-12);
    }
}

TEST_CASE("perfect reasoner scores 1.0 and p80 scores the scripted fraction") {
    SynthSpec spec;
    spec.n_train = 20;
    spec.n_validation = 200;
    const SynthTask task = synth_tso(spec);
    CallLedger unused;
    RunConfig cfg;
    cfg.combo = parse_combo_spec("style=direct,agents=greedy");
    cfg.runs = 2;
    Gateway perfect(std::make_shared<ScriptedBackend>(reasoner_script(task, 1.0)), nullptr, unused);
    for (const auto& r : execute(cfg, task.dataset, perfect, nullptr)) CHECK(r.accuracy == 1.0);

    const ScriptedBackend p80(reasoner_script(task, 0.8));
    std::size_t scripted_right = 0;
    for (const auto& e : task.dataset.validation)
        scripted_right += answers_match(Task::synthetic, p80.lookup("Q: " + e.question + "\nA:", 0, 0), e.gold_answer);
    Gateway gw(std::make_shared<ScriptedBackend>(reasoner_script(task, 0.8)), nullptr, unused);
    cfg.runs = 1;
    const auto runs = execute(cfg, task.dataset, gw, nullptr);
    CHECK(runs[0].accuracy == static_cast<double>(scripted_right) / 200.0);
}

TEST_CASE("six runs use distinct seeds from the seed stream") {
    SynthSpec spec;
    spec.n_train = 10;
    spec.n_validation = 10;
    const SynthTask task = synth_tso(spec);
    CallLedger unused;
    Gateway gw(std::make_shared<ScriptedBackend>(reasoner_script(task, 0.8)), nullptr, unused);
    RunConfig cfg;
    cfg.combo = parse_combo_spec("style=ncot,agents=varied,m=3,k=2,memory=learned_random");
    cfg.runs = 6;
    cfg.master_seed = 21;
    const auto runs = execute(cfg, task.dataset, gw, nullptr);
    REQUIRE(runs.size() == 6);
    std::set<std::uint64_t> seeds;
    for (int r = 0; r < 6; ++r) {
        CHECK(runs[r].run_seed == seed_stream(21, {"run:" + std::to_string(r)}));
        seeds.insert(runs[r].run_seed);
        CHECK(runs[r].ledger.training_total() == 2 * 3 * 10);
    }
    CHECK(seeds.size() == 6);
    CHECK(summarize_runs(Task::synthetic, "toy", cfg.combo, runs).runs == 6);
}

TEST_CASE("missing banks and embedders are configuration errors before any call") {
    SynthSpec spec;
    const SynthTask task = synth_tso(spec);
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(reasoner_script(task, 1.0)), nullptr, ledger);
    RunConfig cfg;
    cfg.combo = parse_combo_spec("style=ncot,agents=sc,m=3,k=3,memory=frozen_random");
    CHECK_THROWS_AS(execute(cfg, task.dataset, gw, nullptr), ConfigError);
    cfg.combo = parse_combo_spec("style=ncot,agents=sc,m=3,k=3,memory=learned_similar");
    CHECK_THROWS_AS(execute(cfg, task.dataset, gw, nullptr), ConfigError);
    CHECK(ledger.snapshot().generation_total() == 0);
}

TEST_CASE("ledger equals the compute table for every family (small)") {
    const auto r = testing::compute_model_check(8, 4, 3, 2, 2);
    for (const auto& f : r.failures) MESSAGE(f);
    CHECK(r.failures.empty());
    CHECK(r.combos == 41);
}

TEST_CASE("ledger check flags mismatches") {
    const auto combo = parse_combo_spec("style=zcot,agents=greedy");
    const auto p = predict_calls(combo, 10, 5, 1);
    LedgerSnapshot s;
    s.validation[0] = 9;
    CHECK_FALSE(check_ledger(combo, p, s, {}, std::nullopt).passed);
    s.validation[0] = 5;
    s.validation[1] = 5;
    CHECK(check_ledger(combo, p, s, {}, std::nullopt).passed);
}

TEST_CASE("results csv") {
    const auto dir = testing::temp_dir("results");
    ComboStats a;
    a.task = Task::tso;
    a.model = "pro";
    a.combo = parse_combo_spec("style=zcot,agents=greedy");
    a.mean = 0.55;
    a.two_sigma = 0.03;
    a.runs = 6;
    ComboStats b = a;
    b.task = Task::folio;
    b.combo = parse_combo_spec("style=direct,agents=sc,m=10");
    b.mean = 0.5;
    b.failures = 2;
    write_results({a}, dir / "one.csv");
    CHECK(testing::read_file(dir / "one.csv") ==
          std::string(kResultsHeader) + "\ntso,pro,zcot,greedy,1,0,none,vote,55.0,3.0,6,0\n");

    write_results({a, b}, dir / "two.csv");
    const auto back = read_results(dir / "two.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].task == Task::folio);
    CHECK(std::abs(back[0].mean - 0.5) <= 1e-9);
    CHECK(std::abs(back[1].mean - 0.55) <= 1e-9);
    CHECK(std::abs(back[1].two_sigma - 0.03) <= 1e-9);
    CHECK(back[0].failures == 2);
    CHECK(back[1].combo == a.combo);

    std::ofstream(dir / "bad.csv") << "task,model\n";
    CHECK_THROWS_AS(read_results(dir / "bad.csv"), LoadError);
}
