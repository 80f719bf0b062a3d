#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "mamr/orchestrate.hpp"
#include "mamr/runner.hpp"
#include "mamr/tasks.hpp"
#include "oracles.hpp"

namespace testing {

/// plurality_vote against the brute-force mode on random multisets.
inline std::size_t vote_mismatches(int trials = 10000, std::uint64_t seed = 5) {
    std::mt19937_64 rng(seed);
    std::size_t bad = 0;
    for (int t = 0; t < trials; ++t) {
        const auto n = 1 + mamr::bounded(rng, 12);
        const auto alphabet = 1 + mamr::bounded(rng, 5);
        std::vector<std::string> xs;
        for (std::uint64_t i = 0; i < n; ++i) xs.push_back(std::string(1, static_cast<char>('a' + mamr::bounded(rng, alphabet))));
        const auto got = mamr::plurality_vote(xs);
        if (!got || *got != oracle::mode_first_occurrence(xs)) ++bad;
    }
    return bad;
}

struct MajorityResult {
    double accuracy = 0;
    double expected = 0;
};

/// Ten SC agents on a direct prompt. For ids in S six agents answer
/// correctly and the other four split over two wrong answers; elsewhere four
/// answer correctly and six agree on one wrong answer.
inline MajorityResult majority_set_accuracy(std::size_t n_validation = 20, std::uint64_t seed = 3) {
    using namespace mamr;
    SynthSpec spec;
    spec.n_train = 0;
    spec.n_validation = n_validation;
    spec.seed = seed;
    const SynthTask task = synth_tso(spec);

    std::set<std::string> s;
    std::mt19937_64 rng(seed);
    for (const auto& e : task.dataset.validation)
        if (bounded(rng, 5) < 3) s.insert(e.id);

    std::vector<ScriptRule> rules;
    for (std::size_t i = 0; i < task.dataset.validation.size(); ++i) {
        const auto& e = task.dataset.validation[i];
        const auto& p = task.puzzles[i];
        const std::string right = "the " + e.gold_answer + ".";
        const std::string wrong1 = "the " + p.final_objects[(p.query + 1) % p.final_objects.size()] + ".";
        const std::string wrong2 = "the " + p.final_objects[(p.query + 2) % p.final_objects.size()] + ".";
        std::vector<std::string> responses;
        if (s.count(e.id))
            responses = {wrong1, right, wrong2, right, right, wrong1, right, wrong2, right, right};
        else
            responses = {wrong1, right, wrong1, wrong1, right, wrong1, right, wrong1, right, wrong1};
        rules.push_back({MatcherKind::suffix, "Q: " + e.question + "\nA:", responses});
    }
    CallLedger ledger;
    Gateway gw(std::make_shared<ScriptedBackend>(rules), nullptr, ledger);
    RunConfig cfg;
    cfg.combo = parse_combo_spec("style=direct,agents=sc,m=10");
    cfg.runs = 1;
    cfg.master_seed = seed;
    const auto runs = execute(cfg, task.dataset, gw, nullptr);
    return {runs.at(0).accuracy, static_cast<double>(s.size()) / static_cast<double>(n_validation)};
}

}  // namespace testing
