#pragma once

#include <string>
#include <vector>

#include "mamr/runner.hpp"
#include "mamr/tasks.hpp"
#include "oracles.hpp"

namespace testing {

inline oracle::Calls table_row(const mamr::MethodCombo& c, std::uint64_t nt, std::uint64_t nv, std::uint64_t r) {
    using namespace mamr;
    const std::string style = c.style == Style::direct ? "direct"
                              : c.style == Style::zcot ? "zcot"
                              : c.style == Style::ncot ? "ncot"
                                                       : "ap";
    const std::string memory = is_frozen(c.memory) ? "frozen" : is_learned(c.memory) ? "learned" : "none";
    const std::uint64_t m = c.agents == Agents::greedy ? 1 : static_cast<std::uint64_t>(c.agent_count);
    return oracle::compute_table(style, memory, m, static_cast<std::uint64_t>(c.shots), nt, nv, r,
                                 c.aggregation == Aggregation::summarizer);
}

struct ComputeCheck {
    std::size_t combos = 0;
    std::vector<std::string> failures;
};

/// Runs every family on the synthetic task with a scripted reasoner and
/// compares measured call counts with the compute table.
inline ComputeCheck compute_model_check(std::size_t nt = 40, std::size_t nv = 20, int m = 10, int k = 3,
                                        int runs = 2, double p = 0.8) {
    using namespace mamr;
    ComputeCheck out;
    SynthSpec spec;
    spec.n_train = nt;
    spec.n_validation = nv;
    spec.seed = 1;
    const SynthTask task = synth_tso(spec);
    CallLedger unused;
    const Gateway gw(std::make_shared<ScriptedBackend>(reasoner_script(task, p)), std::make_shared<MockEmbedder>(16),
                     unused);
    RunConfig base;
    base.runs = runs;
    base.master_seed = 3;

    for (const Family f : {Family::main, Family::ap_vs_cot, Family::shots_vs_varied, Family::summarizer}) {
        const auto combos = enumerate_matrix(f, m, k);
        const MatrixReport report = run_matrix(combos, base, task.dataset, gw, nullptr);
        if (report.frozen_build && report.frozen_build->training_total() != 2 * nt)
            out.failures.push_back(std::string(to_string(f)) + ": frozen build made " +
                                   std::to_string(report.frozen_build->training_total()) + " calls");
        for (const auto& cr : report.combos) {
            ++out.combos;
            const auto& c = cr.stats.combo;
            const auto want = table_row(c, nt, nv, static_cast<std::uint64_t>(runs));
            const std::uint64_t per_combo_training = is_frozen(c.memory) ? 0 : want.training;
            std::string why;
            if (cr.prediction.training != want.training || cr.prediction.validation != want.validation ||
                cr.prediction.max_stored != want.stored)
                why += " prediction differs from the table;";
            if (cr.measured.training_total() != per_combo_training)
                why += " training " + std::to_string(cr.measured.training_total()) + " != " +
                       std::to_string(per_combo_training) + ";";
            if (cr.measured.validation_total() != want.validation)
                why += " validation " + std::to_string(cr.measured.validation_total()) + " != " +
                       std::to_string(want.validation) + ";";
            if (!cr.check.passed) why += " ledger check: " + cr.check.detail;
            if (!why.empty()) out.failures.push_back(std::string(to_string(f)) + " " + c.label() + ":" + why);
        }
    }
    return out;
}

}  // namespace testing
