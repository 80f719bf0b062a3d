#pragma once

// Experiment matrices, repeated runs, error bars, call-count predictions and
// results files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"
#include "mamr/memory_bank.hpp"
#include "mamr/orchestrate.hpp"

namespace mamr {

enum class Family { main, ap_vs_cot, shots_vs_varied, summarizer };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

/// Legal combos of a family. `m` and `k` are the agent count and shots used
/// by the main, ap_vs_cot and summarizer families; shots_vs_varied has its
/// own fixed settings.
std::vector<MethodCombo> enumerate_matrix(Family family, int m = kDefaultAgents, int k = kDefaultShots);

/// Closed-form generation-call counts over R runs.
///  training:   0 without memory; 2*N_t for a frozen bank (built once and
///              shared, so not multiplied by R); 2*M*N_t*R for learned NCoT;
///              M*N_t*R for learned analogical memory.
///  validation: M*N_v*R for single-call styles, 2*M*N_v*R for ZCoT/NCoT,
///              plus 2*N_v*R with a summarizer.
///  max_stored: bank bound summed over runs (N_t for frozen).
/// Greedy combos use M = 1.
struct CallPrediction {
    std::uint64_t training = 0;
    std::uint64_t validation = 0;
    std::uint64_t max_stored = 0;
    bool shared_frozen_build = false;
};

CallPrediction predict_calls(const MethodCombo& combo, std::uint64_t n_train, std::uint64_t n_validation,
                             std::uint64_t runs);

/// (mean, 2 * sample standard deviation); the deviation is 0 for one value.
/// Throws Error on an empty input.
std::pair<double, double> error_bars(std::span<const double> values);

struct RunResult {
    MethodCombo combo;
    int run_index = 0;
    std::uint64_t run_seed = 0;
    std::vector<ExampleOutcome> outcomes;
    std::size_t correct = 0;
    std::size_t failures = 0;  // examples whose agents all failed
    double accuracy = 0.0;
    std::optional<std::size_t> bank_size;  // learned banks only
    std::size_t training_failures = 0;
    LedgerSnapshot ledger;
};

struct ComboStats {
    Task task = Task::synthetic;
    std::string model;
    MethodCombo combo;
    double mean = 0.0;       // fraction in [0, 1]
    double two_sigma = 0.0;  // fraction
    int runs = 0;
    std::size_t failures = 0;
};

ComboStats summarize_runs(Task task, const std::string& model, const MethodCombo& combo,
                          std::span<const RunResult> runs);

struct ExecuteOptions {
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Executes R runs of config.combo. Run r uses
/// seed_stream(master_seed, {"run:<r>"}). Learned banks are trained afresh in
/// every run; frozen combos use `frozen_bank`. Throws ConfigError before any
/// model call if the combo is invalid, a required bank is missing, or similar
/// retrieval has no embedder.
std::vector<RunResult> execute(const RunConfig& config, const Dataset& dataset, const Gateway& gateway,
                               const MemoryBank* frozen_bank, const ExecuteOptions& options = {});

struct LedgerCheck {
    bool passed = true;
    bool skipped = false;  // backend failures make counts incomparable
    std::string detail;
};

/// Compares measured call counts with predict_calls. `frozen_build` is the
/// ledger of the shared frozen-bank build, when it happened in this process.
LedgerCheck check_ledger(const MethodCombo& combo, const CallPrediction& prediction,
                         const LedgerSnapshot& measured, std::span<const RunResult> runs,
                         const std::optional<LedgerSnapshot>& frozen_build);

struct ComboReport {
    ComboStats stats;
    std::vector<RunResult> runs;
    CallPrediction prediction;
    LedgerSnapshot measured;
    LedgerCheck check;
};

struct MatrixReport {
    std::vector<ComboReport> combos;
    std::optional<LedgerSnapshot> frozen_build;
    std::optional<std::size_t> frozen_size;
    bool all_checks_passed() const;
};

/// Runs every combo with a common seed, building the frozen bank once when
/// one is needed and `frozen_bank` is null.
MatrixReport run_matrix(std::span<const MethodCombo> combos, const RunConfig& base, const Dataset& dataset,
                        const Gateway& gateway, const MemoryBank* frozen_bank,
                        const ExecuteOptions& options = {});

// ---------------------------------------------------------------------------
// Results files

inline constexpr std::string_view kResultsHeader =
    "task,model,style,agents,M,K,memory,aggregation,mean,two_sigma,R,failures";

/// Rows ordered by (task, model, style, agents, memory, M, K, aggregation).
void sort_stats(std::vector<ComboStats>& stats);

/// CSV with kResultsHeader; mean and two_sigma as percentages with one
/// decimal. Throws Error if the file cannot be written.
void write_results(std::vector<ComboStats> stats, const std::filesystem::path& path);
std::string format_results(std::vector<ComboStats> stats);

/// Parses a results CSV (percentages converted back to fractions). Throws
/// LoadError on a schema mismatch.
std::vector<ComboStats> read_results(const std::filesystem::path& path);

json to_json(const RunResult& run, bool full_traces);

/// One RunResult per line, in the given order.
void write_runs(std::span<const RunResult> runs, Task task, const std::string& model,
                const std::filesystem::path& path, bool full_traces);

}  // namespace mamr
