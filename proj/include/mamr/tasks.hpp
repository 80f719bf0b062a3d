#pragma once

// Dataset loading (FOLIO, BIG-bench colored objects / shuffled objects) and
// the synthetic shuffled-objects task with scripted reasoners.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"

namespace mamr {

struct RejectedRecord {
    std::string file;
    std::size_t line = 0;
    std::string reason;
};

struct LoadReport {
    std::vector<RejectedRecord> rejected;
    std::vector<std::string> warnings;
};

/// Published split sizes; loaders warn (not fail) on a mismatch.
struct ExpectedCounts {
    std::size_t train;
    std::size_t validation;
};
ExpectedCounts expected_counts(Task task);

/// FOLIO v0.0: `dir` holds folio-train.jsonl and folio-validation.jsonl with
/// {premises (array or string), conclusion, label}. Questions list the
/// premises one per line followed by
/// "Is the conclusion True, False, or Unknown? <conclusion>".
/// Records without a label are rejected and reported with their line.
Dataset load_folio(const std::filesystem::path& dir, LoadReport* report = nullptr);

/// BIG-bench tasks. Accepted layouts:
///  * a directory with train.jsonl / validation.jsonl ({"inputs"|"input",
///    "targets"|"target"} per line, the TFDS export layout);
///  * a task.json file, or a directory whose task.json files (searched
///    recursively, sorted by path) are concatenated. Each file's examples are
///    split in order: the first 80% train, the rest validation.
/// Gold is "target" (first element if a list) or the best-scored key of
/// "target_scores". Throws ConfigError for tasks other than raco/tso.
Dataset load_bigbench(const std::filesystem::path& path, Task task, LoadReport* report = nullptr);

/// JSONL of {id, question, gold_answer, split}, the synthetic dataset format.
Dataset load_examples_jsonl(const std::filesystem::path& path, Task task);
void save_examples_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Dispatches on task; synthetic datasets use load_examples_jsonl.
Dataset load_dataset(Task task, const std::filesystem::path& path, LoadReport* report = nullptr);

// ---------------------------------------------------------------------------
// Synthetic shuffled objects

struct SynthSpec {
    std::size_t n_train = 40;
    std::size_t n_validation = 20;
    int n_people = 3;
    int n_swaps = 3;
    std::uint64_t seed = 0;
};

struct SwapPuzzle {
    std::vector<std::string> people;
    std::vector<std::string> initial;  // initial[i] is held by people[i]
    std::vector<std::pair<int, int>> swaps;
    int query = 0;
    std::vector<std::string> final_objects;
};

struct SynthTask {
    Dataset dataset;
    std::vector<SwapPuzzle> puzzles;  // train then validation, aligned with the examples
};

inline constexpr int kMaxSynthPeople = 10;

/// Deterministic in spec. Throws ConfigError unless 2 <= n_people <= 10 and
/// n_swaps >= 0.
SynthTask synth_tso(const SynthSpec& spec);

/// Ids answered correctly by a p-correct reasoner: in each split, the
/// round(p * n) ids ranked first by a seeded hash.
std::set<std::string> reasoner_correct_ids(const Dataset& dataset, double p);

/// Scripted reasoner covering the direct, ZCoT/NCoT, analogical and
/// summarizer prompts of every example. Correct on reasoner_correct_ids(p);
/// otherwise it names the object of the next person. p = 1 is the perfect
/// reasoner.
std::vector<ScriptRule> reasoner_script(const SynthTask& task, double p);

}  // namespace mamr
