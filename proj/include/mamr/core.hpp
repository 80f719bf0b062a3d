#pragma once

// Domain vocabulary shared by every module: method combinations, decoding
// parameters, dataset items, run configuration and deterministic seeding.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mamr {

using json = nlohmann::json;

// Error hierarchy. Configuration problems are caught by the CLI and mapped to
// exit code 2; backend errors are handled per example by the orchestrator.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct LoadError : Error {
    using Error::Error;
};

enum class Style { direct, zcot, ncot, ap, ap_memory };
enum class Agents { greedy, sc, varied };
enum class Memory { none, frozen_fixed, frozen_random, learned_random, learned_similar };
enum class Aggregation { vote, summarizer };
enum class Split { train, validation };
enum class Task { folio, raco, tso, synthetic };

std::string_view to_string(Style s);
std::string_view to_string(Agents a);
std::string_view to_string(Memory m);
std::string_view to_string(Aggregation a);
std::string_view to_string(Split s);
std::string_view to_string(Task t);

// Parsers throw ConfigError on unknown names.
Style parse_style(std::string_view s);
Agents parse_agents(std::string_view s);
Memory parse_memory(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
Split parse_split(std::string_view s);
Task parse_task(std::string_view s);

inline bool uses_memory(Memory m) { return m != Memory::none; }
inline bool is_frozen(Memory m) { return m == Memory::frozen_fixed || m == Memory::frozen_random; }
inline bool is_learned(Memory m) {
    return m == Memory::learned_random || m == Memory::learned_similar;
}
// Styles whose protocol is a reasoning call followed by an answer call.
inline bool is_two_call(Style s) { return s == Style::zcot || s == Style::ncot; }
inline bool is_analogical(Style s) { return s == Style::ap || s == Style::ap_memory; }

/// Sampling temperature used by self-consistency agents and by
/// identical-context agents feeding a summarizer.
inline constexpr double kSamplingTemperature = 0.7;
inline constexpr int kDefaultMaxTokens = 1024;
inline constexpr int kDefaultAgents = 10;
inline constexpr int kDefaultShots = 3;
inline constexpr int kDefaultRuns = 6;

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::uint64_t> seed;

    bool greedy() const { return temperature == 0.0; }
    bool operator==(const DecodingParams&) const = default;
};

struct TaskExample {
    std::string id;
    std::string question;
    std::string gold_answer;
    Split split = Split::train;

    bool operator==(const TaskExample&) const = default;
};

enum class Provenance { frozen_zcot, learned_ncot, learned_ap };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

/// A memory record used for in-context learning.
struct Exemplar {
    std::string id;
    std::string question;
    std::string chain_of_thought;
    std::string answer;
    std::optional<std::vector<double>> embedding;
    Provenance provenance = Provenance::frozen_zcot;
    std::optional<std::string> source_example_id;
    std::uint64_t created_seq = 0;

    bool operator==(const Exemplar&) const = default;
};

struct Dataset {
    Task task = Task::synthetic;
    std::vector<TaskExample> train;
    std::vector<TaskExample> validation;

    std::size_t n_train() const { return train.size(); }
    std::size_t n_validation() const { return validation.size(); }
};

struct MethodCombo {
    Style style = Style::zcot;
    Agents agents = Agents::greedy;
    int agent_count = 1;
    int shots = 0;
    Memory memory = Memory::none;
    Aggregation aggregation = Aggregation::vote;

    bool operator==(const MethodCombo&) const = default;
    std::string label() const;
};

/// Returns every violated combination rule; an empty result means the combo
/// is legal. Pure and total.
std::vector<std::string> validate_combo(const MethodCombo& combo);

json to_json(const MethodCombo& combo);
MethodCombo combo_from_json(const json& j);

/// Parses "style=ncot,agents=varied,m=10,k=3,memory=learned_random,aggregation=vote".
/// Unspecified keys take the defaults of MethodCombo; greedy implies m=1.
MethodCombo parse_combo_spec(std::string_view spec);

/// Derives a sub-seed from a master seed and an ordered label path.
///
/// h0 = splitmix64(master); h(i+1) = splitmix64(h(i) ^ fnv1a64(label(i))).
/// The chain is order-sensitive and depends only on its inputs, so agents and
/// examples can be scheduled in any order without changing their samples.
/// Throws ConfigError on an empty label list.
std::uint64_t seed_stream(std::uint64_t master_seed, const std::vector<std::string>& labels);

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

/// Uniform integer in [0, n) from a 64-bit engine, by rejection. Used instead
/// of std::uniform_int_distribution, whose output is implementation-defined.
template <class Engine>
std::uint64_t bounded(Engine& engine, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = engine();
    while (x >= limit) x = engine();
    return x % n;
}

struct ModelConfig {
    std::string name = "scripted";
    std::string backend;  // "scripted:<path>" or "http:<url>"
    std::string embedder = "mock:16";
    int max_tokens = kDefaultMaxTokens;
};

struct RunConfig {
    MethodCombo combo;
    int runs = kDefaultRuns;
    std::uint64_t master_seed = 0;
    Task task = Task::synthetic;
    std::string dataset_path;
    ModelConfig model;
};

/// Loads a run configuration document. Schema (all keys but "combo" optional):
///   {"combo": {"style", "agents", "m", "k", "memory", "aggregation"},
///    "runs": 6, "master_seed": 0, "task": "synthetic", "dataset": "<path>",
///    "model": {"name", "backend", "embedder", "max_tokens"}}
RunConfig run_config_from_json(const json& j);
json to_json(const RunConfig& config);

}  // namespace mamr
