#pragma once

// Exemplar memory banks: construction (frozen single-pass ZCoT, learned
// incremental NCoT or analogical), retrieval and JSONL persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"

namespace mamr {

enum class BankKind { frozen, learned_ncot, learned_ap };

std::string_view to_string(BankKind kind);
BankKind parse_bank_kind(std::string_view s);

/// Append-only exemplar collection. Once sealed (validation time) further
/// appends throw.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(BankKind kind, std::string task, std::string model);

    /// Appends with the next created_seq; fills in an id when empty.
    /// Throws ConfigError on invariant violations or when sealed.
    const Exemplar& append(Exemplar exemplar);
    /// Appends keeping the exemplar's own id and created_seq (loading).
    void restore(Exemplar exemplar);

    void seal() { sealed_ = true; }
    bool sealed() const { return sealed_; }

    const std::vector<Exemplar>& exemplars() const { return exemplars_; }
    std::size_t size() const { return exemplars_.size(); }
    bool empty() const { return exemplars_.empty(); }
    BankKind kind() const { return kind_; }
    const std::string& task() const { return task_; }
    const std::string& model() const { return model_; }
    std::optional<std::size_t> embedding_dim() const { return embedding_dim_; }
    /// True when every exemplar carries an embedding (vacuously for empty).
    bool fully_embedded() const { return embedded_count_ == exemplars_.size(); }
    /// Row-major embedding matrix, valid when fully_embedded().
    std::span<const double> embedding_rows() const { return rows_; }

    bool operator==(const MemoryBank& other) const;

private:
    void check(const Exemplar& e) const;
    void push(Exemplar e);

    BankKind kind_ = BankKind::frozen;
    std::string task_;
    std::string model_;
    std::vector<Exemplar> exemplars_;
    std::optional<std::size_t> embedding_dim_;
    std::size_t embedded_count_ = 0;
    std::vector<double> rows_;
    bool sealed_ = false;
};

enum class RetrievalMode { fixed, random, similar };

struct RetrievalSpec {
    RetrievalMode mode = RetrievalMode::random;
    int k = 1;
    std::optional<std::uint64_t> fixed_seed;
};

/// Chooses up to min(k, |eligible|) exemplars for `query`, never returning
/// one whose source_example_id equals query.id.
///  fixed:   a permutation of the bank drawn once from fixed_seed; the first
///           k eligible entries, identical for every query.
///  random:  a fresh sample without replacement seeded by rng_seed.
///  similar: nearest by cosine distance to query_embedding, ties broken by
///           lower created_seq; nearest first.
/// Throws ConfigError for k < 1, fixed without seed, or similar mode without
/// embeddings.
std::vector<Exemplar> retrieve(const MemoryBank& bank, const RetrievalSpec& spec,
                               const TaskExample& query, std::uint64_t rng_seed,
                               std::span<const double> query_embedding = {});

// ---------------------------------------------------------------------------
// Training

struct AgentsSpec {
    Agents agents = Agents::greedy;
    int count = 1;
};

struct TrainingConfig {
    Task task = Task::synthetic;
    std::string model_name = "scripted";
    int shots = kDefaultShots;
    AgentsSpec agents;
    RetrievalMode retrieval = RetrievalMode::random;  // random or similar
    std::uint64_t seed = 0;
    int max_tokens = kDefaultMaxTokens;
    // Store an embedding with every exemplar (required for similar retrieval).
    bool embed_exemplars = false;
};

/// Per-example record of a training pass.
struct TrainingStep {
    std::string example_id;
    std::size_t bank_size_before = 0;
    std::vector<std::vector<std::string>> context_ids;  // per agent
    std::size_t appended = 0;
    std::size_t failed_agents = 0;
};

struct TrainingResult {
    MemoryBank bank;
    std::vector<TrainingStep> steps;
    std::size_t failures = 0;        // agent attempts lost to backend errors
    std::size_t parse_warnings = 0;  // correct AP answers with unusable problem sections
};

/// Single greedy ZCoT pass over `train` in order, keeping correct answers.
TrainingResult build_frozen(std::span<const TaskExample> train, Gateway& gateway, Task task,
                            const std::string& model_name, int max_tokens = kDefaultMaxTokens,
                            bool embed_exemplars = false);

/// Incremental NCoT training. Each agent sees min(K, |bank|) exemplars;
/// every agent whose answer matches the gold label contributes its own
/// question and chain of thought. Appends follow agent-index order.
TrainingResult train_learned_ncot(std::span<const TaskExample> train, Gateway& gateway,
                                  const TrainingConfig& config);

/// Incremental analogical training. Correct agents contribute up to K of the
/// problems they generated for themselves, verbatim.
TrainingResult train_learned_ap(std::span<const TaskExample> train, Gateway& gateway,
                                const TrainingConfig& config);

/// Context exemplars for one agent during training or validation. SC agents
/// share the sample drawn under the "shared" label; varied agents draw under
/// "agent:<i>".
std::vector<Exemplar> agent_context(const MemoryBank& bank, RetrievalMode mode, int shots,
                                    Agents agents, int agent_index, const TaskExample& query,
                                    std::uint64_t example_seed, std::optional<std::uint64_t> fixed_seed,
                                    std::span<const double> query_embedding);

// ---------------------------------------------------------------------------
// Persistence

/// One JSON object per line: {id, question, chain_of_thought, answer,
/// embedding (array or null), provenance, source_example_id, created_seq}.
/// Bank metadata (kind, task, model) goes to "<path>.meta.json".
void save_bank(const MemoryBank& bank, const std::filesystem::path& path);

/// Throws LoadError naming the first bad line. Without a metadata file the
/// kind is inferred from the exemplars' provenance.
MemoryBank load_bank(const std::filesystem::path& path);

json to_json(const Exemplar& e);
Exemplar exemplar_from_json(const json& j);

}  // namespace mamr
