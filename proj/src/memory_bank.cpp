#include "mamr/memory_bank.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mamr/agent.hpp"
#include "mamr/canonicalize.hpp"
#include "mamr/kernels.hpp"
#include "mamr/log.hpp"
#include "mamr/prompting.hpp"

namespace mamr {

std::string_view to_string(BankKind kind) {
    switch (kind) {
        case BankKind::frozen:
            return "frozen";
        case BankKind::learned_ncot:
            return "learned_ncot";
        case BankKind::learned_ap:
            return "learned_ap";
    }
    return "?";
}

BankKind parse_bank_kind(std::string_view s) {
    if (s == "frozen") return BankKind::frozen;
    if (s == "learned_ncot") return BankKind::learned_ncot;
    if (s == "learned_ap") return BankKind::learned_ap;
    throw ConfigError("unknown bank kind '" + std::string(s) + "'");
}

// --- bank ------------------------------------------------------------------

MemoryBank::MemoryBank(BankKind kind, std::string task, std::string model)
    : kind_(kind), task_(std::move(task)), model_(std::move(model)) {}

void MemoryBank::check(const Exemplar& e) const {
    if (sealed_) throw ConfigError("memory bank is sealed; no exemplars may be added");
    if (e.chain_of_thought.empty() && e.provenance != Provenance::learned_ap)
        throw ConfigError("exemplar '" + e.id + "' needs a chain of thought");
    if (e.question.empty()) throw ConfigError("exemplar '" + e.id + "' has an empty question");
    if (e.embedding) {
        if (e.embedding->empty()) throw ConfigError("exemplar '" + e.id + "' has an empty embedding");
        if (embedding_dim_ && *embedding_dim_ != e.embedding->size())
            throw ConfigError("exemplar '" + e.id + "' embedding dimension " +
                              std::to_string(e.embedding->size()) + " != bank dimension " +
                              std::to_string(*embedding_dim_));
    }
}

void MemoryBank::push(Exemplar e) {
    if (e.embedding) {
        embedding_dim_ = e.embedding->size();
        ++embedded_count_;
        rows_.insert(rows_.end(), e.embedding->begin(), e.embedding->end());
    }
    exemplars_.push_back(std::move(e));
}

const Exemplar& MemoryBank::append(Exemplar e) {
    e.created_seq = exemplars_.empty() ? 0 : exemplars_.back().created_seq + 1;
    if (e.id.empty()) {
        std::ostringstream id;
        id << to_string(e.provenance) << '-' << e.created_seq;
        e.id = id.str();
    }
    check(e);
    push(std::move(e));
    return exemplars_.back();
}

void MemoryBank::restore(Exemplar e) {
    check(e);
    if (!exemplars_.empty() && e.created_seq <= exemplars_.back().created_seq)
        throw ConfigError("created_seq must increase strictly (exemplar '" + e.id + "')");
    push(std::move(e));
}

bool MemoryBank::operator==(const MemoryBank& o) const {
    return kind_ == o.kind_ && task_ == o.task_ && model_ == o.model_ &&
           exemplars_ == o.exemplars_ && embedding_dim_ == o.embedding_dim_;
}

// --- retrieval -------------------------------------------------------------

std::vector<Exemplar> retrieve(const MemoryBank& bank, const RetrievalSpec& spec,
                               const TaskExample& query, std::uint64_t rng_seed,
                               std::span<const double> query_embedding) {
    if (spec.k < 1) throw ConfigError("retrieval needs K >= 1");
    const auto& all = bank.exemplars();
    auto eligible = [&](std::size_t i) {
        return !(all[i].source_example_id && *all[i].source_example_id == query.id);
    };
    const auto k = static_cast<std::size_t>(spec.k);
    std::vector<Exemplar> out;
    if (all.empty()) return out;

    switch (spec.mode) {
        case RetrievalMode::fixed: {
            if (!spec.fixed_seed) throw ConfigError("fixed retrieval needs a fixed seed");
            std::vector<std::size_t> order(all.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 rng(*spec.fixed_seed);
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[bounded(rng, i)]);
            for (std::size_t i : order) {
                if (out.size() == k) break;
                if (eligible(i)) out.push_back(all[i]);
            }
            break;
        }
        case RetrievalMode::random: {
            std::vector<std::size_t> pool;
            pool.reserve(all.size());
            for (std::size_t i = 0; i < all.size(); ++i)
                if (eligible(i)) pool.push_back(i);
            const std::size_t take = std::min(k, pool.size());
            std::mt19937_64 rng(rng_seed);
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = i + bounded(rng, pool.size() - i);
                std::swap(pool[i], pool[j]);
                out.push_back(all[pool[i]]);
            }
            break;
        }
        case RetrievalMode::similar: {
            if (!bank.fully_embedded() || !bank.embedding_dim())
                throw ConfigError("similar retrieval needs embeddings on every exemplar");
            if (query_embedding.size() != *bank.embedding_dim())
                throw ConfigError("similar retrieval needs a query embedding of dimension " +
                                  std::to_string(*bank.embedding_dim()));
            std::vector<double> dist(all.size());
            kernels::cosine_distances(query_embedding, bank.embedding_rows(), dist);
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < all.size(); ++i)
                if (eligible(i)) pool.push_back(i);
            const std::size_t take = std::min(k, pool.size());
            auto closer = [&](std::size_t a, std::size_t b) {
                if (dist[a] != dist[b]) return dist[a] < dist[b];
                return all[a].created_seq < all[b].created_seq;
            };
            std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take),
                              pool.end(), closer);
            for (std::size_t i = 0; i < take; ++i) out.push_back(all[pool[i]]);
            break;
        }
    }
    return out;
}

std::vector<Exemplar> agent_context(const MemoryBank& bank, RetrievalMode mode, int shots,
                                    Agents agents, int agent_index, const TaskExample& query,
                                    std::uint64_t example_seed, std::optional<std::uint64_t> fixed_seed,
                                    std::span<const double> query_embedding) {
    if (shots < 1 || bank.empty()) return {};
    const std::string label =
        agents == Agents::varied ? "agent:" + std::to_string(agent_index) : std::string("shared");
    const RetrievalSpec spec{mode, shots, fixed_seed};
    return retrieve(bank, spec, query, seed_stream(example_seed, {"retrieve", label}), query_embedding);
}

// --- training --------------------------------------------------------------

namespace {

DecodingParams agent_params(Agents agents, int agent_index, std::uint64_t example_seed, int max_tokens) {
    DecodingParams p;
    p.max_tokens = max_tokens;
    if (agents == Agents::sc) {
        p.temperature = kSamplingTemperature;
        p.seed = seed_stream(example_seed, {"decode", "agent:" + std::to_string(agent_index)});
    }
    return p;
}

int agent_count(const AgentsSpec& spec) { return spec.agents == Agents::greedy ? 1 : spec.count; }

void validate_training(const TrainingConfig& c) {
    if (c.shots < 1) throw ConfigError("learned memory training needs K >= 1");
    if (c.agents.count < 1) throw ConfigError("learned memory training needs M >= 1");
    if (c.retrieval == RetrievalMode::fixed)
        throw ConfigError("learned memory training uses random or similar retrieval");
    if (c.agents.agents == Agents::varied && c.retrieval != RetrievalMode::random)
        throw ConfigError("varied agents require random retrieval");
}

std::uint64_t example_seed(std::uint64_t seed, const TaskExample& ex) {
    return seed_stream(seed, {"train", "example:" + ex.id});
}

std::optional<std::vector<double>> maybe_embed(Gateway& gw, bool enabled, const std::string& text) {
    if (!enabled) return std::nullopt;
    return gw.embed(text);
}

template <class Render, class Harvest>
TrainingResult train_incremental(std::span<const TaskExample> train, Gateway& gateway,
                                 const TrainingConfig& config, BankKind kind, Render&& render,
                                 Harvest&& harvest) {
    validate_training(config);
    TrainingResult result{MemoryBank(kind, std::string(to_string(config.task)), config.model_name), {}, 0, 0};
    const bool similar = config.retrieval == RetrievalMode::similar;
    const int m = agent_count(config.agents);

    for (const auto& ex : train) {
        TrainingStep step;
        step.example_id = ex.id;
        step.bank_size_before = result.bank.size();
        const int shots = static_cast<int>(std::min<std::size_t>(config.shots, result.bank.size()));
        const std::uint64_t seed = example_seed(config.seed, ex);

        std::vector<double> query_embedding;
        if (similar && shots > 0) query_embedding = gateway.embed(ex.question);

        std::vector<std::optional<Attempt>> attempts(m);
        for (int j = 0; j < m; ++j) {
            auto context = agent_context(result.bank, config.retrieval, shots, config.agents.agents, j,
                                         ex, seed, std::nullopt, query_embedding);
            std::vector<std::string> ids;
            for (const auto& e : context) ids.push_back(e.id);
            step.context_ids.push_back(std::move(ids));
            try {
                attempts[j] = run_protocol(gateway, render(context, ex),
                                           agent_params(config.agents.agents, j, seed, config.max_tokens),
                                           Phase::training, j);
            } catch (const GenerationFailed& e) {
                ++result.failures;
                ++step.failed_agents;
                log::warn("training example " + ex.id + " agent " + std::to_string(j) + ": " + e.what());
            }
        }

        const std::size_t before = result.bank.size();
        for (int j = 0; j < m; ++j) {
            const auto& a = attempts[j];
            if (!a || !a->raw_answer || !answers_match(config.task, *a->raw_answer, ex.gold_answer)) continue;
            harvest(result, ex, *a);
        }
        step.appended = result.bank.size() - before;
        result.steps.push_back(std::move(step));
    }
    return result;
}

}  // namespace

TrainingResult build_frozen(std::span<const TaskExample> train, Gateway& gateway, Task task,
                            const std::string& model_name, int max_tokens, bool embed_exemplars) {
    TrainingResult result{MemoryBank(BankKind::frozen, std::string(to_string(task)), model_name), {}, 0, 0};
    DecodingParams params;
    params.max_tokens = max_tokens;
    for (const auto& ex : train) {
        TrainingStep step;
        step.example_id = ex.id;
        step.bank_size_before = result.bank.size();
        step.context_ids.emplace_back();
        try {
            const Attempt a = run_protocol(gateway, render_zcot(ex.question), params, Phase::training);
            const std::string thoughts = a.thoughts();
            if (a.raw_answer && !thoughts.empty() && answers_match(task, *a.raw_answer, ex.gold_answer)) {
                Exemplar e;
                e.question = ex.question;
                e.chain_of_thought = thoughts;
                e.answer = *a.raw_answer;
                e.provenance = Provenance::frozen_zcot;
                e.source_example_id = ex.id;
                e.embedding = maybe_embed(gateway, embed_exemplars, ex.question);
                result.bank.append(std::move(e));
                step.appended = 1;
            }
        } catch (const GenerationFailed& e) {
            ++result.failures;
            step.failed_agents = 1;
            log::warn("frozen memory: skipping example " + ex.id + ": " + e.what());
        }
        result.steps.push_back(std::move(step));
    }
    return result;
}

TrainingResult train_learned_ncot(std::span<const TaskExample> train, Gateway& gateway,
                                  const TrainingConfig& config) {
    auto render = [](const std::vector<Exemplar>& context, const TaskExample& ex) {
        return render_ncot(context, ex.question);
    };
    auto harvest = [&](TrainingResult& r, const TaskExample& ex, const Attempt& a) {
        const std::string thoughts = a.thoughts();
        if (thoughts.empty()) return;
        Exemplar e;
        e.question = ex.question;
        e.chain_of_thought = thoughts;
        e.answer = *a.raw_answer;
        e.provenance = Provenance::learned_ncot;
        e.source_example_id = ex.id;
        e.embedding = maybe_embed(gateway, config.embed_exemplars, ex.question);
        r.bank.append(std::move(e));
    };
    return train_incremental(train, gateway, config, BankKind::learned_ncot, render, harvest);
}

TrainingResult train_learned_ap(std::span<const TaskExample> train, Gateway& gateway,
                                const TrainingConfig& config) {
    auto render = [](const std::vector<Exemplar>& context, const TaskExample& ex) {
        return render_ap(ex.question, context);
    };
    auto harvest = [&](TrainingResult& r, const TaskExample& ex, const Attempt& a) {
        auto problems = parse_relevant_problems(a.completions.front());
        if (!problems) {
            ++r.parse_warnings;
            log::warn("example " + ex.id + ": correct answer but unparseable relevant problems");
            return;
        }
        const std::size_t keep = std::min<std::size_t>(problems->size(), config.shots);
        for (std::size_t i = 0; i < keep; ++i) {
            auto& p = (*problems)[i];
            Exemplar e;
            e.question = std::move(p.question);
            e.chain_of_thought = std::move(p.solution);
            e.answer = std::move(p.answer);
            e.provenance = Provenance::learned_ap;
            e.source_example_id = ex.id;
            e.embedding = maybe_embed(gateway, config.embed_exemplars, e.question);
            r.bank.append(std::move(e));
        }
    };
    return train_incremental(train, gateway, config, BankKind::learned_ap, render, harvest);
}

// --- persistence -----------------------------------------------------------

json to_json(const Exemplar& e) {
    json j{{"id", e.id},
           {"question", e.question},
           {"chain_of_thought", e.chain_of_thought},
           {"answer", e.answer},
           {"embedding", nullptr},
           {"provenance", to_string(e.provenance)},
           {"source_example_id", nullptr},
           {"created_seq", e.created_seq}};
    if (e.embedding) j["embedding"] = *e.embedding;
    if (e.source_example_id) j["source_example_id"] = *e.source_example_id;
    return j;
}

Exemplar exemplar_from_json(const json& j) {
    Exemplar e;
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.chain_of_thought = j.at("chain_of_thought").get<std::string>();
    e.answer = j.at("answer").get<std::string>();
    if (!j.at("embedding").is_null()) e.embedding = j.at("embedding").get<std::vector<double>>();
    e.provenance = parse_provenance(j.at("provenance").get<std::string>());
    if (j.contains("source_example_id") && !j.at("source_example_id").is_null())
        e.source_example_id = j.at("source_example_id").get<std::string>();
    e.created_seq = j.at("created_seq").get<std::uint64_t>();
    return e;
}

namespace {

std::filesystem::path meta_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

}  // namespace

void save_bank(const MemoryBank& bank, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write memory bank " + path.string());
        for (const auto& e : bank.exemplars()) out << to_json(e).dump() << '\n';
        if (!out) throw Error("failed writing memory bank " + path.string());
    }
    std::ofstream meta(meta_path(path), std::ios::binary);
    json m{{"kind", to_string(bank.kind())}, {"task", bank.task()}, {"model", bank.model()},
           {"size", bank.size()}};
    m["embedding_dim"] = bank.embedding_dim() ? json(*bank.embedding_dim()) : json(nullptr);
    meta << m.dump(2) << '\n';
}

MemoryBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open memory bank " + path.string());

    std::optional<json> meta;
    if (std::ifstream mf(meta_path(path)); mf) {
        try {
            meta = json::parse(mf);
        } catch (const json::exception& e) {
            throw LoadError(meta_path(path).string() + ": " + e.what());
        }
    }

    std::vector<Exemplar> rows;
    std::vector<std::size_t> row_lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(exemplar_from_json(json::parse(line)));
            row_lines.push_back(line_no);
        } catch (const std::exception& e) {
            throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    BankKind kind = BankKind::frozen;
    std::string task;
    std::string model;
    if (meta) {
        kind = parse_bank_kind(meta->value("kind", std::string{"frozen"}));
        task = meta->value("task", std::string{});
        model = meta->value("model", std::string{});
    } else if (!rows.empty()) {
        switch (rows.front().provenance) {
            case Provenance::frozen_zcot:
                kind = BankKind::frozen;
                break;
            case Provenance::learned_ncot:
                kind = BankKind::learned_ncot;
                break;
            case Provenance::learned_ap:
                kind = BankKind::learned_ap;
                break;
        }
    }

    MemoryBank bank(kind, task, model);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            bank.restore(std::move(rows[i]));
        } catch (const ConfigError& err) {
            throw LoadError(path.string() + ":" + std::to_string(row_lines[i]) + ": " + err.what());
        }
    }
    return bank;
}

}  // namespace mamr
