#include "mamr/orchestrate.hpp"

#include <algorithm>
#include <unordered_map>

#include "mamr/agent.hpp"
#include "mamr/canonicalize.hpp"
#include "mamr/prompting.hpp"

namespace mamr {

std::vector<VoteTally> tally_votes(std::span<const std::string> answers) {
    std::vector<VoteTally> tallies;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& a : answers) {
        auto [it, inserted] = index.emplace(a, tallies.size());
        if (inserted) tallies.push_back({a, 0});
        ++tallies[it->second].count;
    }
    return tallies;
}

std::optional<std::string> plurality_vote(std::span<const std::string> answers) {
    const auto tallies = tally_votes(answers);
    if (tallies.empty()) return std::nullopt;
    // max_element keeps the first of equal maxima, i.e. the earliest answer.
    const auto best = std::max_element(tallies.begin(), tallies.end(),
                                       [](const VoteTally& a, const VoteTally& b) { return a.count < b.count; });
    return best->answer;
}

double agent_temperature(const MethodCombo& combo) {
    return combo.agents == Agents::sc ? kSamplingTemperature : 0.0;
}

namespace {

RetrievalMode retrieval_mode(Memory m) {
    switch (m) {
        case Memory::frozen_fixed:
            return RetrievalMode::fixed;
        case Memory::learned_similar:
            return RetrievalMode::similar;
        default:
            return RetrievalMode::random;
    }
}

StagedPrompt render_for(Style style, std::span<const Exemplar> context, std::string_view question) {
    switch (style) {
        case Style::direct:
            return render_direct(question);
        case Style::zcot:
            return render_zcot(question);
        case Style::ncot:
            return render_ncot(context, question);
        case Style::ap:
            return render_ap(question);
        case Style::ap_memory:
            return render_ap(question, context);
    }
    return render_direct(question);
}

void apply_vote(ExampleOutcome& outcome, Task task) {
    std::vector<std::string> votes;
    std::vector<const AgentTrace*> voters;
    for (const auto& t : outcome.traces) {
        if (t.failed || t.canonical_answer.empty()) continue;
        votes.push_back(t.canonical_answer);
        voters.push_back(&t);
    }
    outcome.aggregation.tallies = tally_votes(votes);
    const auto winner = plurality_vote(votes);
    if (!winner) {
        outcome.final_raw.clear();
        outcome.final_canonical.clear();
        return;
    }
    for (std::size_t i = 0; i < votes.size(); ++i) {
        if (votes[i] == *winner) {
            outcome.final_raw = voters[i]->raw_answer;
            break;
        }
    }
    outcome.final_canonical = canonicalize(task, outcome.final_raw);
}

}  // namespace

void summarize(const TaskExample& example, Style style, ExampleOutcome& outcome, Gateway& gateway,
               Task task, int max_tokens) {
    std::vector<std::string> candidates;
    for (const auto& t : outcome.traces) {
        if (t.failed) continue;
        // Direct prompting has no chain of thought; its answers are the candidates.
        if (style == Style::direct)
            candidates.push_back(t.raw_answer);
        else
            candidates.push_back(trim(t.completions.front()));
    }
    outcome.aggregation.method = Aggregation::summarizer;
    if (candidates.empty()) return;

    AgentTrace s;
    s.agent_index = static_cast<int>(outcome.traces.size());
    s.decoding.max_tokens = max_tokens;
    try {
        const Attempt a = run_protocol(gateway, render_summarizer(example.question, candidates), s.decoding,
                                       Phase::validation);
        s.prompts = a.prompts;
        s.completions = a.completions;
        s.raw_answer = a.raw_answer.value_or("");
        s.canonical_answer = canonicalize(task, s.raw_answer);
        outcome.final_raw = s.raw_answer;
        outcome.final_canonical = s.canonical_answer;
    } catch (const GenerationFailed& e) {
        s.failed = true;
        s.error = e.what();
        outcome.aggregation.summarizer_fell_back = true;
        apply_vote(outcome, task);
        outcome.aggregation.method = Aggregation::summarizer;
    }
    outcome.aggregation.summarizer = std::move(s);
}

ExampleOutcome run_example(const TaskExample& example, const MethodCombo& combo, Gateway& gateway,
                           const ExampleContext& ctx) {
    if (const auto violations = validate_combo(combo); !violations.empty())
        throw ConfigError("invalid combo " + combo.label() + ": " + violations.front());
    if (uses_memory(combo.memory) != (ctx.bank != nullptr))
        throw ConfigError(uses_memory(combo.memory) ? "combo " + combo.label() + " needs a memory bank"
                                                    : "combo " + combo.label() + " takes no memory bank");

    ExampleOutcome outcome;
    outcome.example_id = example.id;
    const int m = combo.agents == Agents::greedy ? 1 : combo.agent_count;
    const std::uint64_t example_seed = seed_stream(ctx.run_seed, {"validate", "example:" + example.id});
    const RetrievalMode mode = retrieval_mode(combo.memory);

    std::vector<double> query_embedding;
    std::string setup_error;
    if (ctx.bank && mode == RetrievalMode::similar && !ctx.bank->empty()) {
        try {
            query_embedding = gateway.embed(example.question);
        } catch (const GenerationFailed& e) {
            setup_error = e.what();
        }
    }

    for (int j = 0; j < m; ++j) {
        AgentTrace t;
        t.agent_index = j;
        t.decoding.temperature = agent_temperature(combo);
        t.decoding.max_tokens = ctx.max_tokens;
        if (combo.agents == Agents::sc)
            t.decoding.seed = seed_stream(example_seed, {"decode", "agent:" + std::to_string(j)});
        if (!setup_error.empty()) {
            t.failed = true;
            t.error = setup_error;
            outcome.traces.push_back(std::move(t));
            continue;
        }

        std::vector<Exemplar> context;
        if (ctx.bank)
            context = agent_context(*ctx.bank, mode, combo.shots, combo.agents, j, example, example_seed,
                                    ctx.fixed_seed, query_embedding);
        for (const auto& e : context) t.exemplar_ids.push_back(e.id);

        try {
            const Attempt a = run_protocol(gateway, render_for(combo.style, context, example.question),
                                           t.decoding, Phase::validation, j);
            t.prompts = a.prompts;
            t.completions = a.completions;
            if (a.raw_answer) {
                t.raw_answer = *a.raw_answer;
                t.canonical_answer = canonicalize(ctx.task, t.raw_answer);
            } else {
                t.extraction_failed = true;
            }
        } catch (const GenerationFailed& e) {
            t.failed = true;
            t.error = e.what();
        }
        outcome.traces.push_back(std::move(t));
    }

    outcome.failed = std::all_of(outcome.traces.begin(), outcome.traces.end(),
                                 [](const AgentTrace& t) { return t.failed; });
    if (!outcome.failed) {
        if (combo.aggregation == Aggregation::summarizer)
            summarize(example, combo.style, outcome, gateway, ctx.task, ctx.max_tokens);
        else
            apply_vote(outcome, ctx.task);
    }
    outcome.correct = !outcome.failed && answers_match(ctx.task, outcome.final_raw, example.gold_answer);
    return outcome;
}

namespace {

json trace_json(const AgentTrace& t, bool full) {
    json j{{"agent_index", t.agent_index},
           {"exemplar_ids", t.exemplar_ids},
           {"raw_answer", t.raw_answer},
           {"canonical_answer", t.canonical_answer},
           {"temperature", t.decoding.temperature},
           {"failed", t.failed}};
    if (t.decoding.seed) j["seed"] = *t.decoding.seed;
    if (t.extraction_failed) j["extraction_failed"] = true;
    if (!t.error.empty()) j["error"] = t.error;
    if (full) {
        j["prompts"] = t.prompts;
        j["completions"] = t.completions;
    }
    return j;
}

}  // namespace

json to_json(const ExampleOutcome& o, bool full) {
    json tallies = json::array();
    for (const auto& t : o.aggregation.tallies) tallies.push_back({{"answer", t.answer}, {"count", t.count}});
    json agg{{"method", to_string(o.aggregation.method)}, {"tallies", tallies}};
    if (o.aggregation.summarizer) agg["summarizer"] = trace_json(*o.aggregation.summarizer, full);
    if (o.aggregation.summarizer_fell_back) agg["fell_back_to_vote"] = true;

    json traces = json::array();
    for (const auto& t : o.traces) traces.push_back(trace_json(t, full));
    return json{{"example_id", o.example_id}, {"final_raw", o.final_raw},
                {"final_canonical", o.final_canonical}, {"correct", o.correct},
                {"failed", o.failed}, {"aggregation", agg}, {"traces", traces}};
}

}  // namespace mamr
