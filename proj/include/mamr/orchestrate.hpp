#pragma once

// Executes one validation example under a method combination: agent
// fan-out, answer extraction and aggregation.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"
#include "mamr/memory_bank.hpp"

namespace mamr {

struct AgentTrace {
    int agent_index = 0;
    std::vector<std::string> exemplar_ids;
    std::vector<std::string> prompts;
    std::vector<std::string> completions;
    std::string raw_answer;
    std::string canonical_answer;
    DecodingParams decoding;
    bool failed = false;            // backend failure after retries
    bool extraction_failed = false; // no boxed answer in an analogical completion
    std::string error;
};

struct VoteTally {
    std::string answer;
    int count = 0;
};

struct AggregationDetail {
    Aggregation method = Aggregation::vote;
    std::vector<VoteTally> tallies;  // in first-occurrence order
    std::optional<AgentTrace> summarizer;
    bool summarizer_fell_back = false;
};

struct ExampleOutcome {
    std::string example_id;
    std::vector<AgentTrace> traces;
    std::string final_raw;
    std::string final_canonical;
    bool correct = false;
    bool failed = false;  // every agent trace failed
    AggregationDetail aggregation;
};

/// Serializes an outcome; prompts and completions only when `full`.
json to_json(const ExampleOutcome& outcome, bool full);

/// Winner of a plurality vote; ties go to the answer that first appears in
/// agent-index order. std::nullopt for an empty input.
std::optional<std::string> plurality_vote(std::span<const std::string> canonical_answers);

/// Vote tallies in first-occurrence order.
std::vector<VoteTally> tally_votes(std::span<const std::string> canonical_answers);

struct ExampleContext {
    Task task = Task::synthetic;
    const MemoryBank* bank = nullptr;  // required iff the combo uses memory
    std::uint64_t run_seed = 0;
    std::optional<std::uint64_t> fixed_seed;  // frozen_fixed retrieval
    int max_tokens = kDefaultMaxTokens;
};

/// Temperature an agent of this combo decodes at.
double agent_temperature(const MethodCombo& combo);

/// Runs every agent on `example` and aggregates. Backend failures are
/// recorded on traces, never thrown. Throws ConfigError if the combo is
/// invalid or the bank presence does not match the combo.
ExampleOutcome run_example(const TaskExample& example, const MethodCombo& combo, Gateway& gateway,
                           const ExampleContext& context);

/// Runs the summarizer agent over successful traces. On backend failure,
/// falls back to plurality vote and flags the detail.
void summarize(const TaskExample& example, Style style, ExampleOutcome& outcome, Gateway& gateway,
               Task task, int max_tokens);

}  // namespace mamr
