#pragma once

// Prompt rendering for every reasoning protocol and answer extraction from
// completions. All functions are pure.
//
// Layout conventions:
//  * two-call protocols build their second prompt as
//      <first prompt> + " " + trim(first completion) + "\nTherefore, the answer is "
//    (one trailing space after the cue), so a solved ZCoT transcript has the
//    same shape as an NCoT exemplar block;
//  * analogical prompts end with a blank line, the position of the response.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mamr/core.hpp"
#include "mamr/gateway.hpp"

namespace mamr {

enum class Protocol { direct, zcot, ncot, ap, summarizer };

Protocol protocol_for(Style style);
std::size_t stage_count(Protocol protocol);

inline constexpr std::string_view kThinkCue = "A: Let's think step by step.";
inline constexpr std::string_view kAnswerCue = "Therefore, the answer is ";

struct StagedPrompt {
    Protocol protocol = Protocol::direct;
    std::string first;
    CallTag first_tag = CallTag::direct_call;
    std::optional<CallTag> second_tag;

    std::size_t stages() const { return second_tag ? 2 : 1; }
    /// Second-stage prompt embedding the first-stage completion. Throws
    /// std::logic_error for single-stage prompts.
    std::string second(std::string_view first_completion) const;
};

StagedPrompt render_direct(std::string_view question);
StagedPrompt render_zcot(std::string_view question);
/// Throws ConfigError if an exemplar has an empty chain of thought.
StagedPrompt render_ncot(std::span<const Exemplar> exemplars, std::string_view question);
StagedPrompt render_ap(std::string_view question, std::span<const Exemplar> memory = {});
/// Throws ConfigError on an empty candidate list.
StagedPrompt render_summarizer(std::string_view question, std::span<const std::string> candidates);

/// Text re-inserted into analogical prompts for a stored exemplar.
std::string ap_exemplar_text(const Exemplar& exemplar);

/// Contents of the last balanced \boxed{...} group, if any.
std::optional<std::string> last_boxed(std::string_view text);

/// Raw answer of a finished protocol, trimmed. direct: whole completion;
/// two-call protocols: second completion; ap: last boxed group. std::nullopt marks an
/// extraction failure. Throws std::invalid_argument on a stage-count mismatch.
std::optional<std::string> extract_answer(Protocol protocol,
                                          std::span<const std::string> completions);

std::string trim(std::string_view text);

/// One self-generated problem from an analogical completion.
struct RelevantProblem {
    std::string question;
    std::string solution;
    std::string answer;  // last boxed group of the solution, may be empty
};

/// Parses the "## Relevant Problems" section of an analogical completion
/// into its Q:/A: blocks. Returns std::nullopt when the section is missing,
/// empty, or any block lacks an "A:" part.
std::optional<std::vector<RelevantProblem>> parse_relevant_problems(std::string_view completion);

}  // namespace mamr
