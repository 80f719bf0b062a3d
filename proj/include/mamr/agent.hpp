#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mamr/gateway.hpp"
#include "mamr/prompting.hpp"

namespace mamr {

/// Transcript of one protocol execution by one agent.
struct Attempt {
    std::vector<std::string> prompts;
    std::vector<std::string> completions;
    std::optional<std::string> raw_answer;  // nullopt: extraction failure

    /// Trimmed first completion: the chain of thought for two-call protocols.
    std::string thoughts() const;
};

/// Issues every stage of `prompt` through the gateway. Propagates
/// GenerationFailed from the gateway.
Attempt run_protocol(Gateway& gateway, const StagedPrompt& prompt, const DecodingParams& params,
                     Phase phase, int sample_index = 0);

}  // namespace mamr
