#include "mamr/agent.hpp"

namespace mamr {

std::string Attempt::thoughts() const { return completions.empty() ? std::string{} : trim(completions.front()); }

Attempt run_protocol(Gateway& gateway, const StagedPrompt& prompt, const DecodingParams& params,
                     Phase phase, int sample_index) {
    Attempt a;
    GenerationRequest req{prompt.first, params, prompt.first_tag, phase, sample_index};
    a.prompts.push_back(req.prompt);
    a.completions.push_back(gateway.generate(req));
    if (prompt.second_tag) {
        req.prompt = prompt.second(a.completions.back());
        req.tag = *prompt.second_tag;
        a.prompts.push_back(req.prompt);
        a.completions.push_back(gateway.generate(req));
    }
    a.raw_answer = extract_answer(prompt.protocol, a.completions);
    return a;
}

}  // namespace mamr
