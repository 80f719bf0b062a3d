#include "mamr/prompting.hpp"

#include <stdexcept>

namespace mamr {

namespace {

// Analogical instruction block, reproduced byte for byte (including the
// trailing spaces at the wrapped line ends).
constexpr std::string_view kApHead =
    "Your task is to tackle reasoning problems. When presented with a \n"
    "problem, recall relevant problems as examples. Afterward, proceed \n"
    "to solve the initial problem.\n"
    "\n"
    "# Initial Problem:\n";

constexpr std::string_view kApTail =
    "\n"
    "\n"
    "# Instructions:\n"
    "Make sure to include all of the following points:\n"
    "\n"
    "## Relevant Problems:\n"
    "Recall three examples of problems that are relevant to the initial \n"
    "problem. Note that your problems must be distinct from each other \n"
    "and from the initial problem. For each problem:\n"
    "- After \"Q: \", describe the problem\n"
    "- After \"A: \", explain the solution and enclose the ultimate \n"
    "answer in \\boxed{}.\n"
    "\n"
    "## Solve the Initial Problem:\n"
    "Say \"Let's solve the following reasoning problem.\" Then formulate \n"
    "your response in the following format:\n"
    "Q: Copy and paste the initial problem here.\n"
    "A: Explain the solution and enclose the ultimate answer in\n"
    "\\boxed{} here.\n"
    "\n";

constexpr std::string_view kSummarizerHead =
    "Q: We have several solution candidates for the question below. \n"
    "Please discuss and summarize these solution candidates and output \n"
    "your best answer. ";

constexpr std::string_view kBoxed = "\\boxed{";

std::string zcot_block(std::string_view question) {
    std::string s = "Q: ";
    s += question;
    s += '\n';
    s += kThinkCue;
    return s;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string trim(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

Protocol protocol_for(Style style) {
    switch (style) {
        case Style::direct:
            return Protocol::direct;
        case Style::zcot:
            return Protocol::zcot;
        case Style::ncot:
            return Protocol::ncot;
        case Style::ap:
        case Style::ap_memory:
            return Protocol::ap;
    }
    return Protocol::direct;
}

std::size_t stage_count(Protocol protocol) {
    return (protocol == Protocol::direct || protocol == Protocol::ap) ? 1 : 2;
}

std::string StagedPrompt::second(std::string_view first_completion) const {
    if (!second_tag) throw std::logic_error("single-stage prompt has no second stage");
    std::string s = first;
    s += ' ';
    s += trim(first_completion);
    s += '\n';
    s += kAnswerCue;
    return s;
}

StagedPrompt render_direct(std::string_view question) {
    std::string s = "Q: ";
    s += question;
    s += "\nA:";
    return {Protocol::direct, std::move(s), CallTag::direct_call, std::nullopt};
}

StagedPrompt render_zcot(std::string_view question) {
    return {Protocol::zcot, zcot_block(question), CallTag::reason_call, CallTag::answer_call};
}

StagedPrompt render_ncot(std::span<const Exemplar> exemplars, std::string_view question) {
    if (exemplars.empty()) return render_zcot(question);
    std::string s;
    for (const auto& e : exemplars) {
        if (e.chain_of_thought.empty())
            throw ConfigError("exemplar '" + e.id + "' has an empty chain of thought");
        s += "Q: ";
        s += e.question;
        s += '\n';
        s += kThinkCue;
        s += ' ';
        s += e.chain_of_thought;
        s += '\n';
        s += kAnswerCue;
        s += e.answer;
        s += "\n\n";
    }
    s += zcot_block(question);
    return {Protocol::ncot, std::move(s), CallTag::reason_call, CallTag::answer_call};
}

std::string ap_exemplar_text(const Exemplar& e) {
    std::string s = "Q: ";
    s += e.question;
    s += "\nA: ";
    s += e.chain_of_thought;
    return s;
}

StagedPrompt render_ap(std::string_view question, std::span<const Exemplar> memory) {
    std::string s{kApHead};
    s += question;
    s += kApTail;
    for (const auto& e : memory) {
        s += ap_exemplar_text(e);
        s += "\n\n";
    }
    return {Protocol::ap, std::move(s), CallTag::ap_call, std::nullopt};
}

StagedPrompt render_summarizer(std::string_view question, std::span<const std::string> candidates) {
    if (candidates.empty()) throw ConfigError("summarizer needs at least one candidate");
    std::string s{kSummarizerHead};
    s += question;
    s += '\n';
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        s += "Solution ";
        s += std::to_string(i + 1);
        s += ": ";
        s += candidates[i];
        s += '\n';
    }
    s += kThinkCue;
    return {Protocol::summarizer, std::move(s), CallTag::summarizer_reason, CallTag::summarizer_answer};
}

std::optional<std::string> last_boxed(std::string_view text) {
    // Scan every \boxed{ opening with brace matching; keep the last one that
    // closes. Nested braces inside the group are kept verbatim.
    std::optional<std::string> found;
    std::size_t pos = text.find(kBoxed);
    while (pos != std::string_view::npos) {
        const std::size_t open = pos + kBoxed.size();
        int depth = 1;
        std::size_t i = open;
        for (; i < text.size(); ++i) {
            if (text[i] == '{') {
                ++depth;
            } else if (text[i] == '}') {
                if (--depth == 0) break;
            }
        }
        if (depth == 0) found = std::string(text.substr(open, i - open));
        pos = text.find(kBoxed, pos + 1);
    }
    return found;
}

std::optional<std::string> extract_answer(Protocol protocol, std::span<const std::string> completions) {
    if (completions.size() != stage_count(protocol))
        throw std::invalid_argument("completion count does not match protocol stages");
    switch (protocol) {
        case Protocol::direct:
            return trim(completions[0]);
        case Protocol::zcot:
        case Protocol::ncot:
        case Protocol::summarizer:
            return trim(completions[1]);
        case Protocol::ap:
            if (auto boxed = last_boxed(completions[0])) return trim(*boxed);
            return std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::vector<RelevantProblem>> parse_relevant_problems(std::string_view completion) {
    constexpr std::string_view kHeader = "## Relevant Problems";
    constexpr std::string_view kSolveHeader = "## Solve the Initial Problem";

    const auto start = completion.find(kHeader);
    if (start == std::string_view::npos) return std::nullopt;
    auto body_start = completion.find('\n', start);
    if (body_start == std::string_view::npos) return std::nullopt;
    ++body_start;
    auto end = completion.find(kSolveHeader, body_start);
    if (end == std::string_view::npos) end = completion.size();
    const std::string_view section = completion.substr(body_start, end - body_start);

    // Split into blocks at lines beginning with "Q:".
    std::vector<std::string_view> blocks;
    std::size_t line_start = 0;
    std::size_t block_start = std::string_view::npos;
    while (line_start < section.size()) {
        auto line_end = section.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = section.size();
        if (section.substr(line_start, 2) == "Q:") {
            if (block_start != std::string_view::npos)
                blocks.push_back(section.substr(block_start, line_start - block_start));
            block_start = line_start;
        }
        line_start = line_end + 1;
    }
    if (block_start != std::string_view::npos) blocks.push_back(section.substr(block_start));
    if (blocks.empty()) return std::nullopt;

    std::vector<RelevantProblem> out;
    for (auto block : blocks) {
        const auto a = block.find("\nA:");
        if (a == std::string_view::npos) return std::nullopt;
        std::string_view q = block.substr(2, a - 2);
        std::string_view sol = block.substr(a + 3);
        if (!q.empty() && q.front() == ' ') q.remove_prefix(1);
        if (!sol.empty() && sol.front() == ' ') sol.remove_prefix(1);
        RelevantProblem p{trim(q), trim(sol), ""};
        if (p.question.empty() || p.solution.empty()) return std::nullopt;
        if (auto boxed = last_boxed(p.solution)) p.answer = trim(*boxed);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mamr
