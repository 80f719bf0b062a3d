#include "mamr/canonicalize.hpp"

#include <array>
#include <cctype>
#include <vector>

namespace mamr {

namespace {

constexpr std::array<std::string_view, 21> kNumberWords{
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};

bool is_ascii_space(unsigned char c) { return c < 0x80 && std::isspace(c); }
bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t b = i;
        while (i < s.size() && !is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
        if (i > b) words.push_back(s.substr(b, i - b));
    }
    return words;
}

std::string_view strip_punct(std::string_view w) {
    while (!w.empty() && is_ascii_punct(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
    while (!w.empty() && is_ascii_punct(static_cast<unsigned char>(w.back()))) w.remove_suffix(1);
    return w;
}

std::string raco_impl(std::string_view raw, bool map_numbers) {
    const std::string text = lower(raw);

    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_ascii_digit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && is_ascii_digit(static_cast<unsigned char>(text[j]))) ++j;
            return text.substr(i, j - i);
        }
    }

    const auto words = split_ws(text);
    if (map_numbers) {
        for (auto w : words) {
            const auto core = strip_punct(w);
            for (std::size_t n = 0; n < kNumberWords.size(); ++n) {
                if (core == kNumberWords[n]) return std::to_string(n);
            }
        }
    }
    for (auto w : words) {
        const auto core = strip_punct(w);
        if (!core.empty()) return std::string(core);
    }
    return {};
}

// Phrase removal for TSO, applied on token sequences so that only whole
// words are removed ("theater" keeps its "the").
struct Phrase {
    std::array<std::string_view, 5> words;
    std::size_t length;
    bool eats_next;  // "at the end of the [blank]" also drops the blank
};

constexpr std::array<Phrase, 7> kTsoPhrases{{
    {{"at", "the", "end", "of", "the"}, 5, true},
    {{"has"}, 1, false},
    {{"is", "playing"}, 2, false},
    {{"is", "dancing", "with"}, 3, false},
    {{"the"}, 1, false},
    {{"ball"}, 1, false},
    {{"present"}, 1, false},
}};

bool remove_first(std::vector<std::string>& tokens, const Phrase& p) {
    if (tokens.size() < p.length) return false;
    for (std::size_t i = 0; i + p.length <= tokens.size(); ++i) {
        bool hit = true;
        for (std::size_t k = 0; k < p.length && hit; ++k) hit = tokens[i + k] == p.words[k];
        if (!hit) continue;
        std::size_t n = p.length;
        if (p.eats_next && i + n < tokens.size()) ++n;
        tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
        return true;
    }
    return false;
}

}  // namespace

std::string canon_folio(std::string_view raw) {
    const auto words = split_ws(raw);
    // Trailing tokens made only of punctuation ("True ." ) are skipped.
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
        const auto core = strip_punct(*it);
        if (!core.empty()) return lower(core);
    }
    return {};
}

std::string canon_raco(std::string_view raw) { return raco_impl(raw, true); }
std::string canon_raco_unmapped(std::string_view raw) { return raco_impl(raw, false); }

std::string canon_tso(std::string_view raw) {
    std::string text;
    text.reserve(raw.size());
    for (char c : lower(raw)) {
        if (!is_ascii_punct(static_cast<unsigned char>(c))) text.push_back(c);
    }
    std::vector<std::string> tokens;
    for (auto w : split_ws(text)) tokens.emplace_back(w);

    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& p : kTsoPhrases) {
            while (remove_first(tokens, p)) changed = true;
        }
    }

    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::string canonicalize(Task task, std::string_view raw) {
    switch (task) {
        case Task::folio:
            return canon_folio(raw);
        case Task::raco:
            return canon_raco(raw);
        case Task::tso:
        case Task::synthetic:
            return canon_tso(raw);
    }
    return {};
}

bool answers_match(Task task, std::string_view raw, std::string_view gold) {
    const std::string g = canonicalize(task, gold);
    if (g.empty()) return false;
    if (canonicalize(task, raw) == g) return true;
    return task == Task::raco && canon_raco_unmapped(raw) == g;
}

bool answers_match(std::string_view task, std::string_view raw, std::string_view gold) {
    return answers_match(parse_task(task), raw, gold);
}

}  // namespace mamr
