#pragma once

#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "canon_corpus.hpp"
#include "mamr/canonicalize.hpp"

namespace testing {

/// Random answer-like strings: words from a small vocabulary (including the
/// removable phrases, number words and label words) mixed with punctuation,
/// digits, mixed case and odd whitespace.
inline std::string fuzz_answer(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {
        "the", "The", "ball", "BALL", "has", "is", "playing", "dancing", "with", "present", "at", "end", "of",
        "alice", "Bob", "theater", "presents", "balls", "True", "false", "Unknown", "two", "Twenty", "zero",
        "eleven", "3", "42", "blue", "red", "green", "x", "a", "hasty", "ends"};
    static const std::string punct = ".,;:!?\"'()-[]";
    std::uniform_int_distribution<int> nwords(0, 8), pick(0, static_cast<int>(words.size()) - 1),
        coin(0, 9), p(0, static_cast<int>(punct.size()) - 1);
    std::string s;
    const int n = nwords(rng);
    for (int i = 0; i < n; ++i) {
        if (i > 0) s += coin(rng) == 0 ? "  " : (coin(rng) == 0 ? "\n" : " ");
        if (coin(rng) == 0) s += punct[p(rng)];
        s += words[pick(rng)];
        if (coin(rng) < 2) s += punct[p(rng)];
    }
    return s;
}

inline std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

/// Corpus cases plus `fuzz` random strings per task checked for idempotence
/// and case-insensitivity. Returns human-readable failures.
inline std::vector<std::string> canon_failures(int fuzz = 1000) {
    using namespace mamr;
    std::vector<std::string> bad;
    for (const auto& c : canon_corpus()) {
        const std::string got = canonicalize(c.task, c.raw);
        if (got != c.expected)
            bad.push_back(std::string(to_string(c.task)) + " '" + std::string(c.raw) + "' -> '" + got +
                          "', expected '" + std::string(c.expected) + "'");
    }
    std::mt19937_64 rng(2024);
    for (const Task t : {Task::folio, Task::raco, Task::tso}) {
        for (int i = 0; i < fuzz; ++i) {
            const std::string x = fuzz_answer(rng);
            const std::string once = canonicalize(t, x);
            if (canonicalize(t, once) != once)
                bad.push_back(std::string(to_string(t)) + " not idempotent on '" + x + "'");
            if (canonicalize(t, upper(x)) != once)
                bad.push_back(std::string(to_string(t)) + " case-sensitive on '" + x + "'");
        }
    }
    return bad;
}

}  // namespace testing
