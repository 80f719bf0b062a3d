#pragma once

// Access to text-generation and embedding backends, plus the call ledger
// used for compute accounting.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mamr/core.hpp"

namespace mamr {

enum class CallTag {
    reason_call,
    answer_call,
    summarizer_reason,
    summarizer_answer,
    ap_call,
    direct_call,
};
inline constexpr std::size_t kCallTagCount = 6;

enum class Phase { training, validation };

std::string_view to_string(CallTag tag);
std::string_view to_string(Phase phase);

struct GenerationRequest {
    std::string prompt;
    DecodingParams params;
    CallTag tag = CallTag::direct_call;
    Phase phase = Phase::validation;
    // Position of the requesting agent among identically-prompted agents.
    // Scripted backends use it to pick among alternative sampled responses.
    int sample_index = 0;
};

/// Retriable failure (connection refused, timeout, 5xx).
struct TransportError : Error {
    using Error::Error;
};

/// Non-retriable failure; carries the raw payload for diagnosis.
struct BackendError : Error {
    BackendError(const std::string& what, std::string payload)
        : Error(what), raw_payload(std::move(payload)) {}
    std::string raw_payload;
};

/// Raised by Gateway once retries are exhausted or on a BackendError.
struct GenerationFailed : Error {
    using Error::Error;
};

class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual std::string complete(const GenerationRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<double> embed(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;
};

struct LedgerSnapshot {
    std::array<std::uint64_t, kCallTagCount> training{};
    std::array<std::uint64_t, kCallTagCount> validation{};
    std::uint64_t embedding_calls = 0;

    std::uint64_t training_total() const;
    std::uint64_t validation_total() const;
    std::uint64_t generation_total() const { return training_total() + validation_total(); }
    std::uint64_t at(Phase phase, CallTag tag) const;

    LedgerSnapshot& operator+=(const LedgerSnapshot& other);
    bool operator==(const LedgerSnapshot&) const = default;
};

json to_json(const LedgerSnapshot& snapshot);

/// Thread-safe counters keyed by (phase, tag). Totals never decrease.
class CallLedger {
public:
    void record_generation(Phase phase, CallTag tag);
    void record_embedding();
    LedgerSnapshot snapshot() const;

private:
    mutable std::mutex mutex_;
    LedgerSnapshot counts_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    // Replaceable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Binds backends to a ledger. Generation retries TransportError with
/// exponential backoff (base, 2*base, ...) and counts one ledger entry per
/// successful logical call.
class Gateway {
public:
    Gateway(std::shared_ptr<TextBackend> text, std::shared_ptr<EmbeddingBackend> embedder,
            CallLedger& ledger, RetryPolicy retry = {});

    std::string generate(const GenerationRequest& request);
    std::vector<double> embed(std::string_view text);

    bool has_embedder() const { return embedder_ != nullptr; }
    CallLedger& ledger() const { return *ledger_; }
    /// Same backends, different ledger.
    Gateway with_ledger(CallLedger& ledger) const;

private:
    template <class F>
    auto with_retries(F&& call) -> decltype(call());

    std::shared_ptr<TextBackend> text_;
    std::shared_ptr<EmbeddingBackend> embedder_;
    CallLedger* ledger_;
    RetryPolicy retry_;
};

// ---------------------------------------------------------------------------
// Scripted backend

enum class MatcherKind { exact, suffix, substring };

std::string_view to_string(MatcherKind kind);
MatcherKind parse_matcher_kind(std::string_view s);

struct ScriptRule {
    MatcherKind kind = MatcherKind::exact;
    std::string pattern;
    // At temperature 0 the first response is always returned; sampled
    // requests get responses[sample_index % size].
    std::vector<std::string> responses;
};

/// Deterministic text backend driven by prompt-matching rules.
///
/// Precedence: an exact rule wins; otherwise the longest matching suffix
/// rule; otherwise the longest matching substring rule; otherwise the
/// fallback text. Two distinct rules of the same kind and equal pattern
/// length matching one prompt make the lookup ambiguous and raise
/// BackendError. Duplicate (kind, pattern) pairs with different responses are
/// rejected at construction.
class ScriptedBackend final : public TextBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRule> rules, std::string fallback = "");

    std::string complete(const GenerationRequest& request) override;

    /// Pure lookup; no ledger involvement.
    const std::string& lookup(std::string_view prompt, double temperature, int sample_index) const;

    std::size_t rule_count() const { return rules_.size(); }

private:
    struct TrieNode {
        std::unordered_map<char, std::uint32_t> next;
        int rule = -1;
    };

    const ScriptRule* match(std::string_view prompt) const;
    const ScriptRule* match_suffix(std::string_view prompt) const;
    const ScriptRule* match_substring(std::string_view prompt) const;

    std::vector<ScriptRule> rules_;
    std::string fallback_;
    std::unordered_map<std::string, std::size_t> exact_;
    std::vector<TrieNode> reversed_suffixes_;
    std::vector<std::size_t> substrings_;  // rule indices sorted by descending length
};

/// Script JSONL: one {"matcher_kind", "pattern", "response"} object per line;
/// "response" is a string or an array of alternative sampled responses. An
/// optional {"fallback": "..."} line sets the fallback text.
std::vector<ScriptRule> load_script(const std::filesystem::path& path, std::string* fallback = nullptr);
void save_script(const std::filesystem::path& path, const std::vector<ScriptRule>& rules,
                 const std::string& fallback = "");

// ---------------------------------------------------------------------------
// Embeddings

/// Feature-hashing embedder. Lowercased alphanumeric tokens and their
/// adjacent pairs are hashed with FNV-1a to h; the feature adds
/// u(splitmix64(h + d)) to coordinate d, where u maps the top 53 bits to
/// [-1, 1). The sum is then scaled to unit length.
/// Text with no tokens maps to the zero vector.
class MockEmbedder final : public EmbeddingBackend {
public:
    explicit MockEmbedder(std::size_t dimension = 16);
    std::vector<double> embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// HTTP backends

struct HttpEndpoint {
    std::string url;  // e.g. "http://localhost:8080/v1/chat/completions"
    std::string model;
    std::string auth_header = "Authorization";
    std::string api_key;  // sent as "Bearer <key>" for Authorization, raw otherwise
    std::chrono::seconds timeout{120};
};

/// Chat/completions-style client: one user message in, the first choice's
/// message content out. 5xx and transport failures are TransportError; other
/// non-2xx statuses and unparseable bodies are BackendError.
class HttpChatBackend final : public TextBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint);
    std::string complete(const GenerationRequest& request) override;

    /// Request body for a generation request (exposed for tests).
    json request_body(const GenerationRequest& request) const;

private:
    HttpEndpoint endpoint_;
};

/// Embeddings endpoint client: {"model", "input"} in, data[0].embedding out.
class HttpEmbeddingBackend final : public EmbeddingBackend {
public:
    HttpEmbeddingBackend(HttpEndpoint endpoint, std::size_t dimension);
    std::vector<double> embed(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }

private:
    HttpEndpoint endpoint_;
    std::size_t dimension_;
};

/// Performs a JSON POST; throws TransportError / BackendError as above.
json http_post_json(const HttpEndpoint& endpoint, const json& body);

}  // namespace mamr
