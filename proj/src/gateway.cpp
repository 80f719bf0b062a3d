#include "mamr/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

namespace mamr {

std::string_view to_string(CallTag tag) {
    switch (tag) {
        case CallTag::reason_call:
            return "reason_call";
        case CallTag::answer_call:
            return "answer_call";
        case CallTag::summarizer_reason:
            return "summarizer_reason";
        case CallTag::summarizer_answer:
            return "summarizer_answer";
        case CallTag::ap_call:
            return "ap_call";
        case CallTag::direct_call:
            return "direct_call";
    }
    return "?";
}

std::string_view to_string(Phase phase) {
    return phase == Phase::training ? "training" : "validation";
}

// --- ledger ----------------------------------------------------------------

std::uint64_t LedgerSnapshot::training_total() const {
    std::uint64_t t = 0;
    for (auto v : training) t += v;
    return t;
}

std::uint64_t LedgerSnapshot::validation_total() const {
    std::uint64_t t = 0;
    for (auto v : validation) t += v;
    return t;
}

std::uint64_t LedgerSnapshot::at(Phase phase, CallTag tag) const {
    const auto i = static_cast<std::size_t>(tag);
    return phase == Phase::training ? training[i] : validation[i];
}

LedgerSnapshot& LedgerSnapshot::operator+=(const LedgerSnapshot& other) {
    for (std::size_t i = 0; i < kCallTagCount; ++i) {
        training[i] += other.training[i];
        validation[i] += other.validation[i];
    }
    embedding_calls += other.embedding_calls;
    return *this;
}

json to_json(const LedgerSnapshot& s) {
    json training = json::object();
    json validation = json::object();
    for (std::size_t i = 0; i < kCallTagCount; ++i) {
        const std::string tag{to_string(static_cast<CallTag>(i))};
        training[tag] = s.training[i];
        validation[tag] = s.validation[i];
    }
    return json{{"training", training},
                {"validation", validation},
                {"training_total", s.training_total()},
                {"validation_total", s.validation_total()},
                {"total_generation_calls", s.generation_total()},
                {"total_embedding_calls", s.embedding_calls}};
}

void CallLedger::record_generation(Phase phase, CallTag tag) {
    std::lock_guard lock(mutex_);
    const auto i = static_cast<std::size_t>(tag);
    (phase == Phase::training ? counts_.training : counts_.validation)[i] += 1;
}

void CallLedger::record_embedding() {
    std::lock_guard lock(mutex_);
    counts_.embedding_calls += 1;
}

LedgerSnapshot CallLedger::snapshot() const {
    std::lock_guard lock(mutex_);
    return counts_;
}

// --- gateway ---------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<TextBackend> text, std::shared_ptr<EmbeddingBackend> embedder,
                 CallLedger& ledger, RetryPolicy retry)
    : text_(std::move(text)), embedder_(std::move(embedder)), ledger_(&ledger),
      retry_(std::move(retry)) {
    if (retry_.attempts < 1) retry_.attempts = 1;
    if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Gateway Gateway::with_ledger(CallLedger& ledger) const {
    return Gateway(text_, embedder_, ledger, retry_);
}

template <class F>
auto Gateway::with_retries(F&& call) -> decltype(call()) {
    auto delay = retry_.base_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            return call();
        } catch (const TransportError& e) {
            if (attempt >= retry_.attempts)
                throw GenerationFailed("retries exhausted after " + std::to_string(attempt) +
                                       " attempts: " + e.what());
            retry_.sleep(delay);
            delay *= 2;
        } catch (const BackendError& e) {
            throw GenerationFailed(std::string("backend error: ") + e.what() +
                                   (e.raw_payload.empty() ? "" : " payload: " + e.raw_payload));
        }
    }
}

std::string Gateway::generate(const GenerationRequest& request) {
    if (!text_) throw ConfigError("no generation backend configured");
    if (request.prompt.empty()) throw ConfigError("generation prompt must be non-empty");
    std::string out = with_retries([&] { return text_->complete(request); });
    ledger_->record_generation(request.phase, request.tag);
    return out;
}

std::vector<double> Gateway::embed(std::string_view text) {
    if (!embedder_) throw ConfigError("no embedding backend configured");
    if (text.empty()) throw ConfigError("embedding text must be non-empty");
    auto v = with_retries([&] { return embedder_->embed(text); });
    if (v.size() != embedder_->dimension())
        throw GenerationFailed("embedding backend returned dimension " + std::to_string(v.size()));
    ledger_->record_embedding();
    return v;
}

// --- scripted backend ------------------------------------------------------

std::string_view to_string(MatcherKind kind) {
    switch (kind) {
        case MatcherKind::exact:
            return "exact";
        case MatcherKind::suffix:
            return "suffix";
        case MatcherKind::substring:
            return "substring";
    }
    return "?";
}

MatcherKind parse_matcher_kind(std::string_view s) {
    if (s == "exact") return MatcherKind::exact;
    if (s == "suffix") return MatcherKind::suffix;
    if (s == "substring") return MatcherKind::substring;
    throw ConfigError("unknown matcher kind '" + std::string(s) + "'");
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::string fallback)
    : fallback_(std::move(fallback)) {
    // Deduplicate identical rules; conflicting duplicates are an error.
    std::unordered_map<std::string, std::size_t> seen;
    for (auto& r : rules) {
        if (r.pattern.empty()) throw ConfigError("script rule with empty pattern");
        if (r.responses.empty())
            throw ConfigError("script rule '" + r.pattern.substr(0, 40) + "' has no response");
        std::string key = std::string(to_string(r.kind)) + '\0' + r.pattern;
        if (auto it = seen.find(key); it != seen.end()) {
            if (rules_[it->second].responses != r.responses)
                throw ConfigError("ambiguous script: conflicting " + std::string(to_string(r.kind)) +
                                  " rules for pattern '" + r.pattern.substr(0, 60) + "'");
            continue;
        }
        seen.emplace(std::move(key), rules_.size());
        rules_.push_back(std::move(r));
    }

    reversed_suffixes_.emplace_back();
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& r = rules_[i];
        switch (r.kind) {
            case MatcherKind::exact:
                exact_.emplace(r.pattern, i);
                break;
            case MatcherKind::suffix: {
                std::uint32_t node = 0;
                for (auto it = r.pattern.rbegin(); it != r.pattern.rend(); ++it) {
                    auto found = reversed_suffixes_[node].next.find(*it);
                    if (found == reversed_suffixes_[node].next.end()) {
                        const auto fresh = static_cast<std::uint32_t>(reversed_suffixes_.size());
                        reversed_suffixes_[node].next.emplace(*it, fresh);
                        reversed_suffixes_.emplace_back();
                        node = fresh;
                    } else {
                        node = found->second;
                    }
                }
                reversed_suffixes_[node].rule = static_cast<int>(i);
                break;
            }
            case MatcherKind::substring:
                substrings_.push_back(i);
                break;
        }
    }
    std::stable_sort(substrings_.begin(), substrings_.end(), [&](std::size_t a, std::size_t b) {
        return rules_[a].pattern.size() > rules_[b].pattern.size();
    });
}

const ScriptRule* ScriptedBackend::match_suffix(std::string_view prompt) const {
    // A prompt has at most one suffix of each length, so the deepest terminal
    // node reached while walking backwards is the unique longest match.
    const ScriptRule* best = nullptr;
    std::uint32_t node = 0;
    for (auto it = prompt.rbegin(); it != prompt.rend(); ++it) {
        auto found = reversed_suffixes_[node].next.find(*it);
        if (found == reversed_suffixes_[node].next.end()) break;
        node = found->second;
        if (reversed_suffixes_[node].rule >= 0) best = &rules_[reversed_suffixes_[node].rule];
    }
    return best;
}

const ScriptRule* ScriptedBackend::match_substring(std::string_view prompt) const {
    const ScriptRule* best = nullptr;
    for (std::size_t idx : substrings_) {
        const auto& r = rules_[idx];
        if (best && r.pattern.size() < best->pattern.size()) break;
        if (prompt.find(r.pattern) == std::string_view::npos) continue;
        if (best)
            throw BackendError("ambiguous script: equal-length substring rules match one prompt",
                               best->pattern + "\n---\n" + r.pattern);
        best = &r;
    }
    return best;
}

const ScriptRule* ScriptedBackend::match(std::string_view prompt) const {
    if (auto it = exact_.find(std::string(prompt)); it != exact_.end()) return &rules_[it->second];
    if (const auto* r = match_suffix(prompt)) return r;
    return match_substring(prompt);
}

const std::string& ScriptedBackend::lookup(std::string_view prompt, double temperature,
                                           int sample_index) const {
    const ScriptRule* rule = match(prompt);
    if (!rule) return fallback_;
    if (temperature == 0.0 || rule->responses.size() == 1) return rule->responses.front();
    const auto n = rule->responses.size();
    const auto i = static_cast<std::size_t>(sample_index < 0 ? -sample_index : sample_index) % n;
    return rule->responses[i];
}

std::string ScriptedBackend::complete(const GenerationRequest& request) {
    return lookup(request.prompt, request.params.temperature, request.sample_index);
}

std::vector<ScriptRule> load_script(const std::filesystem::path& path, std::string* fallback) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open script " + path.string());
    std::vector<ScriptRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
        try {
            const json j = json::parse(line);
            if (j.contains("fallback") && !j.contains("pattern")) {
                if (fallback) *fallback = j.at("fallback").get<std::string>();
                continue;
            }
            ScriptRule r;
            r.kind = parse_matcher_kind(j.at("matcher_kind").get<std::string>());
            r.pattern = j.at("pattern").get<std::string>();
            const auto& resp = j.at("response");
            if (resp.is_array())
                r.responses = resp.get<std::vector<std::string>>();
            else
                r.responses.push_back(resp.get<std::string>());
            rules.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw LoadError(where + e.what());
        } catch (const ConfigError& e) {
            throw LoadError(where + e.what());
        }
    }
    return rules;
}

void save_script(const std::filesystem::path& path, const std::vector<ScriptRule>& rules,
                 const std::string& fallback) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write script " + path.string());
    if (!fallback.empty()) out << json{{"fallback", fallback}}.dump() << '\n';
    for (const auto& r : rules) {
        json resp = r.responses.size() == 1 ? json(r.responses.front()) : json(r.responses);
        out << json{{"matcher_kind", to_string(r.kind)}, {"pattern", r.pattern}, {"response", resp}}
                   .dump()
            << '\n';
    }
    if (!out) throw Error("failed writing script " + path.string());
}

// --- mock embedder ---------------------------------------------------------

MockEmbedder::MockEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<double> MockEmbedder::embed(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    std::vector<double> v(dimension_, 0.0);
    auto add = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a64(feature);
        for (std::size_t d = 0; d < dimension_; ++d) {
            const std::uint64_t x = splitmix64(h + d);
            v[d] += static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;
        }
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i]);
        if (i + 1 < tokens.size()) add(tokens[i] + ' ' + tokens[i + 1]);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

}  // namespace mamr
