#include "mamr/core.hpp"

#include <array>
#include <sstream>
#include <utility>

namespace mamr {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == text) return value;
    }
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::pair<std::string_view, Style>, 5> kStyles{{
    {"direct", Style::direct},
    {"zcot", Style::zcot},
    {"ncot", Style::ncot},
    {"ap", Style::ap},
    {"ap_memory", Style::ap_memory},
}};
constexpr std::array<std::pair<std::string_view, Agents>, 3> kAgents{{
    {"greedy", Agents::greedy},
    {"sc", Agents::sc},
    {"varied", Agents::varied},
}};
constexpr std::array<std::pair<std::string_view, Memory>, 5> kMemories{{
    {"none", Memory::none},
    {"frozen_fixed", Memory::frozen_fixed},
    {"frozen_random", Memory::frozen_random},
    {"learned_random", Memory::learned_random},
    {"learned_similar", Memory::learned_similar},
}};
constexpr std::array<std::pair<std::string_view, Aggregation>, 2> kAggregations{{
    {"vote", Aggregation::vote},
    {"summarizer", Aggregation::summarizer},
}};
constexpr std::array<std::pair<std::string_view, Split>, 2> kSplits{{
    {"train", Split::train},
    {"validation", Split::validation},
}};
constexpr std::array<std::pair<std::string_view, Task>, 5> kTasks{{
    {"folio", Task::folio},
    {"raco", Task::raco},
    {"tso", Task::tso},
    {"synthetic", Task::synthetic},
    {"synth", Task::synthetic},
}};

constexpr std::array<std::pair<std::string_view, Provenance>, 3> kProvenances{{
    {"frozen-zcot", Provenance::frozen_zcot},
    {"learned-ncot", Provenance::learned_ncot},
    {"learned-ap", Provenance::learned_ap},
}};

template <class E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<std::string_view, E>, N>& table) {
    for (const auto& [name, v] : table) {
        if (v == value) return name;
    }
    return "?";
}

}  // namespace

std::string_view to_string(Style s) { return name_of(s, kStyles); }
std::string_view to_string(Agents a) { return name_of(a, kAgents); }
std::string_view to_string(Memory m) { return name_of(m, kMemories); }
std::string_view to_string(Aggregation a) { return name_of(a, kAggregations); }
std::string_view to_string(Split s) { return name_of(s, kSplits); }
std::string_view to_string(Task t) { return name_of(t, kTasks); }
std::string_view to_string(Provenance p) { return name_of(p, kProvenances); }

Style parse_style(std::string_view s) { return parse_enum(s, kStyles, "reasoning style"); }
Agents parse_agents(std::string_view s) { return parse_enum(s, kAgents, "agent mode"); }
Memory parse_memory(std::string_view s) { return parse_enum(s, kMemories, "memory mode"); }
Aggregation parse_aggregation(std::string_view s) {
    return parse_enum(s, kAggregations, "aggregation");
}
Split parse_split(std::string_view s) { return parse_enum(s, kSplits, "split"); }
Task parse_task(std::string_view s) { return parse_enum(s, kTasks, "task"); }
Provenance parse_provenance(std::string_view s) {
    return parse_enum(s, kProvenances, "provenance");
}

std::string MethodCombo::label() const {
    std::ostringstream out;
    out << to_string(style) << '/' << to_string(agents) << "/m" << agent_count << "/k" << shots
        << '/' << to_string(memory) << '/' << to_string(aggregation);
    return out.str();
}

std::vector<std::string> validate_combo(const MethodCombo& c) {
    std::vector<std::string> v;
    const std::string style{to_string(c.style)};

    if (c.agent_count < 1) v.emplace_back("agent count M must be positive");
    if (c.shots < 0) v.emplace_back("shots K must be non-negative");

    if ((c.style == Style::direct || c.style == Style::zcot) && c.memory != Memory::none)
        v.push_back(style + " requires memory=none");
    if (c.style == Style::ap && c.memory != Memory::none) v.emplace_back("ap requires memory=none");
    if (c.style == Style::ncot && c.memory == Memory::none) v.emplace_back("ncot requires memory");
    if (c.style == Style::ap_memory && !is_learned(c.memory))
        v.emplace_back("ap_memory requires learned_random or learned_similar memory");

    if (c.agents == Agents::varied && c.memory != Memory::frozen_random &&
        c.memory != Memory::learned_random)
        v.emplace_back("varied requires random retrieval");
    if (c.agents == Agents::greedy && c.agent_count != 1) v.emplace_back("greedy requires M=1");
    if (c.agents == Agents::greedy && c.aggregation == Aggregation::summarizer)
        v.emplace_back("summarizer requires sc or varied agents");

    if (uses_memory(c.memory) && c.shots < 1) v.emplace_back("memory requires K>=1");
    return v;
}

json to_json(const MethodCombo& c) {
    return json{{"style", to_string(c.style)},   {"agents", to_string(c.agents)},
                {"m", c.agent_count},            {"k", c.shots},
                {"memory", to_string(c.memory)}, {"aggregation", to_string(c.aggregation)}};
}

MethodCombo combo_from_json(const json& j) {
    MethodCombo c;
    try {
        c.style = parse_style(j.value("style", std::string{"zcot"}));
        c.agents = parse_agents(j.value("agents", std::string{"greedy"}));
        c.agent_count = j.value("m", c.agents == Agents::greedy ? 1 : kDefaultAgents);
        c.memory = parse_memory(j.value("memory", std::string{"none"}));
        c.shots = j.value("k", uses_memory(c.memory) ? kDefaultShots : 0);
        c.aggregation = parse_aggregation(j.value("aggregation", std::string{"vote"}));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad combo document: ") + e.what());
    }
    return c;
}

MethodCombo parse_combo_spec(std::string_view spec) {
    json j = json::object();
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t end = spec.find(',', pos);
        if (end == std::string_view::npos) end = spec.size();
        std::string_view item = spec.substr(pos, end - pos);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("combo item '" + std::string(item) + "' is not key=value");
            std::string key{item.substr(0, eq)};
            std::string value{item.substr(eq + 1)};
            if (key == "m" || key == "k") {
                try {
                    j[key] = std::stoi(value);
                } catch (const std::exception&) {
                    throw ConfigError("combo key '" + key + "' needs an integer");
                }
            } else if (key == "style" || key == "agents" || key == "memory" ||
                       key == "aggregation") {
                j[key] = value;
            } else {
                throw ConfigError("unknown combo key '" + key + "'");
            }
        }
        pos = end + 1;
    }
    return combo_from_json(j);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t seed_stream(std::uint64_t master_seed, const std::vector<std::string>& labels) {
    if (labels.empty()) throw ConfigError("seed_stream needs at least one label");
    std::uint64_t h = splitmix64(master_seed);
    for (const auto& label : labels) h = splitmix64(h ^ fnv1a64(label));
    return h;
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
    if (!j.contains("combo")) throw ConfigError("run configuration is missing 'combo'");
    RunConfig cfg;
    try {
        cfg.combo = combo_from_json(j.at("combo"));
        cfg.runs = j.value("runs", kDefaultRuns);
        cfg.master_seed = j.value("master_seed", std::uint64_t{0});
        cfg.task = parse_task(j.value("task", std::string{"synthetic"}));
        cfg.dataset_path = j.value("dataset", std::string{});
        if (j.contains("model")) {
            const auto& m = j.at("model");
            cfg.model.name = m.value("name", cfg.model.name);
            cfg.model.backend = m.value("backend", cfg.model.backend);
            cfg.model.embedder = m.value("embedder", cfg.model.embedder);
            cfg.model.max_tokens = m.value("max_tokens", cfg.model.max_tokens);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad run configuration: ") + e.what());
    }
    if (cfg.runs < 1) throw ConfigError("runs must be positive");
    if (cfg.model.max_tokens < 1) throw ConfigError("max_tokens must be positive");
    return cfg;
}

json to_json(const RunConfig& cfg) {
    return json{{"combo", to_json(cfg.combo)},
                {"runs", cfg.runs},
                {"master_seed", cfg.master_seed},
                {"task", to_string(cfg.task)},
                {"dataset", cfg.dataset_path},
                {"model",
                 {{"name", cfg.model.name},
                  {"backend", cfg.model.backend},
                  {"embedder", cfg.model.embedder},
                  {"max_tokens", cfg.model.max_tokens}}}};
}

}  // namespace mamr
