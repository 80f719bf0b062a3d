#include "mamr/tasks.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "mamr/log.hpp"
#include "mamr/prompting.hpp"

namespace fs = std::filesystem;

namespace mamr {

ExpectedCounts expected_counts(Task task) {
    switch (task) {
        case Task::folio:
            return {1004, 204};
        case Task::raco:
            return {1600, 400};
        case Task::tso:
            return {3000, 750};
        case Task::synthetic:
            break;
    }
    return {0, 0};
}

namespace {

struct JsonLine {
    std::size_t line;
    json value;
};

std::vector<JsonLine> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<JsonLine> rows;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back({line, json::parse(text)});
        } catch (const json::parse_error& e) {
            throw LoadError(path.string() + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
        }
        if (!rows.back().value.is_object())
            throw LoadError(path.string() + ":" + std::to_string(line) + ": expected a JSON object");
    }
    return rows;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": malformed JSON: " + e.what());
    }
}

void reject(LoadReport* report, const fs::path& file, std::size_t line, const std::string& reason) {
    log::warn(file.string() + ":" + std::to_string(line) + ": record rejected: " + reason);
    if (report) report->rejected.push_back({file.string(), line, reason});
}

void check_counts(const Dataset& d, LoadReport* report) {
    const auto want = expected_counts(d.task);
    if (d.n_train() == want.train && d.n_validation() == want.validation) return;
    const std::string msg = std::string(to_string(d.task)) + ": expected " + std::to_string(want.train) +
                            "/" + std::to_string(want.validation) + " train/validation examples, loaded " +
                            std::to_string(d.n_train()) + "/" + std::to_string(d.n_validation());
    log::warn(msg);
    if (report) report->warnings.push_back(msg);
}

std::string padded(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    return buf;
}

std::vector<TaskExample>& split_of(Dataset& d, Split s) { return s == Split::train ? d.train : d.validation; }

std::string folio_label(const json& v) {
    if (!v.is_string()) return {};
    std::string s = v.get<std::string>();
    if (s == "Uncertain") s = "Unknown";
    if (s == "True" || s == "False" || s == "Unknown") return s;
    return {};
}

}  // namespace

Dataset load_folio(const fs::path& dir, LoadReport* report) {
    Dataset d;
    d.task = Task::folio;
    for (const Split split : {Split::train, Split::validation}) {
        const fs::path file = dir / ("folio-" + std::string(to_string(split)) + ".jsonl");
        if (!fs::exists(file)) throw LoadError("missing FOLIO file " + file.string());
        auto& out = split_of(d, split);
        std::size_t index = 0;
        for (const auto& [line, rec] : read_jsonl(file)) {
            const std::size_t position = index++;
            if (!rec.contains("label")) {
                reject(report, file, line, "missing label");
                continue;
            }
            const std::string label = folio_label(rec["label"]);
            if (label.empty()) {
                reject(report, file, line, "label is not True, False or Unknown");
                continue;
            }
            if (!rec.contains("conclusion") || !rec["conclusion"].is_string() || !rec.contains("premises")) {
                reject(report, file, line, "missing premises or conclusion");
                continue;
            }
            std::string question;
            const json& premises = rec["premises"];
            if (premises.is_array()) {
                for (const auto& p : premises) {
                    if (!p.is_string()) continue;
                    question += p.get<std::string>();
                    question += '\n';
                }
            } else if (premises.is_string()) {
                question = premises.get<std::string>();
                if (!question.empty() && question.back() != '\n') question += '\n';
            }
            question += "Is the conclusion True, False, or Unknown? " + rec["conclusion"].get<std::string>();
            std::string id = "folio-" + std::string(to_string(split)) + "-" + padded(position);
            out.push_back({std::move(id), std::move(question), label, split});
        }
    }
    check_counts(d, report);
    return d;
}

namespace {

std::string bigbench_gold(const json& rec) {
    for (const char* key : {"target", "targets"}) {
        if (!rec.contains(key)) continue;
        const json& t = rec[key];
        if (t.is_string()) return t.get<std::string>();
        if (t.is_array() && !t.empty() && t.front().is_string()) return t.front().get<std::string>();
    }
    if (rec.contains("target_scores") && rec["target_scores"].is_object()) {
        std::string best;
        double best_score = -INFINITY;
        // Keys iterate in sorted order, so ties resolve to the smallest key.
        for (const auto& [key, score] : rec["target_scores"].items()) {
            if (!score.is_number()) continue;
            if (score.get<double>() > best_score) {
                best_score = score.get<double>();
                best = key;
            }
        }
        return best;
    }
    return {};
}

std::string bigbench_input(const json& rec) {
    for (const char* key : {"input", "inputs"}) {
        if (rec.contains(key) && rec[key].is_string()) return rec[key].get<std::string>();
    }
    return {};
}

std::string task_prefix(Task task) { return task == Task::raco ? "raco" : "tso"; }

void add_bigbench(Dataset& d, Split split, std::size_t position, const json& rec, const std::string& prefix,
                  const fs::path& file, std::size_t line, LoadReport* report) {
    std::string question = bigbench_input(rec);
    std::string gold = bigbench_gold(rec);
    if (question.empty()) return reject(report, file, line, "missing input");
    if (gold.empty()) return reject(report, file, line, "missing target");
    auto& out = split_of(d, split);
    out.push_back({task_prefix(d.task) + "-" + std::string(to_string(split)) + "-" + padded(position),
                   prefix + question, std::move(gold), split});
}

}  // namespace

Dataset load_bigbench(const fs::path& path, Task task, LoadReport* report) {
    if (task != Task::raco && task != Task::tso)
        throw ConfigError("load_bigbench: unsupported task '" + std::string(to_string(task)) + "'");
    if (!fs::exists(path)) throw LoadError("missing BIG-bench data " + path.string());
    Dataset d;
    d.task = task;

    if (fs::is_directory(path) && fs::exists(path / "train.jsonl")) {
        for (const Split split : {Split::train, Split::validation}) {
            const fs::path file = path / (std::string(to_string(split)) + ".jsonl");
            if (!fs::exists(file)) throw LoadError("missing split file " + file.string());
            std::size_t index = 0;
            for (const auto& [line, rec] : read_jsonl(file)) add_bigbench(d, split, index++, rec, "", file, line, report);
        }
        check_counts(d, report);
        return d;
    }

    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path))
            if (entry.is_regular_file() && entry.path().filename() == "task.json") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw LoadError("no task.json under " + path.string());
    } else {
        files.push_back(path);
    }

    std::size_t n_train = 0, n_val = 0;
    for (const auto& file : files) {
        const json doc = read_json(file);
        if (!doc.contains("examples") || !doc["examples"].is_array())
            throw LoadError(file.string() + ": no \"examples\" array");
        const std::string prefix = doc.value("task_prefix", std::string());
        const auto& examples = doc["examples"];
        const std::size_t cut = examples.size() * 4 / 5;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            const bool train = i < cut;
            if (!examples[i].is_object()) {
                reject(report, file, i + 1, "example is not an object");
                continue;
            }
            // "line" is the 1-based example index for task.json inputs.
            add_bigbench(d, train ? Split::train : Split::validation, train ? n_train++ : n_val++, examples[i],
                         prefix, file, i + 1, report);
        }
    }
    check_counts(d, report);
    return d;
}

Dataset load_examples_jsonl(const fs::path& path, Task task) {
    Dataset d;
    d.task = task;
    for (const auto& [line, rec] : read_jsonl(path)) {
        try {
            TaskExample e{rec.at("id").get<std::string>(), rec.at("question").get<std::string>(),
                          rec.at("gold_answer").get<std::string>(),
                          parse_split(rec.at("split").get<std::string>())};
            split_of(d, e.split).push_back(std::move(e));
        } catch (const json::exception& e) {
            throw LoadError(path.string() + ":" + std::to_string(line) + ": " + e.what());
        } catch (const ConfigError& e) {
            throw LoadError(path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return d;
}

void save_examples_jsonl(const Dataset& dataset, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto* split : {&dataset.train, &dataset.validation})
        for (const auto& e : *split)
            out << json{{"id", e.id}, {"question", e.question}, {"gold_answer", e.gold_answer},
                        {"split", to_string(e.split)}}
                       .dump()
                << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

Dataset load_dataset(Task task, const fs::path& path, LoadReport* report) {
    switch (task) {
        case Task::folio:
            return load_folio(path, report);
        case Task::raco:
        case Task::tso:
            return load_bigbench(path, task, report);
        case Task::synthetic:
            return load_examples_jsonl(path, task);
    }
    throw ConfigError("unknown task");
}

// ---------------------------------------------------------------------------
// Synthetic shuffled objects

namespace {

constexpr std::array<std::string_view, kMaxSynthPeople> kPeople = {
    "Alice", "Bob", "Claire", "Dave", "Eve", "Fred", "Gertrude", "Helga", "Ian", "Jamie"};
constexpr std::array<std::string_view, kMaxSynthPeople> kColors = {
    "red", "blue", "green", "yellow", "purple", "orange", "white", "black", "pink", "brown"};

std::string join_people(const std::vector<std::string>& people) {
    std::string s;
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (i > 0) s += i + 1 == people.size() ? (people.size() == 2 ? " and " : ", and ") : ", ";
        s += people[i];
    }
    return s;
}

std::string puzzle_question(const SwapPuzzle& p) {
    std::string q = join_people(p.people) +
                    " are playing a game. At the start of the game, they are each holding a ball: ";
    for (std::size_t i = 0; i < p.people.size(); ++i) {
        if (i > 0) q += i + 1 == p.people.size() ? (p.people.size() == 2 ? " and " : ", and ") : ", ";
        q += p.people[i] + " has a " + p.initial[i];
    }
    q += ".\nAs the game progresses, pairs of players trade balls.";
    if (p.swaps.empty()) q += " No trades happen.";
    for (std::size_t k = 0; k < p.swaps.size(); ++k) {
        const char* lead = k == 0 ? "First" : (k + 1 == p.swaps.size() ? "Finally" : "Then");
        q += std::string(" ") + lead + ", " + p.people[p.swaps[k].first] + " and " + p.people[p.swaps[k].second] +
             " swap balls.";
    }
    q += " At the end of the game, " + p.people[p.query] + " has the";
    return q;
}

}  // namespace

SynthTask synth_tso(const SynthSpec& spec) {
    if (spec.n_people < 2 || spec.n_people > kMaxSynthPeople)
        throw ConfigError("synth_tso: n_people must be in [2, " + std::to_string(kMaxSynthPeople) + "]");
    if (spec.n_swaps < 0) throw ConfigError("synth_tso: n_swaps must be >= 0");

    SynthTask out;
    out.dataset.task = Task::synthetic;
    const auto n = static_cast<std::uint64_t>(spec.n_people);
    for (const Split split : {Split::train, Split::validation}) {
        const std::size_t count = split == Split::train ? spec.n_train : spec.n_validation;
        for (std::size_t i = 0; i < count; ++i) {
            const std::string id = "synth-" + std::string(to_string(split)) + "-" + padded(i);
            std::mt19937_64 rng(seed_stream(spec.seed, {"synth", id}));

            std::vector<std::size_t> colors(kColors.size());
            for (std::size_t c = 0; c < colors.size(); ++c) colors[c] = c;
            for (std::size_t c = colors.size() - 1; c > 0; --c) std::swap(colors[c], colors[bounded(rng, c + 1)]);

            SwapPuzzle p;
            for (int k = 0; k < spec.n_people; ++k) {
                p.people.emplace_back(kPeople[k]);
                p.initial.push_back(std::string(kColors[colors[k]]) + " ball");
            }
            for (int s = 0; s < spec.n_swaps; ++s) {
                const auto a = static_cast<int>(bounded(rng, n));
                auto b = static_cast<int>(bounded(rng, n - 1));
                if (b >= a) ++b;
                p.swaps.emplace_back(a, b);
            }
            p.query = static_cast<int>(bounded(rng, n));
            p.final_objects = p.initial;
            for (const auto& [a, b] : p.swaps) std::swap(p.final_objects[a], p.final_objects[b]);

            split_of(out.dataset, split).push_back({id, puzzle_question(p), p.final_objects[p.query], split});
            out.puzzles.push_back(std::move(p));
        }
    }
    return out;
}

std::set<std::string> reasoner_correct_ids(const Dataset& dataset, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("reasoner accuracy must be in [0, 1]");
    std::set<std::string> ids;
    for (const auto* split : {&dataset.train, &dataset.validation}) {
        std::vector<std::pair<std::uint64_t, std::string>> ranked;
        for (const auto& e : *split) ranked.emplace_back(splitmix64(fnv1a64(e.id)), e.id);
        std::sort(ranked.begin(), ranked.end());
        const auto keep = static_cast<std::size_t>(std::llround(p * static_cast<double>(ranked.size())));
        for (std::size_t i = 0; i < keep; ++i) ids.insert(ranked[i].second);
    }
    return ids;
}

namespace {

std::string trace_thoughts(const SwapPuzzle& p, const std::string& answer) {
    std::vector<std::string> held = p.initial;
    std::string t = "At the start, ";
    for (std::size_t i = 0; i < p.people.size(); ++i) {
        if (i > 0) t += ", ";
        t += p.people[i] + " has the " + held[i];
    }
    t += ".";
    for (const auto& [a, b] : p.swaps) {
        std::swap(held[a], held[b]);
        t += " After " + p.people[a] + " and " + p.people[b] + " swap, " + p.people[a] + " has the " + held[a] +
             " and " + p.people[b] + " has the " + held[b] + ".";
    }
    t += " So at the end, " + p.people[p.query] + " has the " + answer + ".";
    return t;
}

std::string ap_response(const SwapPuzzle& p, const std::string& question, const std::string& thoughts,
                        const std::string& answer) {
    std::string r = "## Relevant Problems:\n";
    for (int k = 0; k < 3; ++k) {
        const std::size_t n = p.people.size();
        const std::string& x = p.people[static_cast<std::size_t>(k) % n];
        const std::string& y = p.people[(static_cast<std::size_t>(k) + 1) % n];
        const std::string& c1 = p.initial[static_cast<std::size_t>(k) % n];
        const std::string& c2 = p.initial[(static_cast<std::size_t>(k) + 1) % n];
        const int swaps = k + 1;
        const std::string& held = swaps % 2 == 1 ? c2 : c1;
        r += "Q: " + x + " has a " + c1 + " and " + y + " has a " + c2 + ". They swap balls " +
             std::to_string(swaps) + (swaps == 1 ? " time" : " times") + ". Which ball does " + x + " have?\n";
        r += "A: Each swap exchanges the two balls, so after " + std::to_string(swaps) + " swaps " + x +
             " has the " + held + ". \\boxed{the " + held + "}\n\n";
    }
    r += "## Solve the Initial Problem:\nLet's solve the following reasoning problem.\nQ: " + question + "\nA: " + thoughts + " \\boxed{the " + answer + "}";
    return r;
}

}  // namespace

std::vector<ScriptRule> reasoner_script(const SynthTask& task, double p) {
    const auto correct = reasoner_correct_ids(task.dataset, p);
    std::vector<ScriptRule> rules;
    std::size_t index = 0;
    for (const auto* split : {&task.dataset.train, &task.dataset.validation}) {
        for (const auto& e : *split) {
            const SwapPuzzle& puzzle = task.puzzles.at(index++);
            const std::string answer =
                correct.count(e.id) ? e.gold_answer
                                    : puzzle.final_objects[(static_cast<std::size_t>(puzzle.query) + 1) %
                                                           puzzle.final_objects.size()];
            const std::string thoughts = trace_thoughts(puzzle, answer);
            const std::string q = "Q: " + e.question + "\n";
            const std::string stage1 = q + std::string(kThinkCue);
            const std::string summary = "Comparing the candidate solutions, " + puzzle.people[puzzle.query] +
                                        " ends the game with the " + answer + ".";

            rules.push_back({MatcherKind::suffix, q + "A:", {"The " + answer + "."}});
            rules.push_back({MatcherKind::suffix, stage1, {thoughts}});
            rules.push_back({MatcherKind::suffix, stage1 + " " + thoughts + "\n" + std::string(kAnswerCue),
                             {"the " + answer + "."}});
            rules.push_back({MatcherKind::substring, "# Initial Problem:\n" + e.question + "\n\n# Instructions:",
                             {ap_response(puzzle, e.question, thoughts, answer)}});
            rules.push_back({MatcherKind::substring, "your best answer. " + e.question + "\nSolution 1:",
                             {summary}});
            rules.push_back({MatcherKind::suffix, summary + "\n" + std::string(kAnswerCue), {"the " + answer + "."}});
        }
    }
    // Summaries repeat across examples with the same person and answer.
    std::sort(rules.begin(), rules.end(), [](const ScriptRule& a, const ScriptRule& b) {
        return std::tie(a.kind, a.pattern) < std::tie(b.kind, b.pattern);
    });
    rules.erase(std::unique(rules.begin(), rules.end(),
                            [](const ScriptRule& a, const ScriptRule& b) {
                                return a.kind == b.kind && a.pattern == b.pattern;
                            }),
                rules.end());
    return rules;
}

}  // namespace mamr
