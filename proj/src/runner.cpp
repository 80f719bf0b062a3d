#include "mamr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

#include "mamr/log.hpp"

namespace fs = std::filesystem;

namespace mamr {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::main:
            return "main";
        case Family::ap_vs_cot:
            return "ap_vs_cot";
        case Family::shots_vs_varied:
            return "shots_vs_varied";
        case Family::summarizer:
            return "summarizer";
    }
    return "?";
}

Family parse_family(std::string_view s) {
    for (const Family f : {Family::main, Family::ap_vs_cot, Family::shots_vs_varied, Family::summarizer})
        if (to_string(f) == s) return f;
    throw ConfigError("unknown family '" + std::string(s) + "'");
}

namespace {

MethodCombo make(Style style, Agents agents, int m, int k, Memory memory, Aggregation agg = Aggregation::vote) {
    MethodCombo c;
    c.style = style;
    c.agents = agents;
    c.agent_count = agents == Agents::greedy ? 1 : m;
    c.memory = memory;
    c.shots = uses_memory(memory) ? k : 0;
    c.aggregation = agg;
    return c;
}

void keep_legal(std::vector<MethodCombo>& combos) {
    combos.erase(std::remove_if(combos.begin(), combos.end(),
                                [](const MethodCombo& c) { return !validate_combo(c).empty(); }),
                 combos.end());
}

}  // namespace

std::vector<MethodCombo> enumerate_matrix(Family family, int m, int k) {
    std::vector<MethodCombo> out;
    switch (family) {
        case Family::main:
            for (const Agents a : {Agents::greedy, Agents::sc}) {
                out.push_back(make(Style::direct, a, m, k, Memory::none));
                out.push_back(make(Style::zcot, a, m, k, Memory::none));
                for (const Memory mem : {Memory::frozen_fixed, Memory::frozen_random, Memory::learned_random,
                                         Memory::learned_similar})
                    out.push_back(make(Style::ncot, a, m, k, mem));
            }
            // Varied-context agents pair only with random retrieval.
            out.push_back(make(Style::ncot, Agents::varied, m, k, Memory::frozen_random));
            out.push_back(make(Style::ncot, Agents::varied, m, k, Memory::learned_random));
            break;
        case Family::ap_vs_cot:
            for (const Agents a : {Agents::greedy, Agents::sc}) {
                out.push_back(make(Style::zcot, a, m, k, Memory::none));
                out.push_back(make(Style::ncot, a, m, k, Memory::learned_random));
                out.push_back(make(Style::ncot, a, m, k, Memory::learned_similar));
                out.push_back(make(Style::ap, a, m, k, Memory::none));
                out.push_back(make(Style::ap_memory, a, m, k, Memory::learned_random));
                out.push_back(make(Style::ap_memory, a, m, k, Memory::learned_similar));
            }
            out.push_back(make(Style::ncot, Agents::varied, m, k, Memory::learned_random));
            out.push_back(make(Style::ap_memory, Agents::varied, m, k, Memory::learned_random));
            break;
        case Family::shots_vs_varied:
            out.push_back(make(Style::ncot, Agents::greedy, 1, 15, Memory::frozen_random));
            out.push_back(make(Style::ncot, Agents::sc, 5, 15, Memory::frozen_random));
            out.push_back(make(Style::ncot, Agents::varied, 5, 3, Memory::frozen_random));
            break;
        case Family::summarizer:
            for (const Aggregation agg : {Aggregation::vote, Aggregation::summarizer}) {
                out.push_back(make(Style::direct, Agents::sc, m, k, Memory::none, agg));
                out.push_back(make(Style::zcot, Agents::sc, m, k, Memory::none, agg));
                out.push_back(make(Style::ncot, Agents::sc, m, k, Memory::frozen_fixed, agg));
                out.push_back(make(Style::ncot, Agents::sc, m, k, Memory::frozen_random, agg));
                out.push_back(make(Style::ncot, Agents::varied, m, k, Memory::frozen_random, agg));
            }
            break;
    }
    keep_legal(out);
    return out;
}

CallPrediction predict_calls(const MethodCombo& combo, std::uint64_t nt, std::uint64_t nv, std::uint64_t r) {
    const std::uint64_t m = combo.agents == Agents::greedy ? 1 : static_cast<std::uint64_t>(combo.agent_count);
    const std::uint64_t k = static_cast<std::uint64_t>(combo.shots);
    const std::uint64_t calls_per_agent = is_two_call(combo.style) ? 2 : 1;
    CallPrediction p;
    p.validation = calls_per_agent * m * nv * r;
    if (combo.aggregation == Aggregation::summarizer) p.validation += 2 * nv * r;
    if (is_frozen(combo.memory)) {
        p.training = 2 * nt;
        p.max_stored = nt;
        p.shared_frozen_build = true;
    } else if (is_learned(combo.memory)) {
        if (combo.style == Style::ap_memory) {
            p.training = m * nt * r;
            p.max_stored = m * k * nt * r;
        } else {
            p.training = 2 * m * nt * r;
            p.max_stored = m * nt * r;
        }
    }
    return p;
}

std::pair<double, double> error_bars(std::span<const double> values) {
    if (values.empty()) throw Error("error_bars: empty input");
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    return {mean, 2.0 * std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

ComboStats summarize_runs(Task task, const std::string& model, const MethodCombo& combo,
                          std::span<const RunResult> runs) {
    std::vector<double> acc;
    ComboStats s;
    s.task = task;
    s.model = model;
    s.combo = combo;
    s.runs = static_cast<int>(runs.size());
    for (const auto& r : runs) {
        acc.push_back(r.accuracy);
        s.failures += r.failures;
    }
    std::tie(s.mean, s.two_sigma) = error_bars(acc);
    return s;
}

namespace {

RetrievalMode training_retrieval(Memory m) {
    return m == Memory::learned_similar ? RetrievalMode::similar : RetrievalMode::random;
}

std::optional<MemoryBank> train_bank(const RunConfig& config, const Dataset& dataset, Gateway& gateway,
                                     std::uint64_t run_seed, std::size_t& failures) {
    TrainingConfig tc;
    tc.task = dataset.task;
    tc.model_name = config.model.name;
    tc.shots = config.combo.shots;
    tc.agents = {config.combo.agents, config.combo.agent_count};
    tc.retrieval = training_retrieval(config.combo.memory);
    tc.seed = seed_stream(run_seed, {"train"});
    tc.max_tokens = config.model.max_tokens;
    tc.embed_exemplars = tc.retrieval == RetrievalMode::similar;
    TrainingResult result = config.combo.style == Style::ap_memory
                                ? train_learned_ap(dataset.train, gateway, tc)
                                : train_learned_ncot(dataset.train, gateway, tc);
    failures = result.failures;
    return std::move(result.bank);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<RunResult> execute(const RunConfig& config, const Dataset& dataset, const Gateway& gateway,
                               const MemoryBank* frozen_bank, const ExecuteOptions& options) {
    const MethodCombo& combo = config.combo;
    if (const auto v = validate_combo(combo); !v.empty())
        throw ConfigError("invalid combo " + combo.label() + ": " + v.front());
    if (config.runs < 1) throw ConfigError("runs must be >= 1");
    if (is_frozen(combo.memory) && !frozen_bank)
        throw ConfigError("combo " + combo.label() + " needs a frozen memory bank");
    if (combo.memory == Memory::learned_similar && !gateway.has_embedder())
        throw ConfigError("combo " + combo.label() + " needs an embedding backend");

    std::vector<RunResult> results;
    for (int r = 0; r < config.runs; ++r) {
        RunResult run;
        run.combo = combo;
        run.run_index = r;
        run.run_seed = seed_stream(config.master_seed, {"run:" + std::to_string(r)});

        CallLedger ledger;
        Gateway gw = gateway.with_ledger(ledger);
        std::optional<MemoryBank> learned;
        if (is_learned(combo.memory)) {
            learned = train_bank(config, dataset, gw, run.run_seed, run.training_failures);
            run.bank_size = learned->size();
        }

        ExampleContext ctx;
        ctx.task = dataset.task;
        ctx.bank = learned ? &*learned : (is_frozen(combo.memory) ? frozen_bank : nullptr);
        ctx.run_seed = run.run_seed;
        if (combo.memory == Memory::frozen_fixed) ctx.fixed_seed = seed_stream(run.run_seed, {"fixed"});
        ctx.max_tokens = config.model.max_tokens;

        run.outcomes.resize(dataset.validation.size());
        parallel_for(dataset.validation.size(), options.threads, [&](std::size_t i) {
            Gateway local = gw;
            run.outcomes[i] = run_example(dataset.validation[i], combo, local, ctx);
        });

        for (const auto& o : run.outcomes) {
            run.correct += o.correct ? 1 : 0;
            run.failures += o.failed ? 1 : 0;
        }
        run.accuracy = run.outcomes.empty()
                           ? 0.0
                           : static_cast<double>(run.correct) / static_cast<double>(run.outcomes.size());
        run.ledger = ledger.snapshot();
        results.push_back(std::move(run));
    }
    return results;
}

LedgerCheck check_ledger(const MethodCombo& combo, const CallPrediction& prediction,
                         const LedgerSnapshot& measured, std::span<const RunResult> runs,
                         const std::optional<LedgerSnapshot>& frozen_build) {
    LedgerCheck c;
    std::size_t failures = 0;
    for (const auto& r : runs) {
        for (const auto& o : r.outcomes)
            for (const auto& t : o.traces) failures += t.failed ? 1 : 0;
        failures += r.training_failures;
    }
    if (failures > 0) {
        c.skipped = true;
        c.detail = std::to_string(failures) + " failed agent attempts; counts not comparable";
        return c;
    }
    std::ostringstream why;
    const std::uint64_t want_training = prediction.shared_frozen_build ? 0 : prediction.training;
    if (measured.validation_total() != prediction.validation)
        why << "validation calls " << measured.validation_total() << " != " << prediction.validation << "; ";
    if (measured.training_total() != want_training)
        why << "training calls " << measured.training_total() << " != " << want_training << "; ";
    if (prediction.shared_frozen_build && frozen_build && frozen_build->training_total() != prediction.training)
        why << "frozen build calls " << frozen_build->training_total() << " != " << prediction.training << "; ";
    if (is_learned(combo.memory)) {
        std::uint64_t stored = 0;
        for (const auto& r : runs) stored += r.bank_size.value_or(0);
        if (stored > prediction.max_stored)
            why << "stored exemplars " << stored << " > " << prediction.max_stored << "; ";
    }
    c.detail = why.str();
    c.passed = c.detail.empty();
    if (c.passed) c.detail = "ok";
    return c;
}

bool MatrixReport::all_checks_passed() const {
    return std::all_of(combos.begin(), combos.end(), [](const ComboReport& c) { return c.check.passed; });
}

MatrixReport run_matrix(std::span<const MethodCombo> combos, const RunConfig& base, const Dataset& dataset,
                        const Gateway& gateway, const MemoryBank* frozen_bank, const ExecuteOptions& options) {
    for (const auto& c : combos)
        if (const auto v = validate_combo(c); !v.empty())
            throw ConfigError("invalid combo " + c.label() + ": " + v.front());

    MatrixReport report;
    std::optional<MemoryBank> built;
    const bool needs_frozen =
        std::any_of(combos.begin(), combos.end(), [](const MethodCombo& c) { return is_frozen(c.memory); });
    if (needs_frozen && !frozen_bank) {
        CallLedger ledger;
        Gateway gw = gateway.with_ledger(ledger);
        TrainingResult r = build_frozen(dataset.train, gw, dataset.task, base.model.name, base.model.max_tokens);
        built = std::move(r.bank);
        frozen_bank = &*built;
        report.frozen_build = ledger.snapshot();
        log::info("frozen bank built: " + std::to_string(built->size()) + " exemplars");
    }
    if (frozen_bank) report.frozen_size = frozen_bank->size();

    for (const auto& combo : combos) {
        RunConfig config = base;
        config.combo = combo;
        ComboReport cr;
        cr.runs = execute(config, dataset, gateway, frozen_bank, options);
        cr.stats = summarize_runs(dataset.task, base.model.name, combo, cr.runs);
        cr.prediction = predict_calls(combo, dataset.n_train(), dataset.n_validation(),
                                      static_cast<std::uint64_t>(config.runs));
        for (const auto& r : cr.runs) cr.measured += r.ledger;
        cr.check = check_ledger(combo, cr.prediction, cr.measured, cr.runs, report.frozen_build);
        log::info(combo.label() + ": mean " + std::to_string(cr.stats.mean) + ", ledger " + cr.check.detail);
        report.combos.push_back(std::move(cr));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Results files

void sort_stats(std::vector<ComboStats>& stats) {
    std::stable_sort(stats.begin(), stats.end(), [](const ComboStats& a, const ComboStats& b) {
        return std::make_tuple(a.task, a.model, a.combo.style, a.combo.agents, a.combo.memory, a.combo.agent_count,
                               a.combo.shots, a.combo.aggregation) <
               std::make_tuple(b.task, b.model, b.combo.style, b.combo.agents, b.combo.memory, b.combo.agent_count,
                               b.combo.shots, b.combo.aggregation);
    });
}

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (const char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

}  // namespace

std::string format_results(std::vector<ComboStats> stats) {
    sort_stats(stats);
    std::string out{kResultsHeader};
    out += '\n';
    for (const auto& s : stats) {
        const auto& c = s.combo;
        out += std::string(to_string(s.task)) + ',' + csv_field(s.model) + ',' + std::string(to_string(c.style)) +
               ',' + std::string(to_string(c.agents)) + ',' + std::to_string(c.agent_count) + ',' +
               std::to_string(c.shots) + ',' + std::string(to_string(c.memory)) + ',' +
               std::string(to_string(c.aggregation)) + ',' + percent(s.mean) + ',' + percent(s.two_sigma) + ',' +
               std::to_string(s.runs) + ',' + std::to_string(s.failures) + '\n';
    }
    return out;
}

void write_results(std::vector<ComboStats> stats, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << format_results(std::move(stats));
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<ComboStats> read_results(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw LoadError(path.string() + ": empty results file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultsHeader) throw LoadError(path.string() + ": unexpected header '" + line + "'");
    std::vector<ComboStats> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        const std::string where = path.string() + ":" + std::to_string(n);
        if (f.size() != 12) throw LoadError(where + ": expected 12 fields, found " + std::to_string(f.size()));
        try {
            ComboStats s;
            s.task = parse_task(f[0]);
            s.model = f[1];
            s.combo.style = parse_style(f[2]);
            s.combo.agents = parse_agents(f[3]);
            s.combo.agent_count = std::stoi(f[4]);
            s.combo.shots = std::stoi(f[5]);
            s.combo.memory = parse_memory(f[6]);
            s.combo.aggregation = parse_aggregation(f[7]);
            s.mean = std::stod(f[8]) / 100.0;
            s.two_sigma = std::stod(f[9]) / 100.0;
            s.runs = std::stoi(f[10]);
            s.failures = static_cast<std::size_t>(std::stoull(f[11]));
            out.push_back(std::move(s));
        } catch (const ConfigError& e) {
            throw LoadError(where + ": " + e.what());
        } catch (const std::logic_error& e) {
            throw LoadError(where + ": bad number");
        }
    }
    return out;
}

json to_json(const RunResult& run, bool full_traces) {
    json outcomes = json::array();
    for (const auto& o : run.outcomes) outcomes.push_back(to_json(o, full_traces));
    json j{{"combo", to_json(run.combo)},
           {"label", run.combo.label()},
           {"run_index", run.run_index},
           {"run_seed", run.run_seed},
           {"accuracy", run.accuracy},
           {"correct", run.correct},
           {"total", run.outcomes.size()},
           {"failures", run.failures},
           {"ledger", to_json(run.ledger)},
           {"outcomes", outcomes}};
    if (run.bank_size) j["bank_size"] = *run.bank_size;
    if (run.training_failures) j["training_failures"] = run.training_failures;
    return j;
}

void write_runs(std::span<const RunResult> runs, Task task, const std::string& model, const fs::path& path,
                bool full_traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : runs) {
        json j = to_json(r, full_traces);
        j["task"] = to_string(task);
        j["model"] = model;
        out << j.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace mamr
