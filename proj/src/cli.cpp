#include "mamr/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "mamr/log.hpp"
#include "mamr/memory_bank.hpp"
#include "mamr/runner.hpp"
#include "mamr/tasks.hpp"

namespace fs = std::filesystem;

namespace mamr {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::optional<double> reasoner_accuracy(const std::string& stem) {
    if (stem == "perfect") return 1.0;
    if (stem.size() < 2 || stem[0] != 'p') return std::nullopt;
    for (std::size_t i = 1; i < stem.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(stem[i]))) return std::nullopt;
    const int pct = std::stoi(stem.substr(1));
    if (pct > 100) return std::nullopt;
    return pct / 100.0;
}

std::string http_url(const std::string& rest) { return rest.rfind("//", 0) == 0 ? "http:" + rest : rest; }

}  // namespace

std::shared_ptr<TextBackend> make_text_backend(const std::string& spec, const std::string& model,
                                               const SynthTask* synthetic) {
    if (spec.rfind("scripted:", 0) == 0) {
        const fs::path path = spec.substr(9);
        if (fs::exists(path)) {
            std::string fallback;
            auto rules = load_script(path, &fallback);
            return std::make_shared<ScriptedBackend>(std::move(rules), std::move(fallback));
        }
        std::string stem = path.filename().string();
        if (path.extension() == ".jsonl") stem = path.stem().string();
        const auto p = reasoner_accuracy(stem);
        if (!p) throw ConfigError("script file not found: " + path.string());
        if (!synthetic)
            throw ConfigError("generated reasoner '" + stem + "' is only available for the synthetic task");
        return std::make_shared<ScriptedBackend>(reasoner_script(*synthetic, *p));
    }
    if (spec.rfind("http:", 0) == 0) {
        HttpEndpoint ep;
        ep.url = http_url(spec.substr(5));
        ep.model = model;
        ep.api_key = env_or("MAMR_API_KEY", "");
        ep.auth_header = env_or("MAMR_AUTH_HEADER", ep.auth_header);
        return std::make_shared<HttpChatBackend>(std::move(ep));
    }
    throw ConfigError("backend must be scripted:<path> or http:<url>, got '" + spec + "'");
}

std::shared_ptr<EmbeddingBackend> make_embedder(const std::string& spec, const std::string& model) {
    if (spec.rfind("mock:", 0) == 0) {
        std::size_t dim = 0;
        try {
            dim = std::stoul(spec.substr(5));
        } catch (const std::logic_error&) {
        }
        if (dim == 0) throw ConfigError("bad embedder dimension in '" + spec + "'");
        return std::make_shared<MockEmbedder>(dim);
    }
    if (spec.rfind("http:", 0) == 0) {
        std::string rest = spec.substr(5);
        std::size_t dim = 0;
        if (const auto hash = rest.rfind('#'); hash != std::string::npos) {
            try {
                dim = std::stoul(rest.substr(hash + 1));
            } catch (const std::logic_error&) {
                throw ConfigError("bad embedder dimension in '" + spec + "'");
            }
            rest.resize(hash);
        }
        HttpEndpoint ep;
        ep.url = http_url(rest);
        ep.model = env_or("MAMR_EMBED_MODEL", model);
        ep.api_key = env_or("MAMR_API_KEY", "");
        ep.auth_header = env_or("MAMR_AUTH_HEADER", ep.auth_header);
        return std::make_shared<HttpEmbeddingBackend>(std::move(ep), dim);
    }
    throw ConfigError("embedder must be mock:<dim> or http:<url>[#dim], got '" + spec + "'");
}

namespace {

struct DataOptions {
    std::string task = "synth";
    std::string data;
    std::size_t n_train = 40;
    std::size_t n_validation = 20;
    int people = 3;
    int swaps = 3;
    std::uint64_t synth_seed = 0;
};

struct ModelOptions {
    std::string backend;
    std::string model = env_or("MAMR_MODEL", "scripted");
    std::string embedder = "mock:16";
    int max_tokens = kDefaultMaxTokens;
    unsigned threads = 0;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--task", d.task, "folio, raco, tso or synth")->capture_default_str();
    cmd->add_option("--data", d.data, "dataset path (default: $MAMR_DATA_ROOT/<task>)");
    cmd->add_option("--n-train", d.n_train, "synthetic train size")->capture_default_str();
    cmd->add_option("--n-val", d.n_validation, "synthetic validation size")->capture_default_str();
    cmd->add_option("--people", d.people, "synthetic people per puzzle")->capture_default_str();
    cmd->add_option("--swaps", d.swaps, "synthetic swaps per puzzle")->capture_default_str();
    cmd->add_option("--synth-seed", d.synth_seed, "synthetic generation seed")->capture_default_str();
}

void add_model_options(CLI::App* cmd, ModelOptions& m, bool backend_required) {
    auto* b = cmd->add_option("--backend", m.backend, "scripted:<path> or http:<url>");
    if (backend_required) b->required();
    cmd->add_option("--model", m.model, "model name (default: $MAMR_MODEL)");
    cmd->add_option("--embedder", m.embedder, "mock:<dim> or http:<url>[#dim]")->capture_default_str();
    cmd->add_option("--max-tokens", m.max_tokens)->capture_default_str();
    cmd->add_option("--threads", m.threads, "worker threads (0: all cores)")->capture_default_str();
}

struct LoadedData {
    Dataset dataset;
    std::optional<SynthTask> synth;
};

LoadedData load_data(const DataOptions& d) {
    LoadedData out;
    const Task task = parse_task(d.task);
    if (task == Task::synthetic && d.data.empty()) {
        SynthSpec spec;
        spec.n_train = d.n_train;
        spec.n_validation = d.n_validation;
        spec.n_people = d.people;
        spec.n_swaps = d.swaps;
        spec.seed = d.synth_seed;
        out.synth = synth_tso(spec);
        out.dataset = out.synth->dataset;
        return out;
    }
    fs::path path = d.data;
    if (path.empty()) {
        const std::string root = env_or("MAMR_DATA_ROOT", "");
        if (root.empty()) throw ConfigError("no dataset: pass --data or set MAMR_DATA_ROOT");
        static const std::map<Task, std::string> dirs = {{Task::folio, "folio"},
                                                         {Task::raco, "reasoning_about_colored_objects"},
                                                         {Task::tso, "tracking_shuffled_objects"},
                                                         {Task::synthetic, "synth/data.jsonl"}};
        path = fs::path(root) / dirs.at(task);
    }
    out.dataset = load_dataset(task, path);
    return out;
}

Gateway make_gateway(const ModelOptions& m, const LoadedData& data, CallLedger& ledger) {
    return Gateway(make_text_backend(m.backend, m.model, data.synth ? &*data.synth : nullptr),
                   make_embedder(m.embedder, m.model), ledger);
}

void print_ledger(std::ostream& out, const LedgerSnapshot& s) {
    out << "ledger: training " << s.training_total() << ", validation " << s.validation_total() << ", embeddings "
        << s.embedding_calls << '\n';
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// ---------------------------------------------------------------------------

int cmd_build_memory(const DataOptions& d, const ModelOptions& m, const std::string& out_path, bool embed,
                     std::ostream& out) {
    const LoadedData data = load_data(d);
    CallLedger ledger;
    Gateway gw = make_gateway(m, data, ledger);
    const TrainingResult r = build_frozen(data.dataset.train, gw, data.dataset.task, m.model, m.max_tokens, embed);
    ensure_parent(out_path);
    save_bank(r.bank, out_path);
    out << "bank: " << r.bank.size() << " exemplars from " << data.dataset.n_train() << " training examples -> "
        << out_path << '\n';
    print_ledger(out, ledger.snapshot());
    if (r.failures == 0 && ledger.snapshot().training_total() != 2 * data.dataset.n_train()) {
        out << "ledger check failed: expected " << 2 * data.dataset.n_train() << " training calls\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

struct TrainOptions {
    std::string style = "ncot";
    std::string agents = "greedy";
    int m = 1;
    int k = kDefaultShots;
    std::string retrieval = "random";
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_train_memory(const DataOptions& d, const ModelOptions& mo, const TrainOptions& t, std::ostream& out,
                     std::ostream& err) {
    MethodCombo combo;
    combo.style = parse_style(t.style);
    if (combo.style == Style::ap) combo.style = Style::ap_memory;
    combo.agents = parse_agents(t.agents);
    combo.agent_count = combo.agents == Agents::greedy ? 1 : t.m;
    combo.shots = t.k;
    if (t.retrieval != "random" && t.retrieval != "similar")
        throw ConfigError("--retrieval must be random or similar");
    combo.memory = t.retrieval == "similar" ? Memory::learned_similar : Memory::learned_random;
    if (combo.style != Style::ncot && combo.style != Style::ap_memory)
        throw ConfigError("--style must be ncot or ap");
    if (const auto v = validate_combo(combo); !v.empty()) {
        for (const auto& s : v) err << "invalid combo: " << s << '\n';
        return kExitUsage;
    }

    const LoadedData data = load_data(d);
    CallLedger ledger;
    Gateway gw = make_gateway(mo, data, ledger);
    TrainingConfig tc;
    tc.task = data.dataset.task;
    tc.model_name = mo.model;
    tc.shots = combo.shots;
    tc.agents = {combo.agents, combo.agent_count};
    tc.retrieval = t.retrieval == "similar" ? RetrievalMode::similar : RetrievalMode::random;
    tc.seed = t.seed;
    tc.max_tokens = mo.max_tokens;
    tc.embed_exemplars = tc.retrieval == RetrievalMode::similar;
    const TrainingResult r = combo.style == Style::ap_memory ? train_learned_ap(data.dataset.train, gw, tc)
                                                             : train_learned_ncot(data.dataset.train, gw, tc);
    ensure_parent(t.out);
    save_bank(r.bank, t.out);
    out << "bank: " << r.bank.size() << " exemplars (" << to_string(r.bank.kind()) << ") -> " << t.out << '\n';
    if (r.parse_warnings) out << "unparseable analogical completions: " << r.parse_warnings << '\n';
    const LedgerSnapshot s = ledger.snapshot();
    print_ledger(out, s);
    const CallPrediction p = predict_calls(combo, data.dataset.n_train(), data.dataset.n_validation(), 1);
    if (r.failures == 0 && (s.training_total() != p.training || r.bank.size() > p.max_stored)) {
        out << "ledger check failed: predicted " << p.training << " training calls, at most " << p.max_stored
            << " exemplars\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

struct RunOptions {
    std::string family;
    std::string combo;
    std::string config;
    int runs = kDefaultRuns;
    std::uint64_t seed = 0;
    std::string out_dir = "results";
    bool record_traces = false;
    std::string frozen_bank;
    int m = kDefaultAgents;
    int k = kDefaultShots;
};

int cmd_run(DataOptions d, ModelOptions mo, const RunOptions& ro, const CLI::App& cmd, std::ostream& out,
            std::ostream& err) {
    const int sources = !ro.family.empty() + !ro.combo.empty() + !ro.config.empty();
    if (sources != 1) throw ConfigError("pass exactly one of --family, --combo, --config");

    RunConfig base;
    std::vector<MethodCombo> combos;
    if (!ro.config.empty()) {
        std::ifstream in(ro.config);
        if (!in) throw ConfigError("cannot open config " + ro.config);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("malformed config " + ro.config + ": " + e.what());
        }
        base = run_config_from_json(j);
        combos.push_back(base.combo);
        if (!base.dataset_path.empty() && d.data.empty()) d.data = base.dataset_path;
        if (cmd.count("--task") == 0) d.task = std::string(to_string(base.task));
        if (cmd.count("--backend") == 0 && !base.model.backend.empty()) mo.backend = base.model.backend;
        if (cmd.count("--model") == 0) mo.model = base.model.name;
        if (cmd.count("--embedder") == 0) mo.embedder = base.model.embedder;
        if (cmd.count("--max-tokens") == 0) mo.max_tokens = base.model.max_tokens;
    } else if (!ro.combo.empty()) {
        combos.push_back(parse_combo_spec(ro.combo));
    } else {
        combos = enumerate_matrix(parse_family(ro.family), ro.m, ro.k);
    }
    if (ro.config.empty() || cmd.count("--runs")) base.runs = ro.runs;
    if (ro.config.empty() || cmd.count("--seed")) base.master_seed = ro.seed;
    if (mo.backend.empty()) throw ConfigError("--backend is required");

    bool invalid = false;
    for (const auto& c : combos)
        for (const auto& v : validate_combo(c)) {
            err << "invalid combo " << c.label() << ": " << v << '\n';
            invalid = true;
        }
    if (invalid) return kExitUsage;

    const LoadedData data = load_data(d);
    base.task = data.dataset.task;
    base.model.name = mo.model;
    base.model.backend = mo.backend;
    base.model.embedder = mo.embedder;
    base.model.max_tokens = mo.max_tokens;

    std::optional<MemoryBank> frozen;
    if (!ro.frozen_bank.empty()) frozen = load_bank(ro.frozen_bank);

    CallLedger unused;
    const Gateway gw = make_gateway(mo, data, unused);
    ExecuteOptions eo;
    eo.threads = mo.threads;
    const MatrixReport report = run_matrix(combos, base, data.dataset, gw, frozen ? &*frozen : nullptr, eo);

    fs::create_directories(ro.out_dir);
    std::vector<ComboStats> stats;
    std::vector<RunResult> runs;
    json checks = json::array();
    for (const auto& c : report.combos) {
        stats.push_back(c.stats);
        runs.insert(runs.end(), c.runs.begin(), c.runs.end());
        checks.push_back({{"combo", c.stats.combo.label()},
                          {"predicted", {{"training", c.prediction.training},
                                         {"validation", c.prediction.validation},
                                         {"max_stored", c.prediction.max_stored},
                                         {"shared_frozen_build", c.prediction.shared_frozen_build}}},
                          {"measured", to_json(c.measured)},
                          {"passed", c.check.passed},
                          {"skipped", c.check.skipped},
                          {"detail", c.check.detail}});
    }
    json ledger_doc{{"combos", checks}};
    if (report.frozen_build) ledger_doc["frozen_build"] = to_json(*report.frozen_build);
    if (report.frozen_size) ledger_doc["frozen_bank_size"] = *report.frozen_size;

    const fs::path dir = ro.out_dir;
    write_results(stats, dir / "results.csv");
    write_runs(runs, data.dataset.task, mo.model, dir / "runs.jsonl", ro.record_traces);
    {
        std::ofstream lf(dir / "ledger.json", std::ios::binary);
        lf << ledger_doc.dump(2) << '\n';
    }

    out << format_results(stats);
    for (const auto& c : report.combos)
        if (!c.check.passed) out << "ledger check failed for " << c.stats.combo.label() << ": " << c.check.detail
                                 << '\n';
    return report.all_checks_passed() ? kExitOk : kExitCheckFailed;
}

std::string cell(double mean, double two_sigma) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << mean * 100.0 << " ± " << two_sigma * 100.0;
    return s.str();
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& merged, std::ostream& out) {
    if (inputs.empty()) throw ConfigError("report needs at least one results file");
    std::vector<ComboStats> rows;
    for (const auto& path : inputs) {
        auto r = read_results(path);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    if (rows.empty()) throw ConfigError("no result rows in the given files");
    sort_stats(rows);

    // Best mean per (task, model), compared at the printed precision.
    std::map<std::pair<Task, std::string>, long> best;
    const auto key = [](const ComboStats& s) { return std::lround(s.mean * 1000.0); };
    for (const auto& s : rows) {
        auto [it, fresh] = best.emplace(std::make_pair(s.task, s.model), key(s));
        if (!fresh) it->second = std::max(it->second, key(s));
    }

    out << "| task | model | style | agents | M | K | memory | aggregation | accuracy |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : rows) {
        std::string acc = cell(s.mean, s.two_sigma);
        if (key(s) == best[{s.task, s.model}]) acc = "**" + acc + "**";
        out << "| " << to_string(s.task) << " | " << s.model << " | " << to_string(s.combo.style) << " | "
            << to_string(s.combo.agents) << " | " << s.combo.agent_count << " | " << s.combo.shots << " | "
            << to_string(s.combo.memory) << " | " << to_string(s.combo.aggregation) << " | " << acc << " |\n";
    }
    if (!merged.empty()) {
        ensure_parent(merged);
        write_results(rows, merged);
    }
    return kExitOk;
}

int cmd_synth(const DataOptions& d, const std::string& out_dir, double accuracy, std::ostream& out) {
    SynthSpec spec;
    spec.n_train = d.n_train;
    spec.n_validation = d.n_validation;
    spec.n_people = d.people;
    spec.n_swaps = d.swaps;
    spec.seed = d.synth_seed;
    const SynthTask task = synth_tso(spec);
    const fs::path dir = out_dir;
    fs::create_directories(dir);
    save_examples_jsonl(task.dataset, dir / "data.jsonl");
    save_script(dir / "perfect.jsonl", reasoner_script(task, 1.0));
    const std::string name = "p" + std::to_string(std::lround(accuracy * 100.0)) + ".jsonl";
    save_script(dir / name, reasoner_script(task, accuracy));
    out << "wrote " << task.dataset.n_train() << "/" << task.dataset.n_validation()
        << " examples, perfect.jsonl and " << name << " to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-agent memory reasoning experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");

    DataOptions data;
    ModelOptions model;

    auto* build = app.add_subcommand("build-memory", "build a frozen memory bank with one greedy ZCoT pass");
    std::string build_out;
    bool build_embed = false;
    add_data_options(build, data);
    add_model_options(build, model, true);
    build->add_option("--out", build_out, "bank JSONL path")->required();
    build->add_flag("--embed", build_embed, "store exemplar embeddings");

    auto* train = app.add_subcommand("train-memory", "train a learned memory bank");
    TrainOptions topt;
    add_data_options(train, data);
    add_model_options(train, model, true);
    train->add_option("--style", topt.style, "ncot or ap")->capture_default_str();
    train->add_option("--agents", topt.agents, "greedy, sc or varied")->capture_default_str();
    train->add_option("--m", topt.m, "agent count")->capture_default_str();
    train->add_option("--k", topt.k, "shots")->capture_default_str();
    train->add_option("--retrieval", topt.retrieval, "random or similar")->capture_default_str();
    train->add_option("--seed", topt.seed)->capture_default_str();
    train->add_option("--out", topt.out, "bank JSONL path")->required();

    auto* run = app.add_subcommand("run", "execute a family, a single combo or a config file");
    RunOptions ropt;
    add_data_options(run, data);
    add_model_options(run, model, false);
    run->add_option("--family", ropt.family, "main, ap_vs_cot, shots_vs_varied or summarizer");
    run->add_option("--combo", ropt.combo, "style=..,agents=..,m=..,k=..,memory=..,aggregation=..");
    run->add_option("--config", ropt.config, "run configuration JSON");
    run->add_option("--runs", ropt.runs)->capture_default_str();
    run->add_option("--seed", ropt.seed, "master seed")->capture_default_str();
    run->add_option("--m", ropt.m, "agent count for family matrices")->capture_default_str();
    run->add_option("--k", ropt.k, "shots for family matrices")->capture_default_str();
    run->add_option("--out-dir", ropt.out_dir)->capture_default_str();
    run->add_flag("--record-traces", ropt.record_traces, "store full prompts and completions");
    run->add_option("--frozen-bank", ropt.frozen_bank, "prebuilt frozen bank");

    auto* report = app.add_subcommand("report", "print results tables");
    std::vector<std::string> inputs;
    std::string merged;
    report->add_option("inputs", inputs, "results CSV files");
    report->add_option("--out", merged, "write merged CSV");

    auto* synth = app.add_subcommand("synth", "write a synthetic dataset with reasoner scripts");
    std::string synth_out;
    double accuracy = 0.8;
    add_data_options(synth, data);
    synth->add_option("--out-dir", synth_out)->required();
    synth->add_option("--accuracy", accuracy, "accuracy of the p-correct reasoner")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    log::set_level(verbose ? log::Level::debug : quiet ? log::Level::warn : log::Level::info);

    try {
        if (*build) return cmd_build_memory(data, model, build_out, build_embed, out);
        if (*train) return cmd_train_memory(data, model, topt, out, err);
        if (*run) return cmd_run(data, model, ropt, *run, out, err);
        if (*report) return cmd_report(inputs, merged, out);
        if (*synth) return cmd_synth(data, synth_out, accuracy, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const LoadError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}

}  // namespace mamr
