// Command-line front end: synthetic data generation, single active-learning
// runs, multi-seed replication and the region-recovery demo.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alforge/experiment.hpp"

namespace {

using namespace alforge;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_dims(const std::string& s) {
    std::vector<std::size_t> dims;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        dims.push_back(std::stoull(cell));
    }
    return dims;
}

SplitRatios parse_split(const std::string& s) {
    std::vector<double> r;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
    if (r.size() != 3) throw UsageError("--split needs three comma-separated ratios");
    return {r[0], r[1], r[2]};
}

ColumnRef parse_label_column(const std::string& s) {
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoull(s));
    return s;
}

std::vector<StrategyKind> parse_strategies(const std::string& s) {
    std::vector<StrategyKind> kinds;
    if (s == "all") {
        kinds.assign(all_strategies().begin(), all_strategies().end());
        return kinds;
    }
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto kind = strategy_from_string(cell);
        if (!kind)
            throw UsageError("unknown strategy '" + cell +
                             "' (valid: rnd, egl, bald, coreset, badge, dami)");
        kinds.push_back(*kind);
    }
    if (kinds.empty()) throw UsageError("--strategies is empty");
    return kinds;
}

std::size_t default_jobs() {
    if (const char* env = std::getenv("ALFORGE_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat `key = value` config files, one key per line, `#` comments. Values
// fill in only options the command line left untouched.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config '" + path + "' line " + std::to_string(line_no) +
                             ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        if (key == "config") continue;

        CLI::Option* opt = cmd.get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw UsageError("config '" + path + "' line " + std::to_string(line_no) +
                             ": unknown key '" + key + "'");
        if (opt->count() > 0) continue;  // flags win
        opt->add_result(value);
        opt->run_callback();
    }
}

// Flags shared by `run` and `replicate`.
struct ExperimentFlags {
    std::string data;
    std::string label_col = "y";
    std::string delimiter = ",";
    std::string split = "0.6,0.2,0.2";
    std::string hidden = "16,8";
    double dropout = 0.8;
    double lr = 1e-3;
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    std::size_t patience = 20;
    std::size_t bald_passes = 20;
    double init_fraction = 0.02;
    double round_fraction = 0.02;
    double stop_fraction = 0.50;
    std::string format = "csv";

    void add_to(CLI::App& cmd) {
        cmd.add_option("--data", data, "input CSV (header row required)");
        cmd.add_option("--label-col", label_col, "label column name or zero-based index");
        cmd.add_option("--delimiter", delimiter, "CSV delimiter")->expected(1);
        cmd.add_option("--split", split, "train,val,test ratios");
        cmd.add_option("--hidden", hidden, "hidden layer widths, comma separated");
        cmd.add_option("--dropout", dropout, "hidden-unit drop probability");
        cmd.add_option("--lr", lr, "learning rate");
        cmd.add_option("--epochs", epochs, "max training epochs");
        cmd.add_option("--batch-size", batch_size, "minibatch size");
        cmd.add_option("--patience", patience, "early-stopping patience (validation AUC rounds)");
        cmd.add_option("--bald-passes", bald_passes, "dropout forward passes for bald");
        cmd.add_option("--init-fraction", init_fraction, "initial labeled fraction of train");
        cmd.add_option("--round-fraction", round_fraction, "labels added per round");
        cmd.add_option("--stop-fraction", stop_fraction, "labeled fraction at which to stop");
        cmd.add_option("--format", format, "output format: csv or jsonl")
            ->check(CLI::IsMember({"csv", "jsonl"}));
    }

    ExperimentConfig to_config() const {
        if (data.empty()) throw UsageError("--data is required");
        if (delimiter.size() != 1) throw UsageError("--delimiter must be one character");
        ExperimentConfig cfg;
        cfg.dataset = load_csv(data, parse_label_column(label_col), delimiter[0], {"quadrant"});
        cfg.split_ratios = parse_split(split);
        cfg.mlp.hidden_dims = parse_dims(hidden);
        cfg.mlp.drop_prob = dropout;
        cfg.train.learning_rate = lr;
        cfg.train.max_epochs = epochs;
        cfg.train.batch_size = batch_size;
        cfg.train.patience = patience;
        cfg.strategy.bald_passes = bald_passes;
        cfg.init_fraction = init_fraction;
        cfg.round_fraction = round_fraction;
        cfg.stop_fraction = stop_fraction;
        return cfg;
    }

    ResultFormat result_format() const {
        return format == "jsonl" ? ResultFormat::JsonLines : ResultFormat::Csv;
    }
    std::string extension() const { return format == "jsonl" ? ".jsonl" : ".csv"; }
};

int cmd_gen_toy(std::size_t n, std::uint64_t seed, std::string out) {
    if (out.empty()) out = "sigmoid_" + std::to_string(n) + "_" + std::to_string(seed) + ".csv";
    const Dataset ds = make_sigmoid_dataset(n, seed);
    const std::string tmp = out + ".tmp";
    save_csv(ds, tmp);
    if (std::rename(tmp.c_str(), out.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename '" + tmp + "' to '" + out + "'");
    }
    std::cout << "wrote " << out << " (" << ds.size() << " rows)\n";
    return kExitOk;
}

int cmd_run(const ExperimentFlags& flags, const std::string& strategy_name, std::uint64_t seed,
            std::string out, const std::string& diagnostics_dir) {
    if (strategy_name.empty()) throw UsageError("--strategy is required");
    const auto kind = strategy_from_string(strategy_name);
    if (!kind)
        throw UsageError("unknown strategy '" + strategy_name +
                         "' (valid: rnd, egl, bald, coreset, badge, dami)");
    ExperimentConfig cfg = flags.to_config();
    cfg.base_seed = seed;
    cfg.diagnostics_dir = diagnostics_dir;
    if (!diagnostics_dir.empty()) std::filesystem::create_directories(diagnostics_dir);
    const LearningCurve curve = run_active_learning(cfg, *kind, seed);

    if (out.empty())
        out = "curve_" + strategy_name + "_" + std::to_string(seed) + flags.extension();
    const LearningCurve curves[] = {curve};
    export_results(curves, out, flags.result_format());

    std::cout << "strategy " << strategy_name << " seed " << seed << ": " << curve.points.size()
              << " curve points, results in " << out << "\n";
    for (const auto& w : curve.warnings) std::cout << "warning: " << w << "\n";
    std::printf("final test AUC: %.4f\n", curve.points.back().test_auc);
    return kExitOk;
}

int cmd_replicate(const ExperimentFlags& flags, const std::string& strategies_arg,
                  std::size_t runs, std::uint64_t base_seed, const std::string& out_dir,
                  std::size_t jobs) {
    if (out_dir.empty()) throw UsageError("--out-dir is required");
    const auto kinds = parse_strategies(strategies_arg);
    ExperimentConfig cfg = flags.to_config();
    cfg.n_runs = runs;
    cfg.base_seed = base_seed;
    std::filesystem::create_directories(out_dir);

    const auto results = replicate(cfg, kinds, jobs);
    for (const auto& sc : results) {
        const std::string stem = out_dir + "/" + to_string(sc.strategy);
        export_results(sc.runs, stem + "_raw" + flags.extension(), flags.result_format());
        const LearningCurve med[] = {sc.median};
        export_results(med, stem + "_median" + flags.extension(), flags.result_format());
        std::printf("%s: %zu runs, median final test AUC: %.4f\n", to_string(sc.strategy).c_str(),
                    sc.runs.size(), sc.median.points.back().test_auc);
    }
    return kExitOk;
}

int cmd_toy_demo(std::size_t n, std::size_t n_seeds, const std::string& out) {
    std::vector<std::uint64_t> seeds(n_seeds);
    for (std::size_t i = 0; i < n_seeds; ++i) seeds[i] = i + 1;
    const PurityReport rep = toy_region_demo(n, seeds);

    std::ostringstream table;
    table << "representation,purity_median\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "input_gradient,%.6f\n", rep.gradient_median);
    table << buf;
    std::snprintf(buf, sizeof buf, "last_layer,%.6f\n", rep.embedding_median);
    table << buf;
    std::snprintf(buf, sizeof buf, "badge,%.6f\n", rep.badge_median);
    table << buf;
    std::cout << table.str();
    if (!out.empty()) {
        const std::string tmp = out + ".tmp";
        {
            std::ofstream f(tmp, std::ios::trunc);
            if (!f) throw IoError("cannot write '" + tmp + "'");
            f << table.str();
        }
        if (std::rename(tmp.c_str(), out.c_str()) != 0) {
            std::remove(tmp.c_str());
            throw IoError("cannot rename '" + tmp + "' to '" + out + "'");
        }
    }

    if (rep.gradient_median > rep.embedding_median) {
        std::cout << "region check: input-gradient clusters recover the regions best\n";
        return kExitOk;
    }
    std::cout << "region check FAILED: input-gradient purity did not exceed last-layer purity\n";
    return kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pool-based active-learning benchmark harness"};
    app.require_subcommand(1);

    const char* config_help = "flat key = value config file; flags take precedence";

    auto* gen = app.add_subcommand("gen-toy", "generate a synthetic sigmoid-labeled dataset");
    std::size_t gen_n = 1000;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_config;
    gen->add_option("--n", gen_n, "number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV (default sigmoid_<n>_<seed>.csv)");
    gen->add_option("--config", gen_config, config_help);

    auto* run = app.add_subcommand("run", "one active-learning run with a single strategy");
    ExperimentFlags run_flags;
    run_flags.add_to(*run);
    std::string run_strategy, run_config;
    std::uint64_t run_seed = 0;
    std::string run_out, run_diag;
    run->add_option("--strategy", run_strategy, "rnd, egl, bald, coreset, badge or dami");
    run->add_option("--seed", run_seed, "run seed");
    run->add_option("--out", run_out, "results file (default curve_<strategy>_<seed>.<ext>)");
    run->add_option("--dump-selections", run_diag,
                    "directory for per-round selection diagnostics CSVs");
    run->add_option("--config", run_config, config_help);

    auto* rep = app.add_subcommand("replicate", "replicated runs with median aggregation");
    ExperimentFlags rep_flags;
    rep_flags.add_to(*rep);
    std::string rep_strategies = "all", rep_config;
    std::size_t rep_runs = 10;
    std::uint64_t rep_base_seed = 0;
    std::string rep_out_dir;
    std::size_t rep_jobs = default_jobs();
    rep->add_option("--strategies", rep_strategies, "comma-separated strategy list or 'all'");
    rep->add_option("--runs", rep_runs, "runs per strategy")->check(CLI::PositiveNumber);
    rep->add_option("--base-seed", rep_base_seed, "seed of run 0; run r uses base + r");
    rep->add_option("--out-dir", rep_out_dir, "output directory");
    rep->add_option("--jobs", rep_jobs, "parallel workers (env ALFORGE_JOBS)")
        ->check(CLI::PositiveNumber);
    rep->add_option("--config", rep_config, config_help);

    auto* demo = app.add_subcommand("toy-demo", "region-recovery purity comparison");
    std::size_t demo_n = 2000, demo_seeds = 5;
    std::string demo_out, demo_config;
    demo->add_option("--n", demo_n, "samples in the synthetic dataset")->check(CLI::PositiveNumber);
    demo->add_option("--seeds", demo_seeds, "number of replication seeds")
        ->check(CLI::PositiveNumber);
    demo->add_option("--out", demo_out, "also write the purity table as CSV");
    demo->add_option("--config", demo_config, config_help);

    try {
        app.parse(argc, argv);
        if (gen->parsed() && !gen_config.empty()) apply_config_file(*gen, gen_config);
        if (run->parsed() && !run_config.empty()) apply_config_file(*run, run_config);
        if (rep->parsed() && !rep_config.empty()) apply_config_file(*rep, rep_config);
        if (demo->parsed() && !demo_config.empty()) apply_config_file(*demo, demo_config);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_toy(gen_n, gen_seed, gen_out);
        if (run->parsed()) return cmd_run(run_flags, run_strategy, run_seed, run_out, run_diag);
        if (rep->parsed())
            return cmd_replicate(rep_flags, rep_strategies, rep_runs, rep_base_seed, rep_out_dir,
                                 rep_jobs);
        if (demo->parsed()) return cmd_toy_demo(demo_n, demo_seeds, demo_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const MetricError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
