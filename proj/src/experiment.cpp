#include "alforge/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "alforge/clustering.hpp"
#include "alforge/pool.hpp"
#include "alforge/rng.hpp"

namespace alforge {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw IoError("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(init_fraction > 0.0 && init_fraction <= stop_fraction && stop_fraction <= 1.0))
        throw ConfigError("experiment: need 0 < init_fraction <= stop_fraction <= 1");
    if (round_fraction <= 0.0) throw ConfigError("experiment: round_fraction must be > 0");
    if (n_runs == 0) throw ConfigError("experiment: n_runs must be >= 1");
    resolved_mlp().validate();
    train.validate();
}

MlpConfig ExperimentConfig::resolved_mlp() const {
    MlpConfig m = mlp;
    if (m.input_dim == 0) m.input_dim = dataset.width();
    return m;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
    std::ostringstream ss;
    ss << cfg.dataset.name << '|' << cfg.dataset.size() << 'x' << cfg.dataset.width() << '|'
       << fmt17(cfg.init_fraction) << '|' << fmt17(cfg.round_fraction) << '|'
       << fmt17(cfg.stop_fraction) << '|' << cfg.n_runs << '|' << cfg.base_seed << '|'
       << fmt17(cfg.split_ratios.train) << ',' << fmt17(cfg.split_ratios.val) << ','
       << fmt17(cfg.split_ratios.test) << '|';
    const MlpConfig m = cfg.resolved_mlp();
    ss << m.input_dim << ':';
    for (std::size_t d : m.hidden_dims) ss << d << ',';
    ss << '|' << fmt17(m.drop_prob) << '|' << fmt17(cfg.train.learning_rate) << '|'
       << cfg.train.max_epochs << '|' << cfg.train.batch_size << '|' << cfg.train.patience << '|'
       << cfg.strategy.bald_passes;
    const std::string s = ss.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScheduleInfo derive_schedule(std::size_t train_size, const ExperimentConfig& cfg) {
    ScheduleInfo s;
    s.train_size = train_size;
    const double nd = static_cast<double>(train_size);
    auto ceil_count = [&](double frac) {
        return static_cast<std::size_t>(std::ceil(frac * nd - 1e-9));
    };
    s.init_count = std::max<std::size_t>(1, std::min(ceil_count(cfg.init_fraction), train_size));
    s.round_budget = std::max<std::size_t>(1, ceil_count(cfg.round_fraction));
    s.stop_count = std::min(ceil_count(cfg.stop_fraction), train_size);
    s.max_rounds = static_cast<std::size_t>(
        std::ceil((cfg.stop_fraction - cfg.init_fraction) / cfg.round_fraction - 1e-9));
    return s;
}

LearningCurve run_active_learning(const ExperimentConfig& cfg, StrategyKind strategy,
                                  std::uint64_t run_seed, const RoundObserver& observer) {
    cfg.validate();
    cfg.dataset.validate();
    if (!cfg.dataset.has_labels()) throw DataError("experiment: dataset has no labels");

    Split sp = split(cfg.dataset, cfg.split_ratios, derive_seed(run_seed, "split"));
    auto [train_ds, stats] = zscore_fit_transform(sp.train);
    const Dataset val_ds = zscore_apply(stats, sp.val);
    const Dataset test_ds = zscore_apply(stats, sp.test);

    const ScheduleInfo sched = derive_schedule(train_ds.size(), cfg);
    PoolState pool = PoolState::init(train_ds.size(), cfg.init_fraction,
                                     derive_seed(run_seed, "init_pool"));

    LearningCurve curve;
    curve.strategy = strategy;
    curve.seed = static_cast<std::int64_t>(run_seed);
    curve.config_hash = config_fingerprint(cfg);

    const MlpConfig mlp_cfg = cfg.resolved_mlp();

    auto train_round = [&](std::size_t round) {
        const MlpModel init = build_model(mlp_cfg, derive_seed(run_seed, "model_init", round));
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(run_seed, "train", round);
        const Dataset labeled = train_ds.subset(pool.labeled());
        TrainResult tr = train(init, labeled, val_ds, tc);
        if (tr.single_class_labels)
            curve.warnings.push_back("single_class_labels_round_" + std::to_string(round));
        if (tr.val_metric_fallback)
            curve.warnings.push_back("val_auc_undefined_round_" + std::to_string(round));
        return std::move(tr.model);
    };
    auto record_point = [&](const MlpModel& model) {
        const auto probs = predict_proba(model, test_ds.features);
        curve.points.push_back({static_cast<double>(pool.labeled().size()) /
                                    static_cast<double>(sched.train_size),
                                auc(probs, test_ds.labels)});
    };

    MlpModel model = train_round(0);
    record_point(model);
    if (observer) observer({0, pool, model});

    for (std::size_t round = 1; round <= sched.max_rounds; ++round) {
        if (pool.labeled().size() >= sched.stop_count || pool.unlabeled().empty()) break;
        std::size_t k = std::min(sched.round_budget, sched.stop_count - pool.labeled().size());
        k = std::min(k, pool.unlabeled().size());
        const SelectionResult sel = select(strategy, model, pool, train_ds.features, k,
                                           derive_seed(run_seed, "select", round), cfg.strategy);
        if (!cfg.diagnostics_dir.empty())
            export_selection_diagnostics(
                sel, cfg.diagnostics_dir + "/" + to_string(strategy) + "_seed" +
                         std::to_string(run_seed) + "_round" + std::to_string(round) + ".csv");
        pool.commit_labels(sel.chosen);
        model = train_round(round);
        record_point(model);
        if (observer) observer({round, pool, model});
    }
    return curve;
}

LearningCurve pointwise_median(std::span<const LearningCurve> curves) {
    if (curves.empty()) throw ConfigError("median: no curves");
    LearningCurve med;
    med.strategy = curves.front().strategy;
    med.seed = -1;
    med.config_hash = curves.front().config_hash;
    const std::size_t npts = curves.front().points.size();
    for (const auto& c : curves) {
        if (c.points.size() != npts) throw ConfigError("median: curves differ in length");
        for (std::size_t i = 0; i < npts; ++i)
            if (c.points[i].labeled_fraction != curves.front().points[i].labeled_fraction)
                throw ConfigError("median: fraction grids differ");
    }
    std::vector<double> vals(curves.size());
    for (std::size_t i = 0; i < npts; ++i) {
        for (std::size_t c = 0; c < curves.size(); ++c) vals[c] = curves[c].points[i].test_auc;
        std::sort(vals.begin(), vals.end());
        // Lower median keeps the value an actually observed AUC for even counts.
        med.points.push_back(
            {curves.front().points[i].labeled_fraction, vals[(vals.size() - 1) / 2]});
    }
    return med;
}

std::vector<StrategyCurves> replicate(const ExperimentConfig& cfg,
                                      std::span<const StrategyKind> strategies, std::size_t jobs) {
    cfg.validate();
    if (strategies.empty()) throw ConfigError("replicate: no strategies");

    struct Task {
        std::size_t strategy_idx;
        std::size_t run_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < strategies.size(); ++s)
        for (std::size_t r = 0; r < cfg.n_runs; ++r) tasks.push_back({s, r});

    std::vector<StrategyCurves> out(strategies.size());
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        out[s].strategy = strategies[s];
        out[s].runs.resize(cfg.n_runs);
    }

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            try {
                const auto [s, r] = tasks[t];
                out[s].runs[r] =
                    run_active_learning(cfg, strategies[s], cfg.base_seed + r);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    for (auto& sc : out) sc.median = pointwise_median(sc.runs);
    return out;
}

void export_results(std::span<const LearningCurve> curves, const std::string& path,
                    ResultFormat format) {
    std::ostringstream out;
    if (format == ResultFormat::Csv) {
        out << "strategy,seed,labeled_fraction,test_auc\n";
        for (const auto& c : curves)
            for (const auto& p : c.points)
                out << to_string(c.strategy) << ',' << c.seed << ',' << fmt17(p.labeled_fraction)
                    << ',' << fmt17(p.test_auc) << '\n';
    } else {
        nlohmann::json meta;
        meta["record"] = "config";
        meta["curves"] = nlohmann::json::array();
        for (const auto& c : curves) {
            meta["curves"].push_back({{"strategy", to_string(c.strategy)},
                                      {"seed", c.seed},
                                      {"config_hash", c.config_hash},
                                      {"warnings", c.warnings}});
        }
        out << meta.dump() << '\n';
        for (const auto& c : curves)
            for (const auto& p : c.points) {
                nlohmann::json rec{{"record", "point"},
                                   {"strategy", to_string(c.strategy)},
                                   {"seed", c.seed},
                                   {"labeled_fraction", p.labeled_fraction},
                                   {"test_auc", p.test_auc}};
                out << rec.dump() << '\n';
            }
    }
    atomic_write(path, out.str());
}

std::vector<LearningCurve> import_results(const std::string& path, ResultFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<LearningCurve> curves;
    auto curve_for = [&](StrategyKind kind, std::int64_t seed) -> LearningCurve& {
        if (!curves.empty() && curves.back().strategy == kind && curves.back().seed == seed)
            return curves.back();
        curves.push_back({kind, seed, {}, "", {}});
        return curves.back();
    };

    std::string line;
    if (format == ResultFormat::Csv) {
        if (!std::getline(in, line)) throw DataError("'" + path + "': empty results file");
        if (line != "strategy,seed,labeled_fraction,test_auc")
            throw DataError("'" + path + "': unexpected results header");
        std::size_t row = 1;
        while (std::getline(in, line)) {
            ++row;
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string strategy, seed, frac, aucv;
            if (!std::getline(ss, strategy, ',') || !std::getline(ss, seed, ',') ||
                !std::getline(ss, frac, ',') || !std::getline(ss, aucv))
                throw DataError("'" + path + "' row " + std::to_string(row) + ": malformed");
            const auto kind = strategy_from_string(strategy);
            if (!kind) throw DataError("'" + path + "': unknown strategy '" + strategy + "'");
            curve_for(*kind, std::stoll(seed))
                .points.push_back({std::strtod(frac.c_str(), nullptr),
                                   std::strtod(aucv.c_str(), nullptr)});
        }
    } else {
        nlohmann::json meta;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json rec = nlohmann::json::parse(line);
            if (rec.at("record") == "config") {
                meta = rec;
                continue;
            }
            const auto kind = strategy_from_string(rec.at("strategy").get<std::string>());
            if (!kind) throw DataError("'" + path + "': unknown strategy in record");
            curve_for(*kind, rec.at("seed").get<std::int64_t>())
                .points.push_back({rec.at("labeled_fraction").get<double>(),
                                   rec.at("test_auc").get<double>()});
        }
        if (!meta.is_null() && meta.contains("curves")) {
            for (const auto& entry : meta["curves"]) {
                const auto kind = strategy_from_string(entry.at("strategy").get<std::string>());
                const auto seed = entry.at("seed").get<std::int64_t>();
                for (auto& c : curves) {
                    if (kind && c.strategy == *kind && c.seed == seed) {
                        c.config_hash = entry.value("config_hash", "");
                        c.warnings = entry.value("warnings", std::vector<std::string>{});
                    }
                }
            }
        }
    }
    return curves;
}

double clustering_purity(std::span<const std::size_t> assignments, std::span<const int> truth) {
    if (assignments.size() != truth.size() || assignments.empty())
        throw ConfigError("purity: assignment/truth size mismatch");
    std::map<std::size_t, std::map<int, std::size_t>> tally;
    for (std::size_t i = 0; i < assignments.size(); ++i) tally[assignments[i]][truth[i]]++;
    std::size_t majority = 0;
    for (const auto& [cluster, counts] : tally) {
        std::size_t best = 0;
        for (const auto& [cls, cnt] : counts) best = std::max(best, cnt);
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(assignments.size());
}

namespace {

double lower_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

// Single-seed k-means lands in poor local optima on wedge-shaped gradient
// clouds; keep the lowest-cost clustering over a few seeded restarts.
KMeansResult best_of_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                            std::size_t restarts) {
    KMeansResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        KMeansResult res = k_means(points, k, derive_seed(seed, "restart", r));
        double cost = 0.0;
        for (std::size_t i = 0; i < points.rows; ++i)
            cost += squared_distance(points.row(i), res.centroids.row(res.assignments[i]));
        if (cost < best_cost) {
            best_cost = cost;
            best = std::move(res);
        }
    }
    return best;
}

}  // namespace

PurityReport toy_region_demo(std::size_t n, std::span<const std::uint64_t> seeds,
                             const ToyDemoConfig& demo) {
    if (seeds.empty()) throw ConfigError("toy_region_demo: no seeds");
    PurityReport rep;
    rep.seeds.assign(seeds.begin(), seeds.end());

    for (std::uint64_t s : seeds) {
        // The demo dataset is fully labeled, so all of it trains the model;
        // the training split doubles as the (logged-only) validation set.
        const Dataset ds = make_sigmoid_dataset(n, derive_seed(s, "toy_data"));
        auto [train_ds, stats] = zscore_fit_transform(ds);

        MlpConfig mlp_cfg = demo.mlp;
        mlp_cfg.input_dim = 2;
        TrainConfig tc = demo.train;
        tc.seed = derive_seed(s, "toy_train");
        const MlpModel model =
            train(build_model(mlp_cfg, derive_seed(s, "toy_init")), train_ds, train_ds, tc).model;

        const Matrix& all_x = train_ds.features;
        const Matrix grad = input_gradients(model, all_x).weights;
        const Matrix emb = last_layer_embedding(model, all_x);
        const Matrix badge = badge_embeddings(model, all_x);

        auto purity_of = [&](const Matrix& points, std::string_view tag) {
            const auto km =
                best_of_kmeans(points, demo.kmeans_k, derive_seed(s, tag), demo.kmeans_restarts);
            return clustering_purity(km.assignments, ds.quadrants);
        };
        rep.gradient_purity.push_back(purity_of(grad, "toy_kmeans_grad"));
        rep.embedding_purity.push_back(purity_of(emb, "toy_kmeans_emb"));
        rep.badge_purity.push_back(purity_of(badge, "toy_kmeans_badge"));
    }
    rep.gradient_median = lower_median(rep.gradient_purity);
    rep.embedding_median = lower_median(rep.embedding_purity);
    rep.badge_median = lower_median(rep.badge_purity);
    return rep;
}

}  // namespace alforge
