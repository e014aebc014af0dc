#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "alforge/experiment.hpp"
#include "alforge/rng.hpp"

using namespace alforge;

namespace {

// Small sigmoid-task config: train split of exactly 100 rows so the default
// 2%/2%/50% schedule lands on whole numbers.
ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.dataset = make_sigmoid_dataset(125, 17);
    cfg.split_ratios = {0.8, 0.1, 0.1};
    cfg.mlp = {0, {6, 3}, 0.2};
    cfg.train = {1e-2, 4, 32, 4, 0};
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

struct TempPath {
    std::string path;
    explicit TempPath(std::string p) : path(std::move(p)) {}
    ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("derive_schedule matches the 2 percent protocol") {
    ExperimentConfig cfg = small_config();
    const ScheduleInfo s = derive_schedule(100, cfg);
    CHECK(s.init_count == 2);
    CHECK(s.round_budget == 2);
    CHECK(s.stop_count == 50);
    CHECK(s.max_rounds == 24);

    cfg.stop_fraction = cfg.init_fraction;
    CHECK(derive_schedule(100, cfg).max_rounds == 0);
}

TEST_CASE("run_active_learning walks the full schedule") {
    const ExperimentConfig cfg = small_config();
    const LearningCurve curve = run_active_learning(cfg, StrategyKind::Rnd, 5);

    // 24 selection rounds plus the initial point.
    REQUIRE(curve.points.size() == 25);
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto expected = static_cast<double>(2 + 2 * i) / 100.0;
        CHECK(curve.points[i].labeled_fraction == expected);
        CHECK(curve.points[i].test_auc >= 0.0);
        CHECK(curve.points[i].test_auc <= 1.0);
    }
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].labeled_fraction > curve.points[i - 1].labeled_fraction);
}

TEST_CASE("a degenerate schedule yields a single point") {
    ExperimentConfig cfg = small_config();
    cfg.stop_fraction = cfg.init_fraction;
    const LearningCurve curve = run_active_learning(cfg, StrategyKind::Dami, 3);
    CHECK(curve.points.size() == 1);
}

TEST_CASE("label budget accounting holds at every round") {
    const ExperimentConfig cfg = small_config();
    std::vector<std::size_t> labeled_sizes;
    run_active_learning(cfg, StrategyKind::Egl, 7, [&](const RoundSnapshot& snap) {
        labeled_sizes.push_back(snap.pool.labeled().size());
        snap.pool.check_invariants();
    });
    REQUIRE(labeled_sizes.size() == 25);
    for (std::size_t m = 0; m < labeled_sizes.size(); ++m) CHECK(labeled_sizes[m] == 2 + 2 * m);
}

TEST_CASE("a round reconstructs exactly from a checkpointed pool") {
    const ExperimentConfig cfg = small_config();
    const std::uint64_t run_seed = 11;

    std::map<std::size_t, std::vector<std::size_t>> labeled_at;
    std::map<std::size_t, MlpModel> model_at;
    run_active_learning(cfg, StrategyKind::Dami, run_seed, [&](const RoundSnapshot& snap) {
        labeled_at[snap.round] = snap.pool.labeled();
        model_at[snap.round] = snap.model;
    });

    // Rebuild round 3 from nothing but the labeled set and the seed schedule.
    Split sp = split(cfg.dataset, cfg.split_ratios, derive_seed(run_seed, "split"));
    auto [train_ds, stats] = zscore_fit_transform(sp.train);
    const Dataset val_ds = zscore_apply(stats, sp.val);

    const std::size_t round = 3;
    const MlpModel init =
        build_model(cfg.resolved_mlp(), derive_seed(run_seed, "model_init", round));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(run_seed, "train", round);
    const Dataset labeled = train_ds.subset(labeled_at.at(round));
    const TrainResult redone = train(init, labeled, val_ds, tc);

    CHECK(redone.model.weights == model_at.at(round).weights);
    CHECK(redone.model.biases == model_at.at(round).biases);
}

TEST_CASE("pointwise median takes the lower middle value") {
    auto curve_with = [](double auc_value) {
        LearningCurve c;
        c.strategy = StrategyKind::Rnd;
        c.seed = 1;
        c.points = {{0.02, auc_value}, {0.04, auc_value + 0.01}};
        return c;
    };
    const std::vector<LearningCurve> three{curve_with(0.7), curve_with(0.8), curve_with(0.6)};
    const LearningCurve med = pointwise_median(three);
    CHECK(med.seed == -1);
    CHECK(med.points[0].test_auc == 0.7);
    CHECK(med.points[1].test_auc == doctest::Approx(0.71));

    const std::vector<LearningCurve> even{curve_with(0.6), curve_with(0.7)};
    CHECK(pointwise_median(even).points[0].test_auc == 0.6);

    // Run order cannot matter.
    const std::vector<LearningCurve> shuffled{three[2], three[0], three[1]};
    CHECK(pointwise_median(shuffled).points[0].test_auc == med.points[0].test_auc);

    const std::vector<LearningCurve> single{curve_with(0.9)};
    CHECK(pointwise_median(single).points[0].test_auc == 0.9);
}

TEST_CASE("replicate aggregates runs and ignores the worker count") {
    ExperimentConfig cfg = small_config();
    cfg.n_runs = 3;
    cfg.base_seed = 100;
    const StrategyKind kinds[] = {StrategyKind::Rnd, StrategyKind::Dami};

    const auto serial = replicate(cfg, kinds, 1);
    REQUIRE(serial.size() == 2);
    for (const auto& sc : serial) {
        CHECK(sc.runs.size() == 3);
        for (std::size_t r = 0; r < 3; ++r)
            CHECK(sc.runs[r].seed == static_cast<std::int64_t>(100 + r));
    }

    const auto parallel = replicate(cfg, kinds, 4);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(parallel[s].median.points.size() == serial[s].median.points.size());
        for (std::size_t r = 0; r < 3; ++r) {
            REQUIRE(parallel[s].runs[r].points.size() == serial[s].runs[r].points.size());
            for (std::size_t i = 0; i < serial[s].runs[r].points.size(); ++i) {
                CHECK(parallel[s].runs[r].points[i].test_auc ==
                      serial[s].runs[r].points[i].test_auc);
                CHECK(parallel[s].runs[r].points[i].labeled_fraction ==
                      serial[s].runs[r].points[i].labeled_fraction);
            }
        }
    }

    // One run: median equals the raw curve.
    cfg.n_runs = 1;
    const auto one = replicate(cfg, std::span(kinds).first(1), 1);
    for (std::size_t i = 0; i < one[0].runs[0].points.size(); ++i)
        CHECK(one[0].median.points[i].test_auc == one[0].runs[0].points[i].test_auc);
}

TEST_CASE("results export round-trips in both formats") {
    ExperimentConfig cfg = small_config();
    cfg.train.max_epochs = 2;
    const LearningCurve a = run_active_learning(cfg, StrategyKind::Rnd, 1);
    const LearningCurve b = run_active_learning(cfg, StrategyKind::Badge, 2);
    const std::vector<LearningCurve> curves{a, b};

    TempPath csv("alforge_test_results.csv");
    export_results(curves, csv.path, ResultFormat::Csv);
    CHECK_FALSE(file_exists(csv.path + ".tmp"));
    {
        std::ifstream in(csv.path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "strategy,seed,labeled_fraction,test_auc");
    }
    const auto csv_back = import_results(csv.path, ResultFormat::Csv);
    REQUIRE(csv_back.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(csv_back[c].strategy == curves[c].strategy);
        CHECK(csv_back[c].seed == curves[c].seed);
        REQUIRE(csv_back[c].points.size() == curves[c].points.size());
        for (std::size_t i = 0; i < curves[c].points.size(); ++i) {
            CHECK(csv_back[c].points[i].labeled_fraction == curves[c].points[i].labeled_fraction);
            CHECK(csv_back[c].points[i].test_auc == curves[c].points[i].test_auc);
        }
    }

    TempPath jsonl("alforge_test_results.jsonl");
    export_results(curves, jsonl.path, ResultFormat::JsonLines);
    const auto jsonl_back = import_results(jsonl.path, ResultFormat::JsonLines);
    REQUIRE(jsonl_back.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(jsonl_back[c].config_hash == curves[c].config_hash);
        CHECK(jsonl_back[c].warnings == curves[c].warnings);
        REQUIRE(jsonl_back[c].points.size() == curves[c].points.size());
        for (std::size_t i = 0; i < curves[c].points.size(); ++i)
            CHECK(jsonl_back[c].points[i].test_auc == curves[c].points[i].test_auc);
    }
}

TEST_CASE("exporting no curves leaves a header-only file") {
    TempPath path("alforge_test_empty.csv");
    export_results({}, path.path, ResultFormat::Csv);
    CHECK(slurp(path.path) == "strategy,seed,labeled_fraction,test_auc\n");
}

TEST_CASE("identical configs export byte-identical results") {
    ExperimentConfig cfg = small_config();
    cfg.n_runs = 2;
    const StrategyKind kinds[] = {StrategyKind::Coreset};

    TempPath p1("alforge_test_det1.csv"), p2("alforge_test_det2.csv");
    for (const auto& path : {p1.path, p2.path}) {
        const auto res = replicate(cfg, kinds, 2);
        std::vector<LearningCurve> all = res[0].runs;
        all.push_back(res[0].median);
        export_results(all, path, ResultFormat::Csv);
    }
    CHECK(slurp(p1.path) == slurp(p2.path));
    CHECK(slurp(p1.path).size() > 100);
}

TEST_CASE("config fingerprints are stable and field-sensitive") {
    const ExperimentConfig cfg = small_config();
    CHECK(config_fingerprint(cfg) == config_fingerprint(cfg));
    ExperimentConfig other = cfg;
    other.train.learning_rate = 2e-2;
    CHECK(config_fingerprint(cfg) != config_fingerprint(other));
}

TEST_CASE("clustering purity definitional cases") {
    const std::vector<std::size_t> same{0, 1, 2, 3};
    const std::vector<int> truth{0, 1, 2, 3};
    CHECK(clustering_purity(same, truth) == 1.0);

    const std::vector<std::size_t> lumped{0, 0, 0, 0};
    CHECK(clustering_purity(lumped, truth) == 0.25);
}

TEST_CASE("random selection learns the sigmoid task") {
    // Reference run for the pinned floor: median final AUC over five seeds.
    ExperimentConfig cfg;
    cfg.dataset = make_sigmoid_dataset(2000, 77);
    cfg.mlp = {0, {16, 8}, 0.2};
    cfg.train = {1e-3, 200, 64, 20, 0};

    std::vector<double> finals;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        finals.push_back(run_active_learning(cfg, StrategyKind::Rnd, seed).points.back().test_auc);
    std::sort(finals.begin(), finals.end());
    CHECK(finals[2] > 0.80);
}
