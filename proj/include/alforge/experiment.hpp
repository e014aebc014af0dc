#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "alforge/dataset.hpp"
#include "alforge/metrics.hpp"
#include "alforge/mlp.hpp"
#include "alforge/pool.hpp"
#include "alforge/strategies.hpp"

namespace alforge {

struct ExperimentConfig {
    Dataset dataset;  // full, unsplit, labeled
    double init_fraction = 0.02;
    double round_fraction = 0.02;
    double stop_fraction = 0.50;
    std::size_t n_runs = 10;
    std::uint64_t base_seed = 0;
    SplitRatios split_ratios{};
    MlpConfig mlp{};  // input_dim 0 means "take the dataset width"
    TrainConfig train{};
    StrategySettings strategy{};
    std::string diagnostics_dir;  // when set, per-round selection CSVs land here

    void validate() const;
    MlpConfig resolved_mlp() const;
};

struct CurvePoint {
    double labeled_fraction;
    double test_auc;
};

struct LearningCurve {
    StrategyKind strategy = StrategyKind::Rnd;
    std::int64_t seed = 0;  // run seed; -1 marks a median aggregate
    std::vector<CurvePoint> points;
    std::string config_hash;
    std::vector<std::string> warnings;
};

/// Deterministic FNV-1a digest of every config field, recorded in curve
/// metadata so exported results identify the run that produced them.
std::string config_fingerprint(const ExperimentConfig& cfg);

struct ScheduleInfo {
    std::size_t train_size = 0;
    std::size_t init_count = 0;
    std::size_t round_budget = 0;  // k, samples labeled per round
    std::size_t stop_count = 0;    // labeled-set size at which querying stops
    std::size_t max_rounds = 0;    // ceil((stop - init) / round)
};

ScheduleInfo derive_schedule(std::size_t train_size, const ExperimentConfig& cfg);

/// Snapshot handed to an observer after every training, round 0 included.
struct RoundSnapshot {
    std::size_t round;
    const PoolState& pool;
    const MlpModel& model;
};
using RoundObserver = std::function<void(const RoundSnapshot&)>;

/// One full pool-based run: split, standardize, seed the pool, train an
/// initial model, then alternate querying and training a fresh model on the
/// grown labeled set. Test AUC is recorded after the initial fit and after
/// every round; every random stream derives from run_seed.
LearningCurve run_active_learning(const ExperimentConfig& cfg, StrategyKind strategy,
                                  std::uint64_t run_seed, const RoundObserver& observer = {});

/// Pointwise lower median at every labeled fraction; curves must share a
/// fraction grid. The aggregate carries seed -1.
LearningCurve pointwise_median(std::span<const LearningCurve> curves);

struct StrategyCurves {
    StrategyKind strategy;
    std::vector<LearningCurve> runs;
    LearningCurve median;
};

/// n_runs runs per strategy with run seeds base_seed + run index. Runs are
/// independent, so they may fan out over `jobs` workers; seeds are
/// pre-assigned and the output never depends on the worker count.
std::vector<StrategyCurves> replicate(const ExperimentConfig& cfg,
                                      std::span<const StrategyKind> strategies,
                                      std::size_t jobs = 1);

enum class ResultFormat { Csv, JsonLines };

/// CSV schema: `strategy,seed,labeled_fraction,test_auc`, doubles at 17
/// significant digits. The JSON-lines variant adds a leading config-metadata
/// record and then one record per curve point. Writes are atomic
/// (temp file + rename).
void export_results(std::span<const LearningCurve> curves, const std::string& path,
                    ResultFormat format);
std::vector<LearningCurve> import_results(const std::string& path, ResultFormat format);

/// Fraction of samples whose cluster's majority ground-truth class matches
/// their own: sum over clusters of the majority count, divided by n.
double clustering_purity(std::span<const std::size_t> assignments, std::span<const int> truth);

struct ToyDemoConfig {
    MlpConfig mlp{2, {16, 8}, 0.5};
    // Full-batch training with a decayed rate, keeping the final epoch: the
    // demo needs a calibrated logit surface, not an early ranking snapshot.
    TrainConfig train{.learning_rate = 1e-2,
                      .max_epochs = 800,
                      .batch_size = 1 << 20,
                      .patience = 800,
                      .seed = 0,
                      .keep_final_epoch = true,
                      .lr_decay = 0.995};
    std::size_t kmeans_k = 4;
    std::size_t kmeans_restarts = 10;  // keep the lowest-cost clustering
};

struct PurityReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> gradient_purity;   // per seed, input-gradient representation
    std::vector<double> embedding_purity;  // last-layer representation
    std::vector<double> badge_purity;      // loss-gradient embedding
    double gradient_median = 0.0;
    double embedding_median = 0.0;
    double badge_median = 0.0;
};

/// Trains an MLP on a fully labeled synthetic sigmoid dataset, clusters three
/// sample representations with k-means (k = 4) and scores each against the
/// ground-truth quadrants. Medians are taken over the given seeds.
PurityReport toy_region_demo(std::size_t n, std::span<const std::uint64_t> seeds,
                             const ToyDemoConfig& demo = {});

}  // namespace alforge
