#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alforge/matrix.hpp"
#include "alforge/mlp.hpp"
#include "alforge/pool.hpp"

namespace alforge {

enum class StrategyKind { Rnd, Egl, Bald, Coreset, Badge, Dami };

std::string to_string(StrategyKind kind);
std::optional<StrategyKind> strategy_from_string(const std::string& name);
std::span<const StrategyKind> all_strategies();

struct StrategySettings {
    std::size_t bald_passes = 20;
};

struct SelectionResult {
    StrategyKind strategy = StrategyKind::Rnd;
    std::vector<std::size_t> chosen;  // distinct unlabeled train rows, selection order

    // Diagnostics: per-unlabeled-row scores (EGL, BALD) or representations
    // (CORESET, BADGE, DAMI), aligned with `candidate_rows`.
    std::vector<std::size_t> candidate_rows;
    std::vector<double> scores;
    Matrix representations;

    bool clamped = false;           // requested k exceeded |U|
    bool uniform_fallback = false;  // BADGE weights degenerated to uniform
};

/// Mutual information between the label and the dropout mask ensemble:
/// H(mean_t p_t) - mean_t H(p_t), natural log. Zero when every pass agrees,
/// at most ln 2.
double bald_score(std::span<const double> probs);

/// Runs one query strategy over the unlabeled pool. Pure function of its
/// arguments; k is clamped to |U| (flagged). All tie-breaks resolve to the
/// lowest row index.
SelectionResult select(StrategyKind kind, const MlpModel& model, const PoolState& pool,
                       const Matrix& train_features, std::size_t k, std::uint64_t seed,
                       const StrategySettings& settings = {});

/// One CSV per round: candidate row, pick rank (-1 when not chosen), then the
/// score or representation columns that the strategy produced.
void export_selection_diagnostics(const SelectionResult& result, const std::string& path);

}  // namespace alforge
