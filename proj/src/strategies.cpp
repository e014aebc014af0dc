#include "alforge/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "alforge/clustering.hpp"
#include "alforge/rng.hpp"

namespace alforge {

namespace {

constexpr std::array<StrategyKind, 6> kAllStrategies = {
    StrategyKind::Rnd,    StrategyKind::Egl,   StrategyKind::Bald,
    StrategyKind::Coreset, StrategyKind::Badge, StrategyKind::Dami,
};

double binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
}

// Descending by score, ties to the lowest train-row index (candidates arrive
// sorted ascending, so a stable sort preserves that order inside ties).
std::vector<std::size_t> top_k_by_score(std::span<const std::size_t> candidates,
                                        std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> pos(candidates.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::stable_sort(pos.begin(), pos.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    for (std::size_t i = 0; i < k; ++i) chosen.push_back(candidates[pos[i]]);
    return chosen;
}

}  // namespace

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Rnd: return "rnd";
        case StrategyKind::Egl: return "egl";
        case StrategyKind::Bald: return "bald";
        case StrategyKind::Coreset: return "coreset";
        case StrategyKind::Badge: return "badge";
        case StrategyKind::Dami: return "dami";
    }
    return "?";
}

std::optional<StrategyKind> strategy_from_string(const std::string& name) {
    for (StrategyKind kind : kAllStrategies)
        if (to_string(kind) == name) return kind;
    return std::nullopt;
}

std::span<const StrategyKind> all_strategies() { return kAllStrategies; }

double bald_score(std::span<const double> probs) {
    if (probs.empty()) throw ConfigError("bald_score: empty probability vector");
    const bool all_equal =
        std::all_of(probs.begin(), probs.end(), [&](double p) { return p == probs.front(); });
    if (all_equal) return 0.0;  // agreement carries no information, exactly
    double mean = 0.0, mean_h = 0.0;
    for (double p : probs) {
        mean += p;
        mean_h += binary_entropy(p);
    }
    const double t = static_cast<double>(probs.size());
    // Jensen guarantees non-negativity; round-off may dip a hair below zero.
    return std::max(0.0, binary_entropy(mean / t) - mean_h / t);
}

SelectionResult select(StrategyKind kind, const MlpModel& model, const PoolState& pool,
                       const Matrix& train_features, std::size_t k, std::uint64_t seed,
                       const StrategySettings& settings) {
    if (pool.unlabeled().empty()) throw SelectionError("select: unlabeled pool is empty");
    if (k == 0) throw SelectionError("select: k must be >= 1");
    if (train_features.rows != pool.train_size())
        throw DimensionError("select: feature rows do not match pool size");

    SelectionResult res;
    res.strategy = kind;
    res.candidate_rows = pool.unlabeled();
    const auto& unlabeled = pool.unlabeled();
    const std::size_t k_eff = std::min(k, unlabeled.size());
    res.clamped = k_eff < k;

    switch (kind) {
        case StrategyKind::Rnd: {
            std::vector<std::size_t> perm = unlabeled;
            Rng rng(derive_seed(seed, "rnd_select"));
            rng.shuffle(perm);
            res.chosen.assign(perm.begin(), perm.begin() + k_eff);
            break;
        }
        case StrategyKind::Egl: {
            const Matrix xu = train_features.take_rows(unlabeled);
            res.scores = egl_scores(model, xu);
            res.chosen = top_k_by_score(unlabeled, res.scores, k_eff);
            break;
        }
        case StrategyKind::Bald: {
            if (settings.bald_passes == 0) throw ConfigError("select: bald_passes must be >= 1");
            const Matrix xu = train_features.take_rows(unlabeled);
            const Matrix probs =
                mc_dropout_probs(model, xu, settings.bald_passes, derive_seed(seed, "bald_mc"));
            res.scores.resize(unlabeled.size());
            for (std::size_t i = 0; i < unlabeled.size(); ++i)
                res.scores[i] = bald_score(probs.row(i));
            res.chosen = top_k_by_score(unlabeled, res.scores, k_eff);
            break;
        }
        case StrategyKind::Coreset: {
            const Matrix emb = last_layer_embedding(model, train_features);
            res.chosen = k_center_greedy(emb, pool.labeled(), unlabeled, k_eff);
            res.representations = emb.take_rows(unlabeled);
            break;
        }
        case StrategyKind::Badge: {
            const Matrix xu = train_features.take_rows(unlabeled);
            res.representations = badge_embeddings(model, xu);
            auto sel = k_means_pp_select(res.representations, k_eff, derive_seed(seed, "badge_kmpp"));
            res.uniform_fallback = sel.uniform_fallback;
            res.chosen.reserve(k_eff);
            for (std::size_t pos : sel.chosen) res.chosen.push_back(unlabeled[pos]);
            break;
        }
        case StrategyKind::Dami: {
            // Interpretations of every pooled sample; labeled rows act as the
            // fixed centers so new picks spread across uncovered regions.
            const InterpretationMatrix interp = input_gradients(model, train_features);
            res.chosen = k_center_greedy(interp.weights, pool.labeled(), unlabeled, k_eff);
            res.representations = interp.weights.take_rows(unlabeled);
            break;
        }
    }

    if (res.chosen.size() != k_eff) throw SelectionError("select: wrong selection size");
    for (std::size_t idx : res.chosen)
        if (pool.is_labeled(idx)) throw SelectionError("select: picked a labeled row");
    std::vector<std::size_t> dedup = res.chosen;
    std::sort(dedup.begin(), dedup.end());
    if (std::adjacent_find(dedup.begin(), dedup.end()) != dedup.end())
        throw SelectionError("select: duplicate pick");
    return res;
}

void export_selection_diagnostics(const SelectionResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "row,chosen_rank";
    if (!result.scores.empty()) out << ",score";
    for (std::size_t j = 0; j < result.representations.cols; ++j) out << ",rep_" << j;
    out << '\n';

    char buf[40];
    for (std::size_t i = 0; i < result.candidate_rows.size(); ++i) {
        const auto it =
            std::find(result.chosen.begin(), result.chosen.end(), result.candidate_rows[i]);
        const long rank = it == result.chosen.end() ? -1 : it - result.chosen.begin();
        out << result.candidate_rows[i] << ',' << rank;
        if (!result.scores.empty()) {
            std::snprintf(buf, sizeof buf, "%.17g", result.scores[i]);
            out << ',' << buf;
        }
        for (std::size_t j = 0; j < result.representations.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", result.representations(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace alforge
