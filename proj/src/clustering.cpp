#include "alforge/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "alforge/errors.hpp"
#include "alforge/rng.hpp"

namespace alforge {

std::vector<std::size_t> k_center_greedy(const Matrix& points,
                                         std::span<const std::size_t> initial_center_rows,
                                         std::span<const std::size_t> candidate_rows, std::size_t k) {
    if (candidate_rows.empty()) throw SelectionError("k_center: no candidates");
    if (k == 0) throw SelectionError("k_center: k must be >= 1");
    for (std::size_t c : candidate_rows)
        for (std::size_t ic : initial_center_rows)
            if (c == ic) throw SelectionError("k_center: candidate overlaps initial centers");

    const std::size_t m = candidate_rows.size();
    std::vector<double> min_dist2(m, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(m, false);
    for (std::size_t ic : initial_center_rows) {
        auto crow = points.row(ic);
        for (std::size_t i = 0; i < m; ++i)
            min_dist2[i] = std::min(min_dist2[i], squared_distance(points.row(candidate_rows[i]), crow));
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(std::min(k, m));
    while (chosen.size() < k && chosen.size() < m) {
        std::size_t best = m;
        double best_d = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (taken[i]) continue;
            // Strict > and ascending scan give the lowest-index tie-break;
            // infinities (no centers yet) resolve the same way.
            if (best == m || min_dist2[i] > best_d) {
                best = i;
                best_d = min_dist2[i];
            }
        }
        taken[best] = true;
        chosen.push_back(candidate_rows[best]);
        auto crow = points.row(candidate_rows[best]);
        for (std::size_t i = 0; i < m; ++i) {
            if (taken[i]) continue;
            min_dist2[i] = std::min(min_dist2[i], squared_distance(points.row(candidate_rows[i]), crow));
        }
    }
    return chosen;
}

namespace {

// Cumulative-sum sampling; total > 0 is the caller's responsibility.
std::size_t weighted_pick(std::span<const double> weights, double total, Rng& rng) {
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

}  // namespace

KMeansResult k_means(const Matrix& points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iters) {
    const std::size_t n = points.rows;
    if (k == 0 || k > n) throw SelectionError("k_means: need 1 <= k <= n");
    Rng rng(seed);

    // k-means++ seeding, first center uniform.
    std::vector<std::size_t> centers;
    centers.push_back(rng.uniform_index(n));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i)
        d2[i] = squared_distance(points.row(i), points.row(centers[0]));
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t next;
        if (total > 0.0) {
            next = weighted_pick(d2, total, rng);
        } else {
            next = rng.uniform_index(n);  // duplicates only; any point works
        }
        centers.push_back(next);
        auto crow = points.row(next);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(points.row(i), crow));
    }

    KMeansResult res;
    res.centroids = Matrix(k, points.cols);
    for (std::size_t c = 0; c < k; ++c) {
        auto src = points.row(centers[c]);
        std::copy(src.begin(), src.end(), res.centroids.row(c).begin());
    }
    res.assignments.assign(n, 0);

    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(points.row(i), res.centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (res.assignments[i] != best) {
                res.assignments[i] = best;
                changed = true;
            }
        }
        res.iterations = iter + 1;
        if (!changed) break;

        std::fill(res.centroids.data.begin(), res.centroids.data.end(), 0.0);
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            auto crow = res.centroids.row(res.assignments[i]);
            auto prow = points.row(i);
            for (std::size_t j = 0; j < points.cols; ++j) crow[j] += prow[j];
            ++counts[res.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto crow = res.centroids.row(c);
            for (std::size_t j = 0; j < points.cols; ++j) crow[j] /= static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Re-seed an emptied cluster to the point farthest from its centroid.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d =
                    squared_distance(points.row(i), res.centroids.row(res.assignments[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            auto src = points.row(far);
            std::copy(src.begin(), src.end(), res.centroids.row(c).begin());
        }
    }
    return res;
}

KmppSelection k_means_pp_select(const Matrix& points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.rows;
    if (k == 0 || k > n) throw SelectionError("k_means_pp_select: need 1 <= k <= n");
    Rng rng(seed);

    KmppSelection sel;
    std::vector<bool> taken(n, false);
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i) weight[i] = squared_norm(points.row(i));

    while (sel.chosen.size() < k) {
        const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
        std::size_t next;
        if (total > 0.0) {
            next = weighted_pick(weight, total, rng);
        } else {
            sel.uniform_fallback = true;
            std::size_t r = rng.uniform_index(n - sel.chosen.size());
            next = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                if (r == 0) {
                    next = i;
                    break;
                }
                --r;
            }
        }
        const bool first = sel.chosen.empty();
        taken[next] = true;
        weight[next] = 0.0;
        sel.chosen.push_back(next);
        auto crow = points.row(next);
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double d2 = squared_distance(points.row(i), crow);
            // The norm weighting applies to the first draw only; from then on
            // the weight is the squared distance to the nearest chosen row.
            weight[i] = first ? d2 : std::min(weight[i], d2);
        }
    }
    return sel;
}

}  // namespace alforge
