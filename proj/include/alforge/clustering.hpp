#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alforge/matrix.hpp"

namespace alforge {

/// Greedy farthest-first K-Center over Euclidean distance. Repeatedly picks
/// the candidate row with the largest distance to its nearest already-chosen
/// center (the initial centers count), k times or until candidates run out.
/// Ties break to the lowest row index; with no initial centers the first pick
/// is the lowest-index candidate. Returns picks in selection order.
std::vector<std::size_t> k_center_greedy(const Matrix& points,
                                         std::span<const std::size_t> initial_center_rows,
                                         std::span<const std::size_t> candidate_rows, std::size_t k);

struct KMeansResult {
    std::vector<std::size_t> assignments;
    Matrix centroids;
    std::size_t iterations = 0;
};

/// Lloyd iterations from a k-means++ seeding. Converges when assignments stop
/// changing or after max_iters; an emptied cluster is re-seeded to the point
/// farthest from its current centroid. Deterministic per seed.
KMeansResult k_means(const Matrix& points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iters = 100);

struct KmppSelection {
    std::vector<std::size_t> chosen;
    bool uniform_fallback = false;  // weights degenerated to zero at some pick
};

/// k-means++ seeding used as a batch selection rule: the first index is drawn
/// with probability proportional to the squared row norm, later ones
/// proportional to the squared distance to the nearest chosen row. Falls back
/// to uniform sampling (flagged) when all weights vanish.
KmppSelection k_means_pp_select(const Matrix& points, std::size_t k, std::uint64_t seed);

}  // namespace alforge
