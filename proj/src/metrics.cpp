#include "alforge/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "alforge/errors.hpp"

namespace alforge {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw DimensionError("auc: scores and labels differ in length");

    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auc: needs both classes present");

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average rank per tie group; ranks are 1-based.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }

    const double np = static_cast<double>(n_pos);
    const double wins = pos_rank_sum - np * (np + 1.0) / 2.0;
    return wins / (np * static_cast<double>(n_neg));
}

}  // namespace alforge
