#pragma once

#include <span>

namespace alforge {

/// ROC AUC: probability that a random positive outscores a random negative,
/// ties counted as one half. Computed from average ranks in O(n log n) and
/// exactly equal to the pairwise definition (rank sums stay half-integral).
/// Throws MetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace alforge
