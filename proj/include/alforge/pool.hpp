#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alforge/errors.hpp"

namespace alforge {

/// Labeled/unlabeled bookkeeping over the training rows. Both index lists are
/// kept sorted ascending; `history` records each committed batch in order, so
/// the initial seed plus the union of all batches reproduces the labeled set.
class PoolState {
public:
    PoolState() = default;

    /// ceil(init_fraction * train_size) initial labels, drawn uniformly.
    static PoolState init(std::size_t train_size, double init_fraction, std::uint64_t seed);

    /// Restores a pool from a checkpointed labeled set; history starts empty.
    static PoolState from_labeled(std::size_t train_size, std::vector<std::size_t> labeled);

    /// Moves `indices` from the unlabeled to the labeled set and appends them
    /// to the history. Throws PoolError if any index is not currently unlabeled.
    void commit_labels(std::span<const std::size_t> indices);

    const std::vector<std::size_t>& labeled() const { return labeled_; }
    const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }
    const std::vector<std::vector<std::size_t>>& history() const { return history_; }
    const std::vector<std::size_t>& initial_labeled() const { return initial_; }
    std::size_t train_size() const { return train_size_; }

    bool is_labeled(std::size_t idx) const;

    /// Asserts disjointness and conservation; throws PoolError on violation.
    void check_invariants() const;

private:
    std::size_t train_size_ = 0;
    std::vector<std::size_t> labeled_;
    std::vector<std::size_t> unlabeled_;
    std::vector<std::size_t> initial_;
    std::vector<std::vector<std::size_t>> history_;
};

}  // namespace alforge
