#include "alforge/pool.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alforge/rng.hpp"

namespace alforge {

PoolState PoolState::init(std::size_t train_size, double init_fraction, std::uint64_t seed) {
    if (train_size == 0) throw PoolError("pool: empty training set");
    if (init_fraction <= 0.0 || init_fraction > 1.0)
        throw ConfigError("pool: init_fraction must be in (0, 1]");

    // Ceiling keeps the seed set non-empty even for tiny pools.
    auto n_init = static_cast<std::size_t>(
        std::ceil(init_fraction * static_cast<double>(train_size) - 1e-9));
    n_init = std::max<std::size_t>(1, std::min(n_init, train_size));

    std::vector<std::size_t> perm(train_size);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    PoolState p;
    p.train_size_ = train_size;
    p.labeled_.assign(perm.begin(), perm.begin() + n_init);
    std::sort(p.labeled_.begin(), p.labeled_.end());
    p.initial_ = p.labeled_;
    p.unlabeled_.assign(perm.begin() + n_init, perm.end());
    std::sort(p.unlabeled_.begin(), p.unlabeled_.end());
    return p;
}

PoolState PoolState::from_labeled(std::size_t train_size, std::vector<std::size_t> labeled) {
    if (train_size == 0) throw PoolError("pool: empty training set");
    std::sort(labeled.begin(), labeled.end());
    if (std::adjacent_find(labeled.begin(), labeled.end()) != labeled.end())
        throw PoolError("pool: duplicate labeled index");
    if (!labeled.empty() && labeled.back() >= train_size)
        throw PoolError("pool: labeled index out of range");

    PoolState p;
    p.train_size_ = train_size;
    p.labeled_ = std::move(labeled);
    p.initial_ = p.labeled_;
    p.unlabeled_.reserve(train_size - p.labeled_.size());
    for (std::size_t i = 0, j = 0; i < train_size; ++i) {
        if (j < p.labeled_.size() && p.labeled_[j] == i) {
            ++j;
            continue;
        }
        p.unlabeled_.push_back(i);
    }
    return p;
}

bool PoolState::is_labeled(std::size_t idx) const {
    return std::binary_search(labeled_.begin(), labeled_.end(), idx);
}

void PoolState::commit_labels(std::span<const std::size_t> indices) {
    if (indices.empty()) throw PoolError("pool: empty commit");
    std::vector<std::size_t> batch(indices.begin(), indices.end());
    std::sort(batch.begin(), batch.end());
    if (std::adjacent_find(batch.begin(), batch.end()) != batch.end())
        throw PoolError("pool: duplicate index in commit");
    for (std::size_t idx : batch)
        if (!std::binary_search(unlabeled_.begin(), unlabeled_.end(), idx))
            throw PoolError("pool: index " + std::to_string(idx) + " is not unlabeled");

    std::vector<std::size_t> remaining;
    remaining.reserve(unlabeled_.size() - batch.size());
    std::set_difference(unlabeled_.begin(), unlabeled_.end(), batch.begin(), batch.end(),
                        std::back_inserter(remaining));
    unlabeled_ = std::move(remaining);

    std::vector<std::size_t> merged;
    merged.reserve(labeled_.size() + batch.size());
    std::merge(labeled_.begin(), labeled_.end(), batch.begin(), batch.end(),
               std::back_inserter(merged));
    labeled_ = std::move(merged);

    history_.emplace_back(indices.begin(), indices.end());
    check_invariants();
}

void PoolState::check_invariants() const {
    if (labeled_.size() + unlabeled_.size() != train_size_)
        throw PoolError("pool: |L| + |U| != train size");
    std::vector<std::size_t> inter;
    std::set_intersection(labeled_.begin(), labeled_.end(), unlabeled_.begin(), unlabeled_.end(),
                          std::back_inserter(inter));
    if (!inter.empty()) throw PoolError("pool: L and U overlap");

    std::vector<std::size_t> rebuilt = initial_;
    for (const auto& batch : history_) rebuilt.insert(rebuilt.end(), batch.begin(), batch.end());
    std::sort(rebuilt.begin(), rebuilt.end());
    if (rebuilt != labeled_) throw PoolError("pool: history does not reconstruct L");
}

}  // namespace alforge
