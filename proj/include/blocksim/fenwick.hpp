#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "blocksim/rng.hpp"

namespace blocksim {

// Fenwick tree over non-negative integer weights with O(log n) point update
// and O(log n) sampling of an index with probability weight / total.
// Backs the preferential-attachment picks, which would otherwise be O(n)
// per draw on ledgers with hundreds of thousands of addresses.
class WeightedIndex {
public:
    WeightedIndex() = default;

    std::size_t size() const { return weights_.size(); }
    std::int64_t total() const { return total_; }
    std::int64_t weight(std::size_t i) const { return weights_[i]; }

    void push_back(std::int64_t w) {
        assert(w >= 0);
        const std::size_t i = weights_.size();
        weights_.push_back(0);
        tree_.push_back(0);
        // new node starts as the sum of the sibling range it covers
        std::size_t node = i + 1;
        std::int64_t below = 0;
        const std::size_t lsb = node & (~node + 1);
        for (std::size_t j = node - 1; j > node - lsb; j -= j & (~j + 1)) {
            below += tree_[j - 1];
        }
        tree_[i] = below;
        if (w != 0) add(i, w);
    }

    void add(std::size_t i, std::int64_t delta) {
        if (delta == 0) return;
        weights_[i] += delta;
        assert(weights_[i] >= 0);
        total_ += delta;
        for (std::size_t j = i + 1; j <= tree_.size(); j += j & (~j + 1)) {
            tree_[j - 1] += delta;
        }
    }

    void set(std::size_t i, std::int64_t w) { add(i, w - weights_[i]); }

    // index with probability weight(i) / total(); total() must be positive
    std::size_t sample(Rng& rng) const {
        if (total_ <= 0) throw std::logic_error("WeightedIndex::sample on empty weight mass");
        return find_prefix(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total_))));
    }

    // smallest i such that sum of weights[0..i] > x, for 0 <= x < total()
    std::size_t find_prefix(std::int64_t x) const {
        std::size_t pos = 0;
        std::size_t mask = highest_pow2(tree_.size());
        while (mask > 0) {
            const std::size_t next = pos + mask;
            if (next <= tree_.size() && tree_[next - 1] <= x) {
                x -= tree_[next - 1];
                pos = next;
            }
            mask >>= 1;
        }
        return pos;  // weights_[pos] > 0 guaranteed when x < total
    }

private:
    static std::size_t highest_pow2(std::size_t n) {
        std::size_t p = 1;
        while (p * 2 <= n) p *= 2;
        return n == 0 ? 0 : p;
    }

    std::vector<std::int64_t> weights_;
    std::vector<std::int64_t> tree_;
    std::int64_t total_ = 0;
};

}  // namespace blocksim
