#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "blocksim/ledger.hpp"

namespace blocksim {

// Disjoint-set forest, union by size with path halving. Grows on demand.
class UnionFind {
public:
    std::size_t find(std::size_t x) {
        grow(x);
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // returns the surviving root
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

    std::size_t component_size(std::size_t x) { return size_[find(x)]; }
    bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }
    std::size_t capacity() const { return parent_.size(); }

private:
    void grow(std::size_t x) {
        while (parent_.size() <= x) {
            parent_.push_back(parent_.size());
            size_.push_back(1);
        }
    }

    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

// Canonical partition of address ids: classes sorted internally and ordered
// by their smallest member, so partitions compare with operator==.
using Partition = std::vector<std::vector<AddressId>>;

// The multi-input heuristic: every transaction's input addresses belong to
// one entity; transitive closure over the block stream. Incremental.
class MultiInputClusterer {
public:
    void observe(std::span<const AddressId> input_addrs) {
        if (input_addrs.empty()) return;
        touched_.insert(touched_.end(), input_addrs.begin(), input_addrs.end());
        for (std::size_t i = 1; i < input_addrs.size(); ++i)
            uf_.unite(static_cast<std::size_t>(input_addrs[0]),
                      static_cast<std::size_t>(input_addrs[i]));
        uf_.find(static_cast<std::size_t>(input_addrs[0]));  // ensure singletons registered
    }

    void observe(const TransactionRecord& tx) {
        std::vector<AddressId> addrs;
        addrs.reserve(tx.inputs.size());
        for (const auto& in : tx.inputs) addrs.push_back(in.addr);
        observe(addrs);
    }

    Partition partition() const {
        auto uf = uf_;  // find() compresses paths
        std::unordered_map<std::size_t, std::vector<AddressId>> classes;
        auto sorted = touched_;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (AddressId a : sorted) classes[uf.find(static_cast<std::size_t>(a))].push_back(a);
        Partition out;
        out.reserve(classes.size());
        for (auto& [root, members] : classes) out.push_back(std::move(members));
        std::sort(out.begin(), out.end(),
                  [](const auto& x, const auto& y) { return x.front() < y.front(); });
        return out;
    }

private:
    UnionFind uf_;
    std::vector<AddressId> touched_;
};

template <typename TxRange>
Partition cluster_multi_input(const TxRange& txs) {
    MultiInputClusterer c;
    for (const auto& tx : txs) c.observe(tx);
    return c.partition();
}

inline Partition cluster_multi_input_blocks(std::span<const Block> blocks) {
    MultiInputClusterer c;
    for (const auto& b : blocks)
        for (const auto& tx : b.txs) c.observe(tx);
    return c.partition();
}

}  // namespace blocksim
