#pragma once

// Set partitions of {1..k} and the Faa di Bruno sums built on them.
//
// The k-th x-derivative of f(u(x)) is
//   sum over partitions pi of {1..k} of f^(|pi|)(u) * prod_{B in pi} u^(|B|),
// which is also the shape of every coefficient in the variational system
// satisfied by the flow derivatives X^(k).

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/error.hpp"

namespace jumpflow {

inline constexpr int default_max_order = 6;

/// A partition of {1..k}. Blocks are sorted by smallest element and each
/// block is sorted ascending.
struct SetPartition {
    int k = 0;
    std::vector<std::vector<int>> blocks;

    std::size_t size() const noexcept { return blocks.size(); }

    /// Block sizes in block order.
    std::vector<int> block_sizes() const {
        std::vector<int> sizes;
        sizes.reserve(blocks.size());
        for (const auto& b : blocks) sizes.push_back(static_cast<int>(b.size()));
        return sizes;
    }

    int max_block_size() const noexcept {
        int m = 0;
        for (const auto& b : blocks) m = std::max(m, static_cast<int>(b.size()));
        return m;
    }

    friend bool operator==(const SetPartition&, const SetPartition&) = default;
};

namespace detail {

inline SetPartition partition_from_rgs(const std::vector<int>& rgs) {
    const int k = static_cast<int>(rgs.size());
    int n_blocks = 0;
    for (int a : rgs) n_blocks = std::max(n_blocks, a + 1);
    SetPartition p;
    p.k = k;
    p.blocks.assign(static_cast<std::size_t>(n_blocks), {});
    // Block labels in a restricted-growth string appear in order of their
    // smallest element, so this already yields canonical block order.
    for (int i = 0; i < k; ++i) p.blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])].push_back(i + 1);
    return p;
}

// Advances a restricted-growth string to its lexicographic predecessor.
// Returns false once the all-zero string has been passed.
inline bool previous_rgs(std::vector<int>& a) {
    const int k = static_cast<int>(a.size());
    for (int i = k - 1; i >= 1; --i) {
        if (a[static_cast<std::size_t>(i)] > 0) {
            --a[static_cast<std::size_t>(i)];
            int prefix_max = 0;
            for (int j = 0; j <= i; ++j) prefix_max = std::max(prefix_max, a[static_cast<std::size_t>(j)]);
            // Largest completion of the suffix keeps the string restricted.
            for (int j = i + 1; j < k; ++j) a[static_cast<std::size_t>(j)] = ++prefix_max;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// All partitions of {1..k}, generated from restricted-growth strings in
/// descending lexicographic order: all-singletons first, the single block last.
inline std::vector<SetPartition> generate_partitions(int k) {
    if (k < 1) throw Error(ErrorCode::invalid_order, "partition order must be >= 1, got " + std::to_string(k));
    std::vector<int> rgs(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) rgs[static_cast<std::size_t>(i)] = i;
    std::vector<SetPartition> out;
    do {
        out.push_back(detail::partition_from_rgs(rgs));
    } while (detail::previous_rgs(rgs));
    return out;
}

/// Partition with its block-size multiset cached for the inner simulation loop.
struct CachedPartition {
    SetPartition partition;
    std::vector<int> block_sizes;
    int num_blocks = 0;
    int max_block = 0;
};

/// Immutable cache of every partition of {1..k} for k <= max_order.
class PartitionTable {
public:
    explicit PartitionTable(int max_order = default_max_order) : max_order_(max_order) {
        if (max_order < 1) throw Error(ErrorCode::invalid_order, "max_order must be >= 1");
        table_.resize(static_cast<std::size_t>(max_order) + 1);
        for (int k = 1; k <= max_order; ++k) {
            for (auto& p : generate_partitions(k)) {
                CachedPartition c;
                c.block_sizes = p.block_sizes();
                c.num_blocks = static_cast<int>(p.size());
                c.max_block = p.max_block_size();
                c.partition = std::move(p);
                table_[static_cast<std::size_t>(k)].push_back(std::move(c));
            }
        }
    }

    int max_order() const noexcept { return max_order_; }

    const std::vector<CachedPartition>& at(int k) const {
        check_order(k);
        return table_[static_cast<std::size_t>(k)];
    }

    std::vector<SetPartition> enumerate(int k) const {
        std::vector<SetPartition> out;
        for (const auto& c : at(k)) out.push_back(c.partition);
        return out;
    }

    void check_order(int k) const {
        if (k < 1 || k > max_order_) {
            throw Error(ErrorCode::invalid_order, "order " + std::to_string(k) + " outside [1, " +
                                                      std::to_string(max_order_) + "]");
        }
    }

    /// Shared table with the default max order.
    static const PartitionTable& shared() {
        static const PartitionTable table(default_max_order);
        return table;
    }

private:
    int max_order_;
    std::vector<std::vector<CachedPartition>> table_;
};

inline std::vector<SetPartition> enumerate_partitions(int k, int max_order = default_max_order) {
    if (k < 1 || k > max_order) {
        throw Error(ErrorCode::invalid_order,
                    "order " + std::to_string(k) + " outside [1, " + std::to_string(max_order) + "]");
    }
    if (max_order == default_max_order) return PartitionTable::shared().enumerate(k);
    return generate_partitions(k);
}

/// One Faa di Bruno term: outer(|pi|) * prod_B block_values[|B|].
/// `block_values` is indexed by derivative order; index 0 is unused.
template <class Outer>
double faa_di_bruno_term(const SetPartition& partition, Outer&& outer_derivative,
                         std::span<const double> block_values) {
    if (partition.max_block_size() >= static_cast<int>(block_values.size())) {
        throw Error(ErrorCode::incomplete_state,
                    "no value for block size " + std::to_string(partition.max_block_size()));
    }
    double prod = 1.0;
    for (const auto& b : partition.blocks) prod *= block_values[b.size()];
    return outer_derivative(static_cast<int>(partition.size())) * prod;
}

template <class Outer>
double faa_di_bruno_term(const SetPartition& partition, Outer&& outer_derivative,
                         const std::map<int, double>& block_values) {
    double prod = 1.0;
    for (const auto& b : partition.blocks) {
        auto it = block_values.find(static_cast<int>(b.size()));
        if (it == block_values.end()) {
            throw Error(ErrorCode::incomplete_state, "no value for block size " + std::to_string(b.size()));
        }
        prod *= it->second;
    }
    return outer_derivative(static_cast<int>(partition.size())) * prod;
}

/// Sum over Pi[k] in table order. `outer[j]` is the j-th outer derivative,
/// `inner[j]` the j-th inner derivative; both need at least k+1 entries.
inline double faa_di_bruno_sum(const PartitionTable& table, int k, std::span<const double> outer,
                               std::span<const double> inner) {
    double sum = 0.0;
    for (const auto& c : table.at(k)) {
        double prod = outer[static_cast<std::size_t>(c.num_blocks)];
        for (int s : c.block_sizes) prod *= inner[static_cast<std::size_t>(s)];
        sum += prod;
    }
    return sum;
}

} // namespace jumpflow
