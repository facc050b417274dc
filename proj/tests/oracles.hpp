#pragma once

// Independent reference computations shared by the unit and acceptance suites.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "jumpflow/partitions.hpp"

namespace oracle {

using big = boost::multiprecision::cpp_dec_float_50;
using jumpflow::SetPartition;

inline const big E = boost::multiprecision::exp(big(1));

inline big log2b(const big& p) { return log(p) / log(big(2)); }

// 50-digit logs of the printed constants.
inline big oracle_log_cp(const big& p) {
    if (p < 2) return p / 2 * log(10 * p);
    if (p == 2) return p * log(big(2));
    return p * log(p) + p / 2 * log(E / 2);
}

inline int depth(double p) { return static_cast<int>(std::ceil(std::log2(p))) - 1; }

inline big oracle_tilde(const big& p, int d) {
    big v = 2 / p * pow(40 * p, p / 2) * pow(p * p * E / 2, p * log2b(p) / 2);
    for (int k = 1; k <= d; ++k) v += pow(big(2), p) * pow(p, p * k) / pow(big(2), k) * pow(E / 2, k * p / 2);
    return v;
}

inline big oracle_log_tilde(const big& p, int d) {
    // leading term in logs, then add the sum in logs via log(a + b) = log a + log1p(b / a)
    const big lead = log(2 / p) + p / 2 * log(40 * p) + p * log2b(p) / 2 * log(p * p * E / 2);
    big rest = 0;
    for (int k = 1; k <= d; ++k) {
        const big lk = p * log(big(2)) + p * k * log(p) - k * log(big(2)) + k * p / 2 * log(E / 2);
        rest += exp(lk - lead);
    }
    return lead + log(1 + rest);
}

inline big oracle_log_majorant(const big& p) {
    const big c = ceil(log2b(p));
    return p * log(big(2)) + p * log2b(p) * log(p) + log(2 + pow(10 * exp(c), p / 2));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

using Canon = std::set<std::set<int>>;

inline Canon canon(const SetPartition& p) {
    Canon c;
    for (const auto& b : p.blocks) c.insert(std::set<int>(b.begin(), b.end()));
    return c;
}

// All maps {1..k} -> {0..k-1}, each read as a labelled partition.
inline std::set<Canon> brute_force_partitions(int k) {
    std::set<Canon> out;
    std::vector<int> label(static_cast<std::size_t>(k), 0);
    while (true) {
        std::map<int, std::set<int>> groups;
        for (int i = 0; i < k; ++i) groups[label[static_cast<std::size_t>(i)]].insert(i + 1);
        Canon c;
        for (auto& [_, g] : groups) c.insert(g);
        out.insert(c);
        int i = 0;
        while (i < k && ++label[static_cast<std::size_t>(i)] == k) label[static_cast<std::size_t>(i++)] = 0;
        if (i == k) break;
    }
    return out;
}

// Bell numbers from the Bell triangle.
inline std::vector<long> bell_triangle(int n) {
    std::vector<long> bell{1};
    std::vector<long> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<long> next{row.back()};
        for (long v : row) next.push_back(next.back() + v);
        bell.push_back(next.front());
        row = next;
    }
    return bell;
}

} // namespace oracle
