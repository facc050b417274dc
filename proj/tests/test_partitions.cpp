#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "jumpflow/partitions.hpp"
#include "jumpflow/variational.hpp"
#include "oracles.hpp"

using namespace jumpflow;
using namespace oracle;

TEST(Partitions, SmallCasesInCanonicalOrder) {
    auto p1 = enumerate_partitions(1);
    ASSERT_EQ(p1.size(), 1u);
    EXPECT_EQ(p1[0].blocks, (std::vector<std::vector<int>>{{1}}));
    auto p2 = enumerate_partitions(2);
    ASSERT_EQ(p2.size(), 2u);
    EXPECT_EQ(p2[0].blocks, (std::vector<std::vector<int>>{{1}, {2}}));
    EXPECT_EQ(p2[1].blocks, (std::vector<std::vector<int>>{{1, 2}}));
    EXPECT_EQ(enumerate_partitions(4).size(), 15u);
    EXPECT_EQ(enumerate_partitions(5).size(), 52u);
}

TEST(Partitions, CountsMatchBellTriangleUpToEight) {
    const auto bell = bell_triangle(8);
    PartitionTable table(8);
    for (int k = 1; k <= 8; ++k) {
        EXPECT_EQ(static_cast<long>(table.at(k).size()), bell[static_cast<std::size_t>(k)]) << "k=" << k;
    }
}

TEST(Partitions, MatchBruteForceSetForSet) {
    for (int k = 1; k <= 5; ++k) {
        std::set<Canon> ours;
        for (const auto& p : enumerate_partitions(k)) {
            EXPECT_TRUE(ours.insert(canon(p)).second) << "duplicate at k=" << k;
        }
        EXPECT_EQ(ours, brute_force_partitions(k)) << "k=" << k;
    }
}

TEST(Partitions, StructuralInvariants) {
    for (int k = 1; k <= 6; ++k) {
        int singles = 0, full = 0;
        for (const auto& p : enumerate_partitions(k)) {
            std::vector<int> seen;
            int prev_min = 0;
            for (const auto& b : p.blocks) {
                ASSERT_FALSE(b.empty());
                EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
                EXPECT_GT(b.front(), prev_min);
                prev_min = b.front();
                seen.insert(seen.end(), b.begin(), b.end());
            }
            std::sort(seen.begin(), seen.end());
            std::vector<int> ground(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i) ground[static_cast<std::size_t>(i)] = i + 1;
            EXPECT_EQ(seen, ground);
            singles += static_cast<int>(p.size()) == k;
            full += p.size() == 1;
        }
        EXPECT_EQ(singles, 1);
        EXPECT_EQ(full, 1);
    }
}

TEST(Partitions, OrderErrors) {
    EXPECT_THROW(enumerate_partitions(0), Error);
    EXPECT_THROW(enumerate_partitions(7), Error);
    EXPECT_NO_THROW(enumerate_partitions(7, 7));
    try {
        enumerate_partitions(0);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_order);
    }
}

TEST(FaaDiBruno, ChainRuleTerms) {
    const double fp = 0.7, fpp = -1.3, up = 2.0, upp = 0.5;
    auto outer = [&](int m) { return m == 1 ? fp : fpp; };
    const std::vector<double> blocks{0.0, up, upp};
    const auto p2 = enumerate_partitions(2);
    EXPECT_DOUBLE_EQ(faa_di_bruno_term(p2[1], outer, std::span<const double>(blocks)), fp * upp);
    EXPECT_DOUBLE_EQ(faa_di_bruno_term(p2[0], outer, std::span<const double>(blocks)), fpp * up * up);
    const std::map<int, double> only_first{{1, up}};
    EXPECT_THROW(faa_di_bruno_term(p2[1], outer, only_first), Error);
    const std::vector<double> short_blocks{0.0, up};
    EXPECT_THROW(faa_di_bruno_term(p2[1], outer, std::span<const double>(short_blocks)), Error);
}

TEST(FaaDiBruno, ThirdDerivativeOfSinCube) {
    const auto& table = PartitionTable::shared();
    for (double x : {-1.1, -0.3, 0.4, 0.9, 1.3}) {
        const double u = x * x * x;
        const std::vector<double> inner{u, 3 * x * x, 6 * x, 6.0};
        const std::vector<double> outer{std::sin(u), std::cos(u), -std::sin(u), -std::cos(u)};
        // d^3/dx^3 sin(x^3) by direct differentiation.
        const double exact = 6 * std::cos(u) - 54 * u * std::sin(u) - 27 * u * u * std::cos(u);
        EXPECT_NEAR(faa_di_bruno_sum(table, 3, outer, inner), exact, 1e-12 * std::max(1.0, std::abs(exact)));
    }
}

TEST(FaaDiBruno, AgreesWithHighPrecisionFiniteDifferences) {
    using big = boost::multiprecision::cpp_dec_float_50;
    // F = exp(sin x): outer exp (all derivatives exp), inner sin.
    auto F = [](const big& x) { return exp(sin(x)); };
    const auto& table = PartitionTable::shared();
    for (double x0 : {-0.8, 0.2, 1.1}) {
        std::vector<double> inner(5), outer(5);
        for (int j = 0; j < 5; ++j) {
            const double s = std::sin(x0), c = std::cos(x0);
            const double d[4] = {s, c, -s, -c};
            inner[static_cast<std::size_t>(j)] = d[j % 4];
            outer[static_cast<std::size_t>(j)] = std::exp(s);
        }
        for (int k = 1; k <= 4; ++k) {
            const big h("1e-8");
            big acc = 0;
            for (int j = 0; j <= k; ++j) {
                big binom = 1;
                for (int i = 0; i < j; ++i) binom = binom * (k - i) / (i + 1);
                const big shift = big(k) / 2 - j;
                acc += ((j % 2) ? -binom : binom) * F(big(x0) + shift * h);
            }
            const double fd = static_cast<double>(acc / pow(h, k));
            const double fdb = faa_di_bruno_sum(table, k, outer, inner);
            EXPECT_NEAR(fdb, fd, 1e-6 * std::abs(fd)) << "k=" << k << " x=" << x0;
        }
    }
}

TEST(FaaDiBruno, MultilinearInBlockValues) {
    const auto& table = PartitionTable::shared();
    const std::vector<double> outer{0.3, -0.4, 1.7, 0.9, -2.1};
    const std::vector<double> inner{0.5, 1.2, -0.7, 0.8, 0.25};
    const double s = 1.9;
    for (int j = 1; j <= 4; ++j) {
        auto scaled = inner;
        scaled[static_cast<std::size_t>(j)] *= s;
        double expected = 0.0;
        for (const auto& c : table.at(4)) {
            double term = outer[static_cast<std::size_t>(c.num_blocks)];
            int count = 0;
            for (int b : c.block_sizes) {
                term *= inner[static_cast<std::size_t>(b)];
                count += b == j;
            }
            expected += term * std::pow(s, count);
        }
        EXPECT_NEAR(faa_di_bruno_sum(table, 4, outer, scaled), expected, 1e-12);
    }
}

TEST(Variational, SquareDriftSecondOrder) {
    auto drift = [](double, double x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = x * x;
        if (out.size() > 1) out[1] = 2 * x;
        if (out.size() > 2) out[2] = 2.0;
    };
    auto zero = [](double, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    const auto coeffs = make_custom(drift, zero, {}, 3, 1.0, {});
    const FlowState state{{1.5, 2.0, 0.3}};
    const auto terms = assemble_variational_coefficients(2, coeffs, state, 0.0, 0.4);
    EXPECT_DOUBLE_EQ(terms.drift, 8.9);
    EXPECT_EQ(terms.diffusion, 0.0);
    ASSERT_TRUE(terms.jump.has_value());
    EXPECT_EQ(*terms.jump, 0.0);
}

TEST(Variational, FirstOrderIsChainRule) {
    const auto c = make_merton(0.07, 0.3, 3);
    const FlowState state{{1.4, 0.8}};
    const double y = 0.2;
    const auto t = assemble_variational_coefficients(1, c, state, 0.0, y);
    EXPECT_DOUBLE_EQ(t.drift, 0.07 * 0.8);
    EXPECT_DOUBLE_EQ(t.diffusion, 0.3 * 0.8);
    EXPECT_DOUBLE_EQ(*t.jump, std::expm1(y) * 0.8);
}

TEST(Variational, AffineDegeneracy) {
    const auto c = make_affine(0.3, 0.1, -0.2, 0.4, 0.5, 0.2, 4);
    const FlowState state{{0.9, 1.3, 0.0, 0.0, 0.0}};
    for (int k = 2; k <= 4; ++k) {
        const auto t = assemble_variational_coefficients(k, c, state, 0.5, 0.7);
        EXPECT_EQ(t.drift, 0.0);
        EXPECT_EQ(t.diffusion, 0.0);
        EXPECT_EQ(*t.jump, 0.0);
    }
}

TEST(Variational, Errors) {
    const auto c = make_gbm(0.1, 0.2, 2);
    EXPECT_THROW(assemble_variational_coefficients(3, c, FlowState::initial(1.0, 3), 0.0), Error);
    EXPECT_THROW(assemble_variational_coefficients(2, c, FlowState::initial(1.0, 1), 0.0), Error);
    try {
        assemble_variational_coefficients(3, c, FlowState::initial(1.0, 3), 0.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::insufficient_smoothness);
    }
    try {
        assemble_variational_coefficients(2, c, FlowState::initial(1.0, 1), 0.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::incomplete_state);
    }
}
