#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "jumpflow/constants.hpp"
#include "jumpflow/model.hpp"
#include "oracles.hpp"

using namespace jumpflow;
using namespace oracle;

TEST(Constants, BdgConstantPieces) {
    EXPECT_DOUBLE_EQ(bdg_constant(2.0), 4.0);
    EXPECT_NEAR(bdg_constant(1.5), std::pow(15.0, 0.75), 1e-12);
    EXPECT_NEAR(bdg_constant(3.0), 27.0 * std::pow(std::exp(1.0) / 2, 1.5), 1e-12);
    EXPECT_THROW(bdg_constant(0.5), Error);
    try {
        log_bdg_constant(0.9);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_exponent);
    }
}

TEST(Constants, MatchFiftyDigitOracle) {
    for (double p : {2.0, 3.0, 4.0, 8.0, 16.0}) {
        const auto k = kunita_constant(p);
        const big bp(p);
        const double lcp = static_cast<double>(oracle_log_cp(bp));
        const double lt = static_cast<double>(oracle_log_tilde(bp, depth(p)));
        EXPECT_LE(rel(k.c_p.log, lcp), 1e-12) << "p=" << p;
        EXPECT_LE(rel(k.tilde_c_p.log, lt), 1e-12) << "p=" << p;
        EXPECT_LE(rel(k.c_p.value, static_cast<double>(exp(oracle_log_cp(bp)))), 1e-12) << "p=" << p;
        EXPECT_LE(rel(k.tilde_c_p.value, static_cast<double>(oracle_tilde(bp, depth(p)))), 1e-12) << "p=" << p;
    }
}

TEST(Constants, KnownValues) {
    const auto k2 = kunita_constant(2.0);
    EXPECT_EQ(k2.recursion_depth, 0);
    EXPECT_NEAR(k2.tilde_c_p.value, 160 * std::exp(1.0), 1e-10);
    EXPECT_NEAR(k2.tilde_c_p.value, 434.93, 0.01);
    EXPECT_NEAR(k2.tilde_upper.value, 16 * (2 + 10 * std::exp(1.0)), 1e-10);
    const auto k4 = kunita_constant(4.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(k4.tilde_c_p.value, 0.5 * 25600 * std::pow(8 * e, 4) + 2048 * std::pow(e / 2, 2), 1e-3);
}

TEST(Constants, MajorantHoldsAndOverflowIsReported) {
    for (double p : {2.0, 2.5, 3.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        const auto k = kunita_constant(p);
        EXPECT_LE(k.tilde_c_p.log, k.tilde_upper.log) << "p=" << p;
        EXPECT_NEAR(k.tilde_upper.log, static_cast<double>(oracle_log_majorant(big(p))), 1e-12 * k.tilde_upper.log);
        EXPECT_TRUE(std::isfinite(k.tilde_c_p.log));
    }
    const auto k64 = kunita_constant(64.0);
    EXPECT_TRUE(k64.tilde_c_p.overflow());
    EXPECT_TRUE(k64.overflow());
    EXPECT_THROW(kunita_constant(1.5), Error);
}

TEST(Constants, JumpBdgBound) {
    // p = 2 has no sum terms.
    const std::vector<double> none;
    EXPECT_NEAR(poisson_bdg_bound(2.0, 3.0, none).value, 3 * 160 * std::exp(1.0), 1e-9);
    const auto z = poisson_bdg_bound(4.0, 0.0, std::vector<double>{0.0});
    EXPECT_EQ(z.value, 0.0);
    EXPECT_THROW(poisson_bdg_bound(4.0, -1.0, std::vector<double>{0.0}), Error);
}

TEST(Constants, TimeFactoredBound) {
    Corollary3Stats s;
    s.jump_p = 3.0;
    s.jump_l2_power = 3.0;
    const double expected = 4 * 160 * std::exp(1.0) * 6.0;
    EXPECT_NEAR(corollary3_bound(2.0, 1.0, s), expected, 1e-8);
    EXPECT_NEAR(corollary3_bound(2.0, 1.0, s), 10438.2, 0.1);
    Corollary3Stats zero;
    EXPECT_EQ(corollary3_bound(2.0, 1.0, zero), 0.0);
    Corollary3Stats bad;
    bad.drift_p = -1.0;
    EXPECT_THROW(corollary3_bound(2.0, 1.0, bad), Error);
    try {
        corollary3_bound(2.0, 1.0, bad);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_stats);
    }
}

TEST(Gronwall, GbmHandEvaluation) {
    const auto n = CoefficientNorms::constant(0.1, 0.2, 0.0, 0.0);
    const auto g = gronwall_bound(n, 2.0, 1.0, 1.0);
    EXPECT_NEAR(g.f_T.value, 4.0, 1e-14);
    EXPECT_NEAR(g.g_integral.value, 4 * (2 * 0.01 + 2 * 4 * 0.04), 1e-13);
    EXPECT_NEAR(g.c_pT.value, 4 * std::exp(1.36), 1e-11);
    EXPECT_NEAR(g.c_pT.value, 15.58, 0.01);
}

TEST(Gronwall, ZeroAndDriftOnly) {
    EXPECT_NEAR(gronwall_bound(CoefficientNorms::constant(0, 0, 0, 0), 2.0, 1.0, 1.0).c_pT.value, 4.0, 1e-14);
    EXPECT_NEAR(gronwall_bound(CoefficientNorms::constant(0.1, 0, 0, 0), 2.0, 1.0, 1.0).c_pT.value, 4 * std::exp(0.08),
                1e-13);
}

TEST(Gronwall, OracleForGeneralNorms) {
    // Independent evaluation of F and G with every norm present.
    const double p = 3.0, T = 0.7, x = -1.3;
    const double a = 0.4, b = 0.3, c2 = 0.05, cp = 0.02, a0 = 0.1, b0 = 0.2, c02 = 0.03, c0p = 0.01;
    const auto g = gronwall_bound(CoefficientNorms::constant(a, b, c2, cp, a0, b0, c02, c0p), p, T, x);
    const big P(p), TT(T);
    const big Cp = exp(oracle_log_cp(P));
    const big Ct = oracle_tilde(P, depth(p));
    const big F = pow(big(4), P - 1) *
                  (pow(abs(big(x)), P) + pow(2 * TT, P - 1) * big(a0) + pow(big(2), P - 1) * Cp * pow(TT, P / 2 - 1) * big(b0) +
                   pow(big(2), P - 1) * Ct * (pow(big(2), P / 2) * pow(TT, P / 2 - 1) * big(c02) + big(c0p)));
    const big G = pow(big(4), P - 1) *
                  (pow(2 * TT, P - 1) * pow(big(a), P) + pow(big(2), P - 1) * Cp * pow(TT, P / 2 - 1) * pow(big(b), P) +
                   pow(big(2), 3 * P / 2 - 1) * Ct * pow(TT, P / 2 - 1) * pow(big(c2), P / 2) +
                   pow(big(2), P - 1) * Ct * big(cp));
    EXPECT_LE(rel(g.f_T.value, static_cast<double>(F)), 1e-12);
    EXPECT_LE(rel(g.g_integral.value, static_cast<double>(G * TT)), 1e-12);
    EXPECT_LE(rel(g.c_pT.log, static_cast<double>(log(F) + G * TT)), 1e-12);
}

TEST(Gronwall, TimeDependentNormsUseQuadrature) {
    CoefficientNorms n = CoefficientNorms::constant(0, 0, 0, 0);
    n.drift_lip = [](double t) { return 0.1 * (1 + t); };
    n.time_constant = false;
    const auto g = gronwall_bound(n, 2.0, 1.0, 1.0);
    // int_0^1 4 * 2 * 0.01 (1+t)^2 dt = 0.08 * 7/3
    EXPECT_NEAR(g.g_integral.value, 0.08 * 7.0 / 3.0, 1e-12);
}

TEST(Gronwall, MonotoneInHorizonAndStart) {
    const auto n = CoefficientNorms::constant(0.2, 0.3, 0.1, 0.1, 0.05, 0.05, 0.01, 0.01);
    double prev = -INFINITY;
    for (double T : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double l = gronwall_bound(n, 4.0, T, 1.0).c_pT.log;
        EXPECT_GT(l, prev) << "T=" << T;
        prev = l;
    }
    // with zero coefficient moments F is 4^{p-1}|x|^p, so the x dependence is visible in double precision
    const auto homogeneous = CoefficientNorms::constant(0.2, 0.3, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0);
    prev = -INFINITY;
    for (double x : {0.25, 0.5, 1.0, 2.0}) {
        const double l = gronwall_bound(homogeneous, 4.0, 1.0, x).c_pT.log;
        EXPECT_GT(l, prev) << "x=" << x;
        prev = l;
    }
}

TEST(Gronwall, InvalidNorms) {
    EXPECT_THROW(gronwall_bound(CoefficientNorms::constant(-0.1, 0, 0, 0), 2.0, 1.0, 1.0), Error);
    EXPECT_THROW(gronwall_bound(CoefficientNorms::constant(0.1, 0, 0, 0), 1.5, 1.0, 1.0), Error);
    EXPECT_THROW(gronwall_bound(CoefficientNorms::constant(0.1, 0, 0, 0), 2.0, 0.0, 1.0), Error);
}

TEST(Gronwall, NormsFromFamilies) {
    const auto gbm = make_gbm(0.1, 0.2);
    const auto none = JumpModel::none();
    const auto g = gronwall_bound(norms_from_coefficients(gbm, none, 2.0, 1.0), 2.0, 1.0, 1.0);
    EXPECT_NEAR(g.c_pT.value, 4 * std::exp(1.36), 1e-11);
    // Merton: ||int |e^y - 1|^2 nu|| = lambda E[(e^y - 1)^2]
    const auto m = make_merton(0.1, 0.2);
    const auto jm = JumpModel::constant(1.0, SizeLaw::discrete({{std::log(2.0), 1.0}}));
    const auto nm = norms_from_coefficients(m, jm, 2.0, 1.0);
    EXPECT_NEAR(nm.jump_l2(0.0), 1.0, 1e-14);
    EXPECT_NEAR(nm.jump_lp(0.0), 1.0, 1e-14);
    const auto custom = make_custom([](double, double x) { return x; }, [](double, double) { return 0.0; }, {}, 2, 1.0, {});
    try {
        norms_from_coefficients(custom, none, 2.0, 1.0);
        ADD_FAILURE() << "custom coefficients must not produce norms";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::norms_unavailable);
    }
}

TEST(Gronwall, AffineParameterization) {
    AffineSpec s;
    s.a = [](double) { return 0.1; };
    s.u = [](double) { return 0.0; };
    s.b = [](double) { return 0.2; };
    s.v = [](double) { return 0.0; };
    s.c = [](double, double) { return 0.0; };
    s.w = [](double, double) { return 0.0; };
    s.time_constant = true;
    const auto g = gronwall_bound(norms_from_affine(s, JumpModel::none(), 2.0, 1.0), 2.0, 1.0, 1.0);
    EXPECT_NEAR(g.c_pT.value, 4 * std::exp(1.36), 1e-11);
}

TEST(MomentOrders, FactorialLadder) {
    const auto m3 = derivative_moment_orders(3, 2.0);
    EXPECT_EQ(m3.p, (std::vector<double>{12.0, 6.0, 2.0}));
    const auto m4 = derivative_moment_orders(4, 4.0);
    EXPECT_EQ(m4.p, (std::vector<double>{96.0, 48.0, 16.0, 4.0}));
    for (int k = 2; k <= 4; ++k) {
        EXPECT_EQ(k * m4.p[static_cast<std::size_t>(k - 1)], m4.p[static_cast<std::size_t>(k - 2)]);
        EXPECT_TRUE(m4.recursion_ok[static_cast<std::size_t>(k - 1)]);
    }
    const auto m2 = derivative_moment_orders(2, 2.0);
    EXPECT_EQ(m2.p, (std::vector<double>{4.0, 2.0}));
    EXPECT_THROW(derivative_moment_orders(0, 2.0), Error);
    EXPECT_THROW(derivative_moment_orders(2, 1.0), Error);
}
