#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "jumpflow/model.hpp"
#include "jumpflow/quadrature.hpp"

using namespace jumpflow;

namespace {

std::vector<double> partials(const PartialsFn& f, double t, double x, int n) {
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    f(t, x, out);
    return out;
}

// k-th supplied partial against a central difference of the (k-1)-th.
void expect_partials_consistent(const PartialsFn& f, int n, const char* what) {
    const double h = 1e-5;
    for (double x : {-1.7, -0.6, 0.0, 0.35, 1.2, 2.4}) {
        const auto at = partials(f, 0.3, x, n);
        const auto up = partials(f, 0.3, x + h, n);
        const auto dn = partials(f, 0.3, x - h, n);
        for (int k = 1; k <= n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            const double fd = (up[i - 1] - dn[i - 1]) / (2 * h);
            EXPECT_NEAR(at[i], fd, 1e-6 * std::max(std::abs(fd), std::abs(at[i])) + 1e-9)
                << what << " k=" << k << " x=" << x;
        }
    }
}

} // namespace

TEST(Model, GbmPartials) {
    const auto c = make_gbm(0.1, 0.2, 3);
    EXPECT_DOUBLE_EQ(c.r(0.0, 2.0), 0.2);
    EXPECT_DOUBLE_EQ(c.drift_partial(1, 0.0, 2.0), 0.1);
    EXPECT_EQ(c.drift_partial(2, 0.0, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(c.diffusion_partial(1, 0.0, -1.0), 0.2);
    EXPECT_EQ(c.diffusion_partial(3, 0.0, -1.0), 0.0);
}

TEST(Model, MertonJumpPartials) {
    const auto c = make_merton(0.05, 0.2, 3);
    for (double y : {-0.4, 0.1, 0.8}) {
        EXPECT_NEAR(c.jump_partial(1, 0.0, 1.7, y), std::exp(y) - 1.0, 1e-15);
        EXPECT_EQ(c.jump_partial(2, 0.0, 1.7, y), 0.0);
        EXPECT_DOUBLE_EQ(c.g(0.0, 1.7, y), 1.7 * std::expm1(y));
    }
}

TEST(Model, PolynomialTanhDriftSlopeAtZero) {
    const auto c = make_polynomial_tanh({}, 4);
    EXPECT_DOUBLE_EQ(c.drift_partial(1, 0.0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(c.r(0.0, 0.5), std::tanh(0.5));
}

TEST(Model, BuiltInPartialsMatchFiniteDifferences) {
    PolyTanhParams p;
    p.drift_poly = {0.1, -0.5, 0.3};
    p.diffusion_poly = {0.2, 0.3};
    p.jump_poly = {0.1};
    p.jump_tanh = 0.2;
    const auto pt = make_polynomial_tanh(p, 5);
    expect_partials_consistent(pt.drift, 5, "poly-tanh drift");
    expect_partials_consistent(pt.diffusion, 5, "poly-tanh diffusion");
    expect_partials_consistent([&](double t, double x, std::span<double> o) { pt.jump(t, x, 0.7, o); }, 5,
                               "poly-tanh jump");
    const auto m = make_merton(0.05, 0.3, 4);
    expect_partials_consistent(m.drift, 4, "merton drift");
    expect_partials_consistent([&](double t, double x, std::span<double> o) { m.jump(t, x, -0.3, o); }, 4,
                               "merton jump");
    const auto a = make_affine(0.3, 0.1, -0.2, 0.4, 0.5, 0.2, 4);
    expect_partials_consistent(a.diffusion, 4, "affine diffusion");
    expect_partials_consistent([&](double t, double x, std::span<double> o) { a.jump(t, x, 0.6, o); }, 4,
                               "affine jump");
}

TEST(Model, AffineHigherPartialsExactlyZero) {
    const auto a = make_affine(0.3, 0.1, -0.2, 0.4, 0.5, 0.2, 4);
    for (int k = 2; k <= 4; ++k) {
        EXPECT_EQ(a.drift_partial(k, 0.1, 3.3), 0.0);
        EXPECT_EQ(a.diffusion_partial(k, 0.1, 3.3), 0.0);
        EXPECT_EQ(a.jump_partial(k, 0.1, 3.3, 0.9), 0.0);
    }
}

TEST(Model, BuildCoefficientsErrors) {
    EXPECT_THROW(build_coefficients({"heston", {}, {}, 2}), Error);
    try {
        build_coefficients({"heston", {}, {}, 2});
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unknown_family);
    }
    for (const char* fam : {"gbm", "merton"}) {
        try {
            build_coefficients({fam, {{"mu", 0.1}, {"sigma", -0.2}}, {}, 2});
            ADD_FAILURE() << fam << " accepted a negative volatility";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::invalid_parameter);
        }
    }
    const auto c = build_coefficients({"gbm", {{"mu", 0.1}, {"sigma", 0.2}}, {}, 2});
    EXPECT_EQ(c.family, Family::gbm);
}

TEST(Quadrature, LegendreIntegratesPolynomialsExactly) {
    const auto rule = quadrature::gauss_legendre(8, 0.0, 2.0);
    // degree 15 is integrated exactly by 8 nodes
    EXPECT_NEAR(rule.integrate([](double x) { return std::pow(x, 15); }), std::pow(2.0, 16) / 16, 1e-9);
    EXPECT_NEAR(rule.integrate([](double) { return 1.0; }), 2.0, 1e-14);
}

TEST(SizeLaw, QuadratureIsProbability) {
    const std::vector<SizeLaw> laws{SizeLaw::gaussian(0.3, 0.4), SizeLaw::two_sided_exponential(3.0, 2.0, 0.4),
                                    SizeLaw::discrete({{1.0, 0.25}, {-2.0, 0.75}})};
    for (const auto& law : laws) {
        EXPECT_NEAR(law.expectation_by_quadrature(Integrand::general([](double) { return 1.0; })), 1.0, 1e-10);
    }
}

TEST(SizeLaw, GaussianQuadratureMatchesMgf) {
    for (auto [m, s] : {std::pair{0.0, 0.1}, std::pair{0.1, 0.3}, std::pair{-0.2, 0.5}}) {
        const auto law = SizeLaw::gaussian(m, s, 32);
        const double exact = std::exp(m + 0.5 * s * s);
        const double quad = law.expectation_by_quadrature(Integrand::general([](double y) { return std::exp(y); }));
        EXPECT_NEAR(quad, exact, 1e-10 * exact);
        const double em1 = law.expectation_by_quadrature(Integrand::exp_minus_one());
        EXPECT_NEAR(em1, *law.closed_form(Integrand::exp_minus_one()), 1e-10 * std::abs(exact - 1.0) + 1e-15);
    }
}

TEST(SizeLaw, TwoSidedExponentialMoments) {
    const double bp = 3.0, bm = 2.0, pp = 0.4;
    const auto law = SizeLaw::two_sided_exponential(bp, bm, pp);
    const double mean = pp / bp - (1 - pp) / bm;
    const double second = 2 * pp / (bp * bp) + 2 * (1 - pp) / (bm * bm);
    const double mgf1 = pp * bp / (bp - 1) + (1 - pp) * bm / (bm + 1);
    EXPECT_NEAR(law.expectation_by_quadrature(Integrand::identity()), mean, 1e-10);
    EXPECT_NEAR(law.expectation_by_quadrature(Integrand::square()), second, 1e-10);
    EXPECT_NEAR(law.expectation_by_quadrature(Integrand::general([](double y) { return std::exp(y); })), mgf1, 1e-8);
    const auto heavy = SizeLaw::two_sided_exponential(0.8, 2.0, 0.5);
    EXPECT_THROW(heavy.expectation(Integrand::exp_minus_one()), NumericalFailure);
}

TEST(SizeLaw, ParameterChecks) {
    EXPECT_THROW(SizeLaw::gaussian(0.0, -1.0), Error);
    EXPECT_THROW(SizeLaw::gaussian(0.0, 1.0, 4), Error);
    EXPECT_THROW(SizeLaw::discrete({{1.0, 0.3}, {2.0, 0.3}}), Error);
    EXPECT_THROW(SizeLaw::two_sided_exponential(0.0, 1.0, 0.5), Error);
}

TEST(Compensator, Examples) {
    const auto zero = JumpModel::constant(3.0, SizeLaw::gaussian(0.0, 0.1));
    EXPECT_EQ(compensator_integral(zero, Integrand::zero(), 0.0), 0.0);
    EXPECT_NEAR(compensator_integral(zero, Integrand::exp_minus_one(), 0.0), 3.0 * std::expm1(0.005), 1e-15);
    EXPECT_NEAR(compensator_integral(zero, Integrand::exp_minus_one(), 0.0), 0.015038, 1e-6);
    const auto pm = JumpModel::constant(2.0, SizeLaw::discrete({{1.0, 0.5}, {-1.0, 0.5}}));
    EXPECT_DOUBLE_EQ(compensator_integral(pm, Integrand::square(), 0.0), 2.0);
}

TEST(Compensator, LinearInIntegrandAndIntensity) {
    const auto law = SizeLaw::gaussian(0.2, 0.3);
    const auto j1 = JumpModel::constant(1.5, law);
    const auto j2 = JumpModel::constant(4.5, law);
    auto f = [](double y) { return std::sin(y) + y * y; };
    auto g = [](double y) { return std::cos(3 * y); };
    const double a = 0.7, b = -2.3;
    const double lhs = compensator_integral(j1, Integrand::general([&](double y) { return a * f(y) + b * g(y); }), 0.0);
    const double rhs = a * compensator_integral(j1, Integrand::general(f), 0.0) +
                       b * compensator_integral(j1, Integrand::general(g), 0.0);
    EXPECT_NEAR(lhs, rhs, 1e-13);
    EXPECT_NEAR(compensator_integral(j2, Integrand::general(f), 0.0), 3.0 * compensator_integral(j1, Integrand::general(f), 0.0),
                1e-13);
}

TEST(Compensator, NonFiniteIntegrandCarriesNodes) {
    const auto jm = JumpModel::constant(1.0, SizeLaw::gaussian(0.0, 1.0, 16));
    try {
        compensator_integral(jm, Integrand::general([](double y) { return y > 0 ? INFINITY : 0.0; }), 0.0);
        ADD_FAILURE() << "expected a numerical failure";
    } catch (const NumericalFailure& e) {
        EXPECT_EQ(e.code(), ErrorCode::numerical_failure);
        EXPECT_EQ(e.nodes().size(), 16u);
    }
}

TEST(JumpModel, Domination) {
    const auto law = SizeLaw::discrete({{1.0, 1.0}});
    JumpModel bad([](double t) { return 1.0 + 5.0 * t; }, 3.0, law);
    EXPECT_THROW(bad.check_domination(1.0), Error);
    const auto ok = JumpModel::linear(0.0, 2.0, 1.0, law);
    EXPECT_NO_THROW(ok.check_domination(1.0));
    EXPECT_DOUBLE_EQ(ok.dominating(), 2.0);
}

TEST(Assumption, GbmSecondOrderPartialsVanish) {
    const auto c = make_gbm(0.1, 0.2, 2);
    const auto rep = check_assumption_An(c, JumpModel::none(), 2, {{0.0, 1.0}, {-3, -1, 0, 1, 3}, {0.0}});
    EXPECT_EQ(rep.max_drift_partial[1], 0.0);
    EXPECT_EQ(rep.max_diffusion_partial[1], 0.0);
    EXPECT_TRUE(rep.holds());
}

TEST(Assumption, MertonRatioIsOne) {
    const auto c = make_merton(0.05, 0.2, 2);
    const auto jm = JumpModel::constant(1.0, SizeLaw::gaussian(0.0, 0.2));
    const auto rep = check_assumption_An(c, jm, 1, {{0.0}, {-2, 0.5, 2}, {-0.5, -0.1, 0.3, 0.9}});
    EXPECT_NEAR(rep.max_jump_ratio[0], 1.0, 1e-15);
    EXPECT_TRUE(rep.holds());
}

TEST(Assumption, SquareDriftFlagged) {
    const auto c = make_custom([](double, double x) { return x * x; }, [](double, double) { return 0.0; }, {}, 2, 1.0,
                               {});
    SampleGrid grid{{0.0}, {}, {0.0}};
    for (int i = -20; i <= 20; ++i) grid.x.push_back(0.5 * i);
    const auto rep = check_assumption_An(c, JumpModel::none(), 1, grid);
    EXPECT_NEAR(rep.max_drift_partial[0], 20.0, 1e-6);
    EXPECT_FALSE(rep.holds());
    EXPECT_TRUE(rep.fd_partials);
}

TEST(Assumption, ThetaNormOrders) {
    const auto c = make_merton(0.05, 0.2, 2);
    const auto jm = JumpModel::constant(2.0, SizeLaw::discrete({{std::log(2.0), 1.0}}));
    const auto rep = check_assumption_An(c, jm, 1, {{0.0}, {1.0}, {std::log(2.0)}}, 3.0);
    ASSERT_EQ(rep.theta_norms.size(), 3u);
    // theta = 1 at the single atom, so ||theta||_q = 2^{1/q}
    for (double q : {2.0, 3.0, 6.0}) EXPECT_NEAR(rep.theta_norms.at(q), std::pow(2.0, 1.0 / q), 1e-12);
}
