#pragma once

// SDE coefficients r(t,x), sigma(t,x), g(t,x,y) with their x-partials, and the
// finite-activity jump model nu_t(dy) = lambda(t) mu(dy).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/error.hpp"
#include "jumpflow/quadrature.hpp"
#include "jumpflow/rng.hpp"

namespace jumpflow {

// ---------------------------------------------------------------------------
// Integrands against the jump-size law

enum class IntegrandKind { general, zero, identity, square, exp_minus_one };

/// A function of the jump mark y. Known kinds let laws use closed forms.
struct Integrand {
    IntegrandKind kind = IntegrandKind::general;
    std::function<double(double)> fn;

    double operator()(double y) const {
        switch (kind) {
        case IntegrandKind::zero: return 0.0;
        case IntegrandKind::identity: return y;
        case IntegrandKind::square: return y * y;
        case IntegrandKind::exp_minus_one: return std::expm1(y);
        case IntegrandKind::general: return fn(y);
        }
        return 0.0;
    }

    static Integrand general(std::function<double(double)> f) { return {IntegrandKind::general, std::move(f)}; }
    static Integrand zero() { return {IntegrandKind::zero, {}}; }
    static Integrand identity() { return {IntegrandKind::identity, {}}; }
    static Integrand square() { return {IntegrandKind::square, {}}; }
    static Integrand exp_minus_one() { return {IntegrandKind::exp_minus_one, {}}; }
};

// ---------------------------------------------------------------------------
// Jump-size law

enum class LawKind { gaussian, two_sided_exponential, discrete };

struct Atom {
    double value = 0.0;
    double probability = 0.0;
};

class SizeLaw {
public:
    static SizeLaw gaussian(double mean, double stddev, int quadrature_nodes = 32) {
        if (!(stddev >= 0.0) || !std::isfinite(mean) || !std::isfinite(stddev)) {
            throw Error(ErrorCode::invalid_parameter, "gaussian law needs finite mean and stddev >= 0");
        }
        check_nodes(quadrature_nodes);
        SizeLaw law(LawKind::gaussian);
        law.mean_ = mean;
        law.stddev_ = stddev;
        auto rule = quadrature::gauss_hermite(quadrature_nodes);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            law.rule_.nodes.push_back(mean + std::numbers::sqrt2 * stddev * rule.nodes[i]);
            law.rule_.weights.push_back(rule.weights[i] / std::sqrt(std::numbers::pi));
        }
        return law;
    }

    /// Mark is +Exp(beta_plus) with probability p_plus, else -Exp(beta_minus).
    static SizeLaw two_sided_exponential(double beta_plus, double beta_minus, double p_plus,
                                         int quadrature_nodes = 32) {
        if (!(beta_plus > 0.0) || !(beta_minus > 0.0) || !(p_plus >= 0.0 && p_plus <= 1.0)) {
            throw Error(ErrorCode::invalid_parameter,
                        "two-sided-exponential law needs beta_plus, beta_minus > 0 and p_plus in [0,1]");
        }
        check_nodes(quadrature_nodes);
        SizeLaw law(LawKind::two_sided_exponential);
        law.beta_plus_ = beta_plus;
        law.beta_minus_ = beta_minus;
        law.p_plus_ = p_plus;
        auto rule = quadrature::gauss_laguerre(quadrature_nodes);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            law.rule_.nodes.push_back(rule.nodes[i] / beta_plus);
            law.rule_.weights.push_back(p_plus * rule.weights[i]);
        }
        for (std::size_t i = 0; i < rule.size(); ++i) {
            law.rule_.nodes.push_back(-rule.nodes[i] / beta_minus);
            law.rule_.weights.push_back((1.0 - p_plus) * rule.weights[i]);
        }
        return law;
    }

    static SizeLaw discrete(std::vector<Atom> atoms) {
        if (atoms.empty()) throw Error(ErrorCode::invalid_parameter, "discrete law needs at least one atom");
        double total = 0.0;
        for (const auto& a : atoms) {
            if (!(a.probability >= 0.0) || !std::isfinite(a.value)) {
                throw Error(ErrorCode::invalid_parameter, "discrete law atoms need finite values and p >= 0");
            }
            total += a.probability;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw Error(ErrorCode::invalid_parameter, "discrete law probabilities sum to " + std::to_string(total));
        }
        SizeLaw law(LawKind::discrete);
        law.atoms_ = std::move(atoms);
        double cum = 0.0;
        for (const auto& a : law.atoms_) {
            law.rule_.nodes.push_back(a.value);
            law.rule_.weights.push_back(a.probability);
            cum += a.probability;
            law.cumulative_.push_back(cum);
        }
        return law;
    }

    LawKind kind() const noexcept { return kind_; }
    const quadrature::Rule& rule() const noexcept { return rule_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    double mean_param() const noexcept { return mean_; }
    double stddev_param() const noexcept { return stddev_; }
    double beta_plus() const noexcept { return beta_plus_; }
    double beta_minus() const noexcept { return beta_minus_; }
    double p_plus() const noexcept { return p_plus_; }

    /// E_mu[f(y)] by the law's quadrature rule (exact for discrete laws).
    double expectation_by_quadrature(const Integrand& f) const {
        std::vector<double> values;
        values.reserve(rule_.size());
        double s = 0.0;
        for (std::size_t i = 0; i < rule_.size(); ++i) {
            const double v = f(rule_.nodes[i]);
            values.push_back(v);
            s += rule_.weights[i] * v;
        }
        if (!std::isfinite(s)) {
            throw NumericalFailure("non-finite quadrature result over " + std::to_string(rule_.size()) + " nodes",
                                   rule_.nodes, std::move(values));
        }
        return s;
    }

    /// Closed-form E_mu[f(y)] when one is known for this law and integrand.
    std::optional<double> closed_form(const Integrand& f) const {
        switch (f.kind) {
        case IntegrandKind::general: return std::nullopt;
        case IntegrandKind::zero: return 0.0;
        default: break;
        }
        switch (kind_) {
        case LawKind::gaussian:
            switch (f.kind) {
            case IntegrandKind::identity: return mean_;
            case IntegrandKind::square: return mean_ * mean_ + stddev_ * stddev_;
            case IntegrandKind::exp_minus_one: return std::expm1(mean_ + 0.5 * stddev_ * stddev_);
            default: return std::nullopt;
            }
        case LawKind::two_sided_exponential:
            switch (f.kind) {
            case IntegrandKind::identity: return p_plus_ / beta_plus_ - (1.0 - p_plus_) / beta_minus_;
            case IntegrandKind::square:
                return 2.0 * p_plus_ / (beta_plus_ * beta_plus_) + 2.0 * (1.0 - p_plus_) / (beta_minus_ * beta_minus_);
            case IntegrandKind::exp_minus_one:
                if (p_plus_ > 0.0 && beta_plus_ <= 1.0) return std::numeric_limits<double>::infinity();
                return p_plus_ * beta_plus_ / (beta_plus_ - 1.0) + (1.0 - p_plus_) * beta_minus_ / (beta_minus_ + 1.0) -
                       1.0;
            default: return std::nullopt;
            }
        case LawKind::discrete: return std::nullopt;
        }
        return std::nullopt;
    }

    /// E_mu[f(y)]: closed form when available, otherwise quadrature.
    double expectation(const Integrand& f) const {
        if (auto c = closed_form(f)) {
            if (!std::isfinite(*c)) {
                throw NumericalFailure("integrand has no finite expectation under this law", rule_.nodes, {});
            }
            return *c;
        }
        return expectation_by_quadrature(f);
    }

    double sample(PathRng& rng) const {
        switch (kind_) {
        case LawKind::gaussian: return mean_ + stddev_ * rng.normal();
        case LawKind::two_sided_exponential:
            if (rng.uniform() < p_plus_) return rng.exponential(beta_plus_);
            return -rng.exponential(beta_minus_);
        case LawKind::discrete: {
            const double u = rng.uniform();
            for (std::size_t i = 0; i < atoms_.size(); ++i) {
                if (u < cumulative_[i]) return atoms_[i].value;
            }
            return atoms_.back().value;
        }
        }
        return 0.0;
    }

private:
    explicit SizeLaw(LawKind kind) : kind_(kind) {}

    static void check_nodes(int q) {
        if (q < 8) throw Error(ErrorCode::invalid_parameter, "quadrature needs at least 8 nodes");
    }

    LawKind kind_;
    double mean_ = 0.0, stddev_ = 0.0;
    double beta_plus_ = 1.0, beta_minus_ = 1.0, p_plus_ = 0.5;
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
    quadrature::Rule rule_;
};

// ---------------------------------------------------------------------------
// Jump model

/// nu_t(dy) = lambda(t) mu(dy), with lambda(t) <= dominating for all t.
class JumpModel {
public:
    JumpModel(std::function<double(double)> intensity, double dominating, SizeLaw law)
        : intensity_(std::move(intensity)), dominating_(dominating), law_(std::move(law)) {
        if (!(dominating_ >= 0.0) || !std::isfinite(dominating_)) {
            throw Error(ErrorCode::invalid_domination, "dominating intensity must be finite and >= 0");
        }
    }

    static JumpModel constant(double rate, SizeLaw law) {
        if (!(rate >= 0.0)) throw Error(ErrorCode::invalid_parameter, "jump intensity must be >= 0");
        return JumpModel([rate](double) { return rate; }, rate, std::move(law), true);
    }

    /// lambda(t) = start + (end - start) t / horizon, dominated by max(start, end).
    static JumpModel linear(double start, double end, double horizon, SizeLaw law) {
        if (!(start >= 0.0) || !(end >= 0.0) || !(horizon > 0.0)) {
            throw Error(ErrorCode::invalid_parameter, "linear intensity needs start, end >= 0 and horizon > 0");
        }
        return JumpModel([=](double t) { return start + (end - start) * t / horizon; }, std::max(start, end),
                         std::move(law));
    }

    /// No jumps at all.
    static JumpModel none() { return constant(0.0, SizeLaw::discrete({{0.0, 1.0}})); }

    double intensity(double t) const { return intensity_(t); }
    double dominating() const noexcept { return dominating_; }
    const SizeLaw& law() const noexcept { return law_; }
    bool time_constant() const noexcept { return time_constant_; }

    /// True when nu_t is identically zero.
    bool inactive() const noexcept { return dominating_ == 0.0 && time_constant_; }

    /// Checks lambda(t) <= dominating on `samples` uniform points of [0, horizon].
    void check_domination(double horizon, int samples = 1025) const {
        for (int i = 0; i < samples; ++i) {
            const double t = horizon * i / std::max(1, samples - 1);
            const double l = intensity_(t);
            if (!(l >= 0.0) || l > dominating_ * (1.0 + 1e-12)) {
                throw Error(ErrorCode::invalid_domination, "intensity " + std::to_string(l) + " at t=" +
                                                               std::to_string(t) + " exceeds dominating rate " +
                                                               std::to_string(dominating_));
            }
        }
    }

private:
    JumpModel(std::function<double(double)> intensity, double dominating, SizeLaw law, bool time_constant)
        : JumpModel(std::move(intensity), dominating, std::move(law)) {
        time_constant_ = time_constant;
    }

    std::function<double(double)> intensity_;
    double dominating_;
    SizeLaw law_;
    bool time_constant_ = false;
};

/// lambda(t) * integral of f against mu.
inline double compensator_integral(const JumpModel& jm, const Integrand& f, double t) {
    const double l = jm.intensity(t);
    if (l == 0.0 || f.kind == IntegrandKind::zero) return 0.0;
    const double v = l * jm.law().expectation(f);
    if (!std::isfinite(v)) {
        throw NumericalFailure("non-finite compensator integral", jm.law().rule().nodes, {});
    }
    return v;
}

// ---------------------------------------------------------------------------
// Coefficients

enum class Family { affine, gbm, merton, polynomial_tanh, custom };

inline const char* to_string(Family f) {
    switch (f) {
    case Family::affine: return "affine";
    case Family::gbm: return "gbm";
    case Family::merton: return "merton";
    case Family::polynomial_tanh: return "polynomial-tanh";
    case Family::custom: return "custom";
    }
    return "unknown";
}

/// Fills out[j] with d^j f/dx^j at (t, x) for j < out.size().
using PartialsFn = std::function<void(double t, double x, std::span<double> out)>;
/// Fills out[j] with d^j g/dx^j at (t, x, y) for j < out.size().
using JumpPartialsFn = std::function<void(double t, double x, double y, std::span<double> out)>;

/// g(t,x,y) = h(t,x) * phi(y). Lets the compensator use E_mu[phi] once.
struct JumpFactorization {
    PartialsFn h;
    Integrand phi;
};

/// Lipschitz data in the form used by the moment bound:
/// |a_t(x)-a_t(y)| <= a_t |x-y| and so on, with a_t(0), b_t(0), c_t(z,0).
struct LipschitzData {
    std::function<double(double)> drift_lip;
    std::function<double(double)> diffusion_lip;
    std::function<double(double)> drift_at_zero;
    std::function<double(double)> diffusion_at_zero;
    std::function<double(double, double)> jump_lip;     // c_t(z)
    std::function<double(double, double)> jump_at_zero; // c_t(z, 0)
    bool time_constant = true;
};

struct CoefficientSet {
    Family family = Family::custom;
    int n_max = 0;
    double lip_bound = 1.0;
    std::function<double(double)> theta;
    PartialsFn drift;
    PartialsFn diffusion;
    JumpPartialsFn jump;
    bool has_jump = false;
    bool fd_partials = false;
    std::optional<JumpFactorization> jump_factor;
    std::optional<LipschitzData> lipschitz;

    double r(double t, double x) const { return partial(drift, 0, t, x); }
    double sigma(double t, double x) const { return partial(diffusion, 0, t, x); }
    double g(double t, double x, double y) const { return jump_partial(0, t, x, y); }

    double drift_partial(int k, double t, double x) const { return partial(drift, k, t, x); }
    double diffusion_partial(int k, double t, double x) const { return partial(diffusion, k, t, x); }

    double jump_partial(int k, double t, double x, double y) const {
        if (!has_jump) return 0.0;
        std::vector<double> buf(static_cast<std::size_t>(k) + 1);
        jump(t, x, y, buf);
        return buf.back();
    }

private:
    static double partial(const PartialsFn& f, int k, double t, double x) {
        std::vector<double> buf(static_cast<std::size_t>(k) + 1);
        f(t, x, buf);
        return buf.back();
    }
};

namespace detail {

inline PartialsFn zero_partials() {
    return [](double, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
}

/// a x + b, exactly zero beyond order 1.
inline PartialsFn linear_partials(double slope, double intercept) {
    return [=](double, double x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        if (!out.empty()) out[0] = slope * x + intercept;
        if (out.size() > 1) out[1] = slope;
    };
}

inline std::vector<double> poly_derivative(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
    return d;
}

inline double horner(const std::vector<double>& c, double x) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
    return s;
}

/// Coefficients (in powers of T = tanh x) of d^k tanh/dx^k for k = 0..n.
inline std::vector<std::vector<double>> tanh_derivative_polys(int n) {
    std::vector<std::vector<double>> polys;
    polys.push_back({0.0, 1.0});
    for (int k = 1; k <= n; ++k) {
        // d/dx P(T) = P'(T) (1 - T^2)
        const auto dp = poly_derivative(polys.back());
        std::vector<double> next(dp.size() + 2, 0.0);
        for (std::size_t i = 0; i < dp.size(); ++i) {
            next[i] += dp[i];
            next[i + 2] -= dp[i];
        }
        polys.push_back(std::move(next));
    }
    return polys;
}

/// Function sum_i poly[i] x^i + scale * tanh(x) and its partials up to n.
class PolyTanh {
public:
    PolyTanh(std::vector<double> poly, double tanh_scale, int n) : tanh_scale_(tanh_scale) {
        derivs_.push_back(std::move(poly));
        for (int k = 1; k <= n; ++k) derivs_.push_back(poly_derivative(derivs_.back()));
        tanh_polys_ = tanh_derivative_polys(n);
    }

    void operator()(double x, std::span<double> out) const {
        const double th = std::tanh(x);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double v = k < derivs_.size() ? horner(derivs_[k], x) : 0.0;
            if (tanh_scale_ != 0.0 && k < tanh_polys_.size()) v += tanh_scale_ * horner(tanh_polys_[k], th);
            out[k] = v;
        }
    }

    int degree() const noexcept {
        int d = -1;
        for (std::size_t i = 0; i < derivs_[0].size(); ++i) {
            if (derivs_[0][i] != 0.0) d = static_cast<int>(i);
        }
        return d;
    }

    double coefficient(std::size_t i) const noexcept { return i < derivs_[0].size() ? derivs_[0][i] : 0.0; }
    double tanh_scale() const noexcept { return tanh_scale_; }

    /// Sampled sup over x of |d^k tanh/dx^k| for k = 1..n, scaled.
    double tanh_partial_sup(int k) const {
        if (tanh_scale_ == 0.0) return 0.0;
        double m = 0.0;
        for (int i = 0; i <= 40000; ++i) {
            const double x = -10.0 + 20.0 * i / 40000.0;
            m = std::max(m, std::abs(horner(tanh_polys_[static_cast<std::size_t>(k)], std::tanh(x))));
        }
        return std::abs(tanh_scale_) * m * (1.0 + 1e-9);
    }

private:
    std::vector<std::vector<double>> derivs_;
    std::vector<std::vector<double>> tanh_polys_;
    double tanh_scale_;
};

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Central finite-difference partials of a level-0 function.
inline void fd_partials(const std::function<double(double)>& f, double x, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k == 0) {
            out[0] = f(x);
            continue;
        }
        const int kk = static_cast<int>(k);
        const double h = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (kk + 2)) * std::max(1.0, std::abs(x));
        double s = 0.0;
        for (int j = 0; j <= kk; ++j) {
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            s += sign * binomial(kk, j) * f(x + (0.5 * kk - j) * h);
        }
        out[k] = s / std::pow(h, kk);
    }
}

} // namespace detail

inline CoefficientSet make_gbm(double mu, double sigma, int n_max = 6) {
    if (!std::isfinite(mu) || !std::isfinite(sigma)) throw Error(ErrorCode::invalid_parameter, "gbm parameters must be finite");
    if (sigma < 0.0) throw Error(ErrorCode::invalid_parameter, "gbm volatility must be >= 0");
    CoefficientSet c;
    c.family = Family::gbm;
    c.n_max = n_max;
    c.lip_bound = std::max({std::abs(mu), std::abs(sigma), 1e-300});
    c.theta = [](double) { return 1.0; };
    c.drift = detail::linear_partials(mu, 0.0);
    c.diffusion = detail::linear_partials(sigma, 0.0);
    c.jump = [](double, double, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    c.has_jump = false;
    c.lipschitz = LipschitzData{[=](double) { return std::abs(mu); },
                                [=](double) { return std::abs(sigma); },
                                [](double) { return 0.0; },
                                [](double) { return 0.0; },
                                [](double, double) { return 0.0; },
                                [](double, double) { return 0.0; },
                                true};
    return c;
}

/// Black-Scholes dynamics with multiplicative jumps g(t,x,y) = x (e^y - 1).
inline CoefficientSet make_merton(double mu, double sigma, int n_max = 6) {
    CoefficientSet c = make_gbm(mu, sigma, n_max);
    c.family = Family::merton;
    c.lip_bound = std::max({std::abs(mu), std::abs(sigma), 1.0});
    c.theta = [](double y) { return std::abs(std::expm1(y)); };
    c.jump = [](double, double x, double y, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const double e = std::expm1(y);
        if (!out.empty()) out[0] = x * e;
        if (out.size() > 1) out[1] = e;
    };
    c.has_jump = true;
    c.jump_factor = JumpFactorization{detail::linear_partials(1.0, 0.0), Integrand::exp_minus_one()};
    c.lipschitz->jump_lip = [](double, double z) { return std::abs(std::expm1(z)); };
    return c;
}

/// Time-dependent affine coefficients:
///   r = a_t x + u_t, sigma = b_t x + v_t, g = c_t(z) x + w_t(z).
struct AffineSpec {
    std::function<double(double)> u, a, v, b;
    std::function<double(double, double)> w, c;
    bool time_constant = false;
};

inline CoefficientSet make_affine(const AffineSpec& s, int n_max = 6, double lip_bound = 1.0,
                                  std::function<double(double)> theta = {}) {
    CoefficientSet c;
    c.family = Family::affine;
    c.n_max = n_max;
    c.lip_bound = lip_bound;
    c.theta = theta ? std::move(theta) : [](double) { return 1.0; };
    auto lin = [](std::function<double(double)> slope, std::function<double(double)> icpt) {
        return [slope, icpt](double t, double x, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            const double s = slope(t);
            if (!out.empty()) out[0] = s * x + icpt(t);
            if (out.size() > 1) out[1] = s;
        };
    };
    c.drift = lin(s.a, s.u);
    c.diffusion = lin(s.b, s.v);
    c.has_jump = static_cast<bool>(s.c) || static_cast<bool>(s.w);
    auto cz = s.c ? s.c : [](double, double) { return 0.0; };
    auto wz = s.w ? s.w : [](double, double) { return 0.0; };
    c.jump = [cz, wz](double t, double x, double y, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const double slope = cz(t, y);
        if (!out.empty()) out[0] = slope * x + wz(t, y);
        if (out.size() > 1) out[1] = slope;
    };
    c.lipschitz = LipschitzData{[a = s.a](double t) { return std::abs(a(t)); },
                                [b = s.b](double t) { return std::abs(b(t)); },
                                s.u,
                                s.v,
                                [cz](double t, double z) { return std::abs(cz(t, z)); },
                                wz,
                                s.time_constant};
    return c;
}

/// Constant-parameter affine model with marks entering linearly:
///   r = a x + u, sigma = b x + v, g = (c x + w) y.
inline CoefficientSet make_affine(double a, double u, double b, double v, double c_jump, double w_jump,
                                  int n_max = 6) {
    AffineSpec s;
    s.a = [a](double) { return a; };
    s.u = [u](double) { return u; };
    s.b = [b](double) { return b; };
    s.v = [v](double) { return v; };
    if (c_jump != 0.0 || w_jump != 0.0) {
        s.c = [c_jump](double, double z) { return c_jump * z; };
        s.w = [w_jump](double, double z) { return w_jump * z; };
    }
    s.time_constant = true;
    CoefficientSet c = make_affine(s, n_max, std::max({std::abs(a), std::abs(b), std::abs(c_jump), 1e-300}),
                                   [](double y) { return std::abs(y); });
    if (c.has_jump) c.jump_factor = JumpFactorization{detail::linear_partials(c_jump, w_jump), Integrand::identity()};
    return c;
}

struct PolyTanhParams {
    std::vector<double> drift_poly;
    double drift_tanh = 1.0;
    std::vector<double> diffusion_poly{0.2};
    double diffusion_tanh = 0.1;
    std::vector<double> jump_poly;
    double jump_tanh = 0.0;
};

/// r = P_r(x) + a tanh x, sigma = P_s(x) + b tanh x, g = y (P_g(x) + c tanh x).
inline CoefficientSet make_polynomial_tanh(const PolyTanhParams& p, int n_max = 6,
                                           std::optional<double> lip_bound = std::nullopt) {
    detail::PolyTanh r(p.drift_poly, p.drift_tanh, n_max);
    detail::PolyTanh s(p.diffusion_poly, p.diffusion_tanh, n_max);
    detail::PolyTanh h(p.jump_poly, p.jump_tanh, n_max);
    CoefficientSet c;
    c.family = Family::polynomial_tanh;
    c.n_max = n_max;
    c.theta = [](double y) { return std::abs(y); };
    c.drift = [r](double, double x, std::span<double> out) { r(x, out); };
    c.diffusion = [s](double, double x, std::span<double> out) { s(x, out); };
    c.has_jump = h.degree() >= 0 || h.tanh_scale() != 0.0;
    c.jump = [h](double, double x, double y, std::span<double> out) {
        h(x, out);
        for (auto& v : out) v *= y;
    };
    if (c.has_jump) c.jump_factor = JumpFactorization{[h](double, double x, std::span<double> out) { h(x, out); },
                                                      Integrand::identity()};

    const bool bounded = r.degree() <= 1 && s.degree() <= 1 && h.degree() <= 1;
    if (lip_bound) {
        c.lip_bound = *lip_bound;
    } else if (bounded) {
        double C = 0.0;
        for (int k = 1; k <= n_max; ++k) {
            const double lin = (k == 1) ? 1.0 : 0.0;
            C = std::max(C, lin * std::abs(r.coefficient(1)) + r.tanh_partial_sup(k));
            C = std::max(C, lin * std::abs(s.coefficient(1)) + s.tanh_partial_sup(k));
            C = std::max(C, lin * std::abs(h.coefficient(1)) + h.tanh_partial_sup(k));
        }
        c.lip_bound = std::max(C, 1e-300);
    } else {
        c.lip_bound = 1.0;
    }

    if (bounded) {
        const double lr = std::abs(r.coefficient(1)) + std::abs(r.tanh_scale());
        const double ls = std::abs(s.coefficient(1)) + std::abs(s.tanh_scale());
        const double lh = std::abs(h.coefficient(1)) + std::abs(h.tanh_scale());
        const double r0 = r.coefficient(0), s0 = s.coefficient(0), h0 = h.coefficient(0);
        c.lipschitz = LipschitzData{[lr](double) { return lr; },
                                    [ls](double) { return ls; },
                                    [r0](double) { return r0; },
                                    [s0](double) { return s0; },
                                    [lh](double, double z) { return lh * std::abs(z); },
                                    [h0](double, double z) { return h0 * z; },
                                    true};
    }
    return c;
}

/// User coefficients given only at level 0. Partials come from central finite
/// differences and the set is flagged accordingly.
inline CoefficientSet make_custom(std::function<double(double, double)> r, std::function<double(double, double)> sigma,
                                  std::function<double(double, double, double)> g, int n_max, double lip_bound,
                                  std::function<double(double)> theta) {
    CoefficientSet c;
    c.family = Family::custom;
    c.n_max = n_max;
    c.lip_bound = lip_bound;
    c.theta = theta ? std::move(theta) : [](double) { return 1.0; };
    c.fd_partials = true;
    c.drift = [r](double t, double x, std::span<double> out) {
        detail::fd_partials([&](double z) { return r(t, z); }, x, out);
    };
    c.diffusion = [sigma](double t, double x, std::span<double> out) {
        detail::fd_partials([&](double z) { return sigma(t, z); }, x, out);
    };
    c.has_jump = static_cast<bool>(g);
    if (g) {
        c.jump = [g](double t, double x, double y, std::span<double> out) {
            detail::fd_partials([&](double z) { return g(t, z, y); }, x, out);
        };
    } else {
        c.jump = [](double, double, double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    }
    return c;
}

/// User coefficients with analytic partials.
inline CoefficientSet make_custom(PartialsFn drift, PartialsFn diffusion, JumpPartialsFn jump, int n_max,
                                  double lip_bound, std::function<double(double)> theta) {
    CoefficientSet c;
    c.family = Family::custom;
    c.n_max = n_max;
    c.lip_bound = lip_bound;
    c.theta = theta ? std::move(theta) : [](double) { return 1.0; };
    c.drift = std::move(drift);
    c.diffusion = std::move(diffusion);
    c.has_jump = static_cast<bool>(jump);
    c.jump = jump ? std::move(jump) : [](double, double, double, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    return c;
}

/// Family tag plus named parameters, as read from a run configuration.
struct ModelSpec {
    std::string family;
    std::map<std::string, double> params;
    std::map<std::string, std::vector<double>> lists;
    int n_max = 6;
};

inline CoefficientSet build_coefficients(const ModelSpec& spec) {
    if (spec.n_max < 0) throw Error(ErrorCode::invalid_parameter, "n_max must be >= 0");
    auto get = [&](const std::string& key, double def) {
        auto it = spec.params.find(key);
        return it == spec.params.end() ? def : it->second;
    };
    auto get_list = [&](const std::string& key, std::vector<double> def) {
        auto it = spec.lists.find(key);
        return it == spec.lists.end() ? def : it->second;
    };
    CoefficientSet c;
    if (spec.family == "gbm") {
        c = make_gbm(get("mu", 0.0), get("sigma", 0.0), spec.n_max);
    } else if (spec.family == "merton") {
        const double sigma = get("sigma", 0.0);
        if (sigma < 0.0) throw Error(ErrorCode::invalid_parameter, "merton volatility must be >= 0");
        c = make_merton(get("mu", 0.0), sigma, spec.n_max);
    } else if (spec.family == "affine") {
        c = make_affine(get("a", 0.0), get("u", 0.0), get("b", 0.0), get("v", 0.0), get("c", 0.0), get("w", 0.0),
                        spec.n_max);
    } else if (spec.family == "polynomial-tanh") {
        PolyTanhParams p;
        p.drift_poly = get_list("drift_poly", p.drift_poly);
        p.drift_tanh = get("drift_tanh", p.drift_tanh);
        p.diffusion_poly = get_list("diffusion_poly", p.diffusion_poly);
        p.diffusion_tanh = get("diffusion_tanh", p.diffusion_tanh);
        p.jump_poly = get_list("jump_poly", p.jump_poly);
        p.jump_tanh = get("jump_tanh", p.jump_tanh);
        std::optional<double> C;
        if (spec.params.count("C")) C = spec.params.at("C");
        c = make_polynomial_tanh(p, spec.n_max, C);
    } else if (spec.family == "custom") {
        throw Error(ErrorCode::unknown_family, "custom coefficients must be constructed in code");
    } else {
        throw Error(ErrorCode::unknown_family, "'" + spec.family + "'");
    }
    if (spec.params.count("C")) c.lip_bound = spec.params.at("C");
    return c;
}

// ---------------------------------------------------------------------------
// Assumption (A_n) report

struct SampleGrid {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;
};

struct AssumptionReport {
    int n = 0;
    double lip_bound = 0.0;
    std::vector<double> max_drift_partial;     // index k-1 for k = 1..n
    std::vector<double> max_diffusion_partial; // index k-1
    std::vector<double> max_jump_ratio;        // max |d^k g| / theta, index k-1
    std::map<double, double> theta_norms;      // q -> ||theta||_{L^q(eta)}
    std::vector<std::string> violations;
    bool fd_partials = false;

    bool holds() const noexcept { return violations.empty(); }
};

/// Samples the (A_n) bounds on `grid`. Violations are findings, not errors.
/// theta norms are reported for q in {2, p, 2p} under eta = dominating * mu.
inline AssumptionReport check_assumption_An(const CoefficientSet& coeffs, const JumpModel& jm, int n,
                                            const SampleGrid& grid, double p = 2.0) {
    if (grid.t.empty() || grid.x.empty() || grid.y.empty()) {
        throw Error(ErrorCode::invalid_parameter, "assumption check needs a nonempty (t, x, y) grid");
    }
    if (n > coeffs.n_max) {
        throw Error(ErrorCode::insufficient_smoothness,
                    "order " + std::to_string(n) + " exceeds n_max " + std::to_string(coeffs.n_max));
    }
    AssumptionReport rep;
    rep.n = n;
    rep.lip_bound = coeffs.lip_bound;
    rep.fd_partials = coeffs.fd_partials;
    rep.max_drift_partial.assign(static_cast<std::size_t>(n), 0.0);
    rep.max_diffusion_partial.assign(static_cast<std::size_t>(n), 0.0);
    rep.max_jump_ratio.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> buf(static_cast<std::size_t>(n) + 1);
    for (double t : grid.t) {
        for (double x : grid.x) {
            coeffs.drift(t, x, buf);
            for (int k = 1; k <= n; ++k) {
                auto& m = rep.max_drift_partial[static_cast<std::size_t>(k - 1)];
                m = std::max(m, std::abs(buf[static_cast<std::size_t>(k)]));
            }
            coeffs.diffusion(t, x, buf);
            for (int k = 1; k <= n; ++k) {
                auto& m = rep.max_diffusion_partial[static_cast<std::size_t>(k - 1)];
                m = std::max(m, std::abs(buf[static_cast<std::size_t>(k)]));
            }
            if (!coeffs.has_jump) continue;
            for (double y : grid.y) {
                coeffs.jump(t, x, y, buf);
                const double th = coeffs.theta(y);
                for (int k = 1; k <= n; ++k) {
                    const double d = std::abs(buf[static_cast<std::size_t>(k)]);
                    double ratio = 0.0;
                    if (d > 0.0) ratio = th > 0.0 ? d / th : std::numeric_limits<double>::infinity();
                    auto& m = rep.max_jump_ratio[static_cast<std::size_t>(k - 1)];
                    m = std::max(m, ratio);
                }
            }
        }
    }
    const double C = coeffs.lip_bound;
    for (int k = 1; k <= n; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        if (rep.max_drift_partial[i] > C)
            rep.violations.push_back("max |d^" + std::to_string(k) + " r/dx| = " + std::to_string(rep.max_drift_partial[i]) + " > C");
        if (rep.max_diffusion_partial[i] > C)
            rep.violations.push_back("max |d^" + std::to_string(k) + " sigma/dx| = " + std::to_string(rep.max_diffusion_partial[i]) + " > C");
        if (rep.max_jump_ratio[i] > C)
            rep.violations.push_back("max |d^" + std::to_string(k) + " g/dx| / theta = " + std::to_string(rep.max_jump_ratio[i]) + " > C");
    }
    for (double q : {2.0, p, 2.0 * p}) {
        if (rep.theta_norms.count(q)) continue;
        const auto& th = coeffs.theta;
        const double m = jm.law().expectation_by_quadrature(
            Integrand::general([&th, q](double y) { return std::pow(std::abs(th(y)), q); }));
        rep.theta_norms[q] = std::pow(jm.dominating() * m, 1.0 / q);
    }
    return rep;
}

} // namespace jumpflow
