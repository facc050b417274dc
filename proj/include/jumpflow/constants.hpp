#pragma once

// Explicit BDG constants and the moment bounds assembled from them.
//
// Every constant is evaluated as a logarithm first and exponentiated once, so
// values beyond double range are reported as overflow with an exact log.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/quadrature.hpp"

namespace jumpflow {

/// A nonnegative quantity carried as (value, log value).
struct LogValue {
    double log = -std::numeric_limits<double>::infinity();
    double value = 0.0;

    static LogValue from_log(double lg) { return {lg, std::exp(lg)}; }
    static LogValue from_value(double v) { return {v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(), v}; }

    /// True when the exact value is finite but exceeds double range.
    bool overflow() const noexcept { return std::isfinite(log) && !std::isfinite(value); }
};

namespace detail {

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum(std::span<const double> logs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double l : logs) m = std::max(m, l);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double l : logs) s += std::exp(l - m);
    return m + std::log(s);
}

inline double safe_log(double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); }

/// ceil(log2 p) - 1, the recursion depth of the jump BDG bound.
inline int recursion_depth(double p) { return static_cast<int>(std::ceil(std::log2(p))) - 1; }

inline void require_finite_nonneg(double v, ErrorCode code, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw Error(code, std::string(name) + " must be finite and >= 0");
}

} // namespace detail

// ---------------------------------------------------------------------------
// BDG constants

/// log C_p for the continuous-martingale BDG inequality:
/// (10p)^{p/2} on [1,2), 2^p at p = 2, p^p (e/2)^{p/2} above.
inline double log_bdg_constant(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::invalid_exponent, "C_p needs p >= 1, got " + std::to_string(p));
    }
    if (p < 2.0) return 0.5 * p * std::log(10.0 * p);
    if (p == 2.0) return p * std::numbers::ln2;
    return p * std::log(p) + 0.5 * p * (1.0 - std::numbers::ln2);
}

inline double bdg_constant(double p) { return std::exp(log_bdg_constant(p)); }

struct BdgConstants {
    double p = 0.0;
    LogValue c_p;
    LogValue tilde_c_p;
    LogValue tilde_upper;
    int recursion_depth = 0;

    bool overflow() const noexcept { return c_p.overflow() || tilde_c_p.overflow() || tilde_upper.overflow(); }
};

/// log of (2/p)(40p)^{p/2}(p^2 e/2)^{p log2(p)/2}, the leading term of C~_p.
inline double log_kunita_leading(double p) {
    return std::log(2.0 / p) + 0.5 * p * std::log(40.0 * p) + 0.5 * p * std::log2(p) * std::log(0.5 * p * p * std::numbers::e);
}

/// log of 2^p (p^{pk}/2^k)(e/2)^{kp/2}, the k-th recursion term of C~_p.
inline double log_kunita_sum_term(double p, int k) {
    return p * std::numbers::ln2 + p * k * std::log(p) - k * std::numbers::ln2 + 0.5 * k * p * (1.0 - std::numbers::ln2);
}

inline BdgConstants kunita_constant(double p) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::invalid_exponent, "C~_p needs p >= 2, got " + std::to_string(p));
    }
    BdgConstants out;
    out.p = p;
    out.c_p = LogValue::from_log(log_bdg_constant(p));
    const int depth = detail::recursion_depth(p);
    out.recursion_depth = depth;
    std::vector<double> logs{log_kunita_leading(p)};
    for (int k = 1; k <= depth; ++k) logs.push_back(log_kunita_sum_term(p, k));
    out.tilde_c_p = LogValue::from_log(detail::log_sum(logs));
    // 2^p p^{p log2 p} (2 + (10 e^{ceil log2 p})^{p/2})
    const double ceil_log2 = std::ceil(std::log2(p));
    const double inner = detail::log_add(std::numbers::ln2, 0.5 * p * (std::log(10.0) + ceil_log2));
    out.tilde_upper = LogValue::from_log(p * std::numbers::ln2 + p * std::log2(p) * std::log(p) + inner);
    return out;
}

// ---------------------------------------------------------------------------
// Jump BDG bound for a compensated Poisson integral

/// Bound on E[(K*_t)^p] for K_t = int int g d(N - nu):
///   (2/p)(40p)^{p/2}(p^2e/2)^{p log2 p/2} E int int |g|^p nu
///   + 2^p sum_k (p^{pk}/2^k)(e/2)^{kp/2} E[(int int g^{2^k} nu)^{p/2^k}].
/// `power_moments[k-1]` holds E[(int int g^{2^k} nu)^{p/2^k}] for k = 1..depth.
inline LogValue poisson_bdg_bound(double p, double abs_p_moment, std::span<const double> power_moments) {
    if (!(p >= 2.0)) throw Error(ErrorCode::invalid_exponent, "jump BDG bound needs p >= 2");
    detail::require_finite_nonneg(abs_p_moment, ErrorCode::invalid_stats, "E int int |g|^p nu");
    const int depth = detail::recursion_depth(p);
    if (static_cast<int>(power_moments.size()) < depth) {
        throw Error(ErrorCode::invalid_stats, "need " + std::to_string(depth) + " power moments");
    }
    std::vector<double> logs{log_kunita_leading(p) + detail::safe_log(abs_p_moment)};
    for (int k = 1; k <= depth; ++k) {
        const double m = power_moments[static_cast<std::size_t>(k - 1)];
        detail::require_finite_nonneg(m, ErrorCode::invalid_stats, "power moment");
        logs.push_back(log_kunita_sum_term(p, k) + detail::safe_log(m));
    }
    return LogValue::from_log(detail::log_sum(logs));
}

// ---------------------------------------------------------------------------
// Time-factored bound for x + int u ds + int v dW + int int g d(N - nu)

struct Corollary3Stats {
    double x = 0.0;
    double drift_p = 0.0;        // E int |u_t|^p dt
    double diffusion_p = 0.0;    // E int |v_t|^p dt
    double jump_p = 0.0;         // E int int |g_t(y)|^p nu_t(dy) dt
    double jump_l2_power = 0.0;  // E int (int |g_t(y)|^2 nu_t(dy))^{p/2} dt
};

inline LogValue corollary3_log_bound(double p, double T, const Corollary3Stats& s) {
    if (!(p >= 2.0)) throw Error(ErrorCode::invalid_exponent, "bound needs p >= 2");
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::invalid_stats, "horizon must be finite and > 0");
    if (!std::isfinite(s.x)) throw Error(ErrorCode::invalid_stats, "x must be finite");
    detail::require_finite_nonneg(s.drift_p, ErrorCode::invalid_stats, "E int |u|^p");
    detail::require_finite_nonneg(s.diffusion_p, ErrorCode::invalid_stats, "E int |v|^p");
    detail::require_finite_nonneg(s.jump_p, ErrorCode::invalid_stats, "E int int |g|^p nu");
    detail::require_finite_nonneg(s.jump_l2_power, ErrorCode::invalid_stats, "E int (int |g|^2 nu)^{p/2}");
    const auto k = kunita_constant(p);
    const double lT = std::log(T);
    const double terms[] = {
        p * detail::safe_log(std::abs(s.x)),
        (p - 1.0) * lT + detail::safe_log(s.drift_p),
        k.c_p.log + (0.5 * p - 1.0) * lT + detail::safe_log(s.diffusion_p),
        k.tilde_c_p.log + detail::safe_log(s.jump_p),
        (0.5 * p - 1.0) * lT + k.tilde_c_p.log + detail::safe_log(s.jump_l2_power),
    };
    const double inner = detail::log_sum(terms);
    return LogValue::from_log((2.0 * p - 2.0) * std::numbers::ln2 + inner);
}

inline double corollary3_bound(double p, double T, const Corollary3Stats& s) {
    return corollary3_log_bound(p, T, s).value;
}

// ---------------------------------------------------------------------------
// Gronwall moment bound C(p,T) = F(T) exp(int_0^T G(t) dt)

/// Coefficient norms entering F(T) and G(t). Time functions are evaluated on
/// [0, T]; scalar entries are already integrated over [0, T].
struct CoefficientNorms {
    std::function<double(double)> drift_lip;      // ||a_t||_inf
    std::function<double(double)> diffusion_lip;  // ||b_t||_inf
    std::function<double(double)> jump_l2;        // ||int |c_t(z)|^2 nu_t(dz)||_inf
    std::function<double(double)> jump_lp;        // ||int |c_t(z)|^p nu_t(dz)||_inf
    double drift_zero = 0.0;      // E int |a_t(0)|^p dt
    double diffusion_zero = 0.0;  // E int |b_t(0)|^p dt
    double jump_zero_l2 = 0.0;    // E int (int |c_t(z,0)|^2 nu_t(dz))^{p/2} dt
    double jump_zero_lp = 0.0;    // E int int |c_t(z,0)|^p nu_t(dz) dt
    bool time_constant = true;

    static CoefficientNorms constant(double a, double b, double c2, double cp, double a0 = 0.0, double b0 = 0.0,
                                     double c0_2 = 0.0, double c0_p = 0.0) {
        return {[a](double) { return a; }, [b](double) { return b; }, [c2](double) { return c2; },
                [cp](double) { return cp; }, a0, b0, c0_2, c0_p, true};
    }
};

struct GronwallBound {
    double p = 0.0;
    double T = 0.0;
    double x = 0.0;
    LogValue f_T;
    LogValue g_integral;  // int_0^T G(t) dt, stored with its log
    LogValue c_pT;        // F(T) exp(int G)
};

namespace detail {

struct GronwallWeights {
    double log_drift, log_diffusion, log_jump_l2, log_jump_lp;  // G(t) weights
};

inline GronwallWeights gronwall_weights(double p, double T, const BdgConstants& k) {
    const double l4 = (p - 1.0) * std::log(4.0);
    const double lT = std::log(T);
    return {
        l4 + (p - 1.0) * (std::numbers::ln2 + lT),
        l4 + (p - 1.0) * std::numbers::ln2 + k.c_p.log + (0.5 * p - 1.0) * lT,
        l4 + (1.5 * p - 1.0) * std::numbers::ln2 + k.tilde_c_p.log + (0.5 * p - 1.0) * lT,
        l4 + (p - 1.0) * std::numbers::ln2 + k.tilde_c_p.log,
    };
}

inline double log_G(const CoefficientNorms& n, const GronwallWeights& w, double p, double t) {
    const double a = n.drift_lip(t), b = n.diffusion_lip(t), c2 = n.jump_l2(t), cp = n.jump_lp(t);
    for (double v : {a, b, c2, cp}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::invalid_norms, "coefficient norm " + std::to_string(v) + " at t=" + std::to_string(t));
        }
    }
    const double terms[] = {w.log_drift + p * safe_log(a), w.log_diffusion + p * safe_log(b),
                            w.log_jump_l2 + 0.5 * p * safe_log(c2), w.log_jump_lp + safe_log(cp)};
    return log_sum(terms);
}

} // namespace detail

inline GronwallBound gronwall_bound(const CoefficientNorms& norms, double p, double T, double x) {
    if (!(p >= 2.0)) throw Error(ErrorCode::invalid_exponent, "moment bound needs p >= 2");
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::invalid_norms, "horizon must be finite and > 0");
    if (!std::isfinite(x)) throw Error(ErrorCode::invalid_norms, "initial condition must be finite");
    for (double v : {norms.drift_zero, norms.diffusion_zero, norms.jump_zero_l2, norms.jump_zero_lp}) {
        detail::require_finite_nonneg(v, ErrorCode::invalid_norms, "coefficient moment");
    }
    const auto k = kunita_constant(p);
    const double l4 = (p - 1.0) * std::log(4.0);
    const double lT = std::log(T);
    const double ln2 = std::numbers::ln2;

    // F(T) = 4^{p-1}( |x|^p + (2T)^{p-1} A0 + 2^{p-1} C_p T^{p/2-1} B0
    //                 + 2^{p-1} C~_p (2^{p/2} T^{p/2-1} C0_2 + C0_p) )
    const double f_terms[] = {
        p * detail::safe_log(std::abs(x)),
        (p - 1.0) * (ln2 + lT) + detail::safe_log(norms.drift_zero),
        (p - 1.0) * ln2 + k.c_p.log + (0.5 * p - 1.0) * lT + detail::safe_log(norms.diffusion_zero),
        (p - 1.0) * ln2 + k.tilde_c_p.log + 0.5 * p * ln2 + (0.5 * p - 1.0) * lT + detail::safe_log(norms.jump_zero_l2),
        (p - 1.0) * ln2 + k.tilde_c_p.log + detail::safe_log(norms.jump_zero_lp),
    };
    const double log_f = l4 + detail::log_sum(f_terms);

    const auto w = detail::gronwall_weights(p, T, k);
    double g_int = 0.0;
    if (norms.time_constant) {
        g_int = T * std::exp(detail::log_G(norms, w, p, 0.0));
    } else {
        const auto rule = quadrature::gauss_legendre(64, 0.0, T);
        for (std::size_t i = 0; i < rule.size(); ++i) g_int += rule.weights[i] * std::exp(detail::log_G(norms, w, p, rule.nodes[i]));
    }

    GronwallBound out;
    out.p = p;
    out.T = T;
    out.x = x;
    out.f_T = LogValue::from_log(log_f);
    out.g_integral = LogValue::from_value(g_int);
    out.c_pT = LogValue::from_log(log_f + g_int);
    return out;
}

/// Norms from Lipschitz data on a coefficient set; deterministic coefficients
/// make every expectation a plain time integral.
inline CoefficientNorms norms_from_lipschitz(const LipschitzData& lip, bool has_jump, const JumpModel& jm, double p,
                                             double T) {
    CoefficientNorms n;
    n.time_constant = lip.time_constant && jm.time_constant();
    n.drift_lip = lip.drift_lip;
    n.diffusion_lip = lip.diffusion_lip;
    const bool jumps = has_jump && !jm.inactive();
    if (jumps) {
        const JumpModel* pj = &jm;
        auto c = lip.jump_lip;
        n.jump_l2 = [pj, c](double t) {
            return compensator_integral(*pj, Integrand::general([&](double z) { double v = c(t, z); return v * v; }), t);
        };
        n.jump_lp = [pj, c, p](double t) {
            return compensator_integral(*pj, Integrand::general([&](double z) { return std::pow(std::abs(c(t, z)), p); }), t);
        };
    } else {
        n.jump_l2 = [](double) { return 0.0; };
        n.jump_lp = [](double) { return 0.0; };
    }
    auto a0 = [&](double t) { return std::pow(std::abs(lip.drift_at_zero(t)), p); };
    auto b0 = [&](double t) { return std::pow(std::abs(lip.diffusion_at_zero(t)), p); };
    auto c0_2 = [&](double t) {
        if (!jumps) return 0.0;
        const double v = compensator_integral(
            jm, Integrand::general([&](double z) { double w = lip.jump_at_zero(t, z); return w * w; }), t);
        return std::pow(v, 0.5 * p);
    };
    auto c0_p = [&](double t) {
        if (!jumps) return 0.0;
        return compensator_integral(
            jm, Integrand::general([&](double z) { return std::pow(std::abs(lip.jump_at_zero(t, z)), p); }), t);
    };
    auto integrate = [&](auto&& f) {
        if (n.time_constant) return T * f(0.0);
        const auto rule = quadrature::gauss_legendre(64, 0.0, T);
        return rule.integrate(f);
    };
    n.drift_zero = integrate(a0);
    n.diffusion_zero = integrate(b0);
    n.jump_zero_l2 = integrate(c0_2);
    n.jump_zero_lp = integrate(c0_p);
    return n;
}

/// Norms for the affine parameterization r = a_t x + u_t, sigma = b_t x + v_t,
/// g = c_t(z) x + w_t(z).
inline CoefficientNorms norms_from_affine(const AffineSpec& s, const JumpModel& jm, double p, double T) {
    LipschitzData lip{[a = s.a](double t) { return std::abs(a(t)); },
                      [b = s.b](double t) { return std::abs(b(t)); },
                      s.u,
                      s.v,
                      s.c ? std::function<double(double, double)>([c = s.c](double t, double z) { return std::abs(c(t, z)); })
                          : std::function<double(double, double)>([](double, double) { return 0.0; }),
                      s.w ? s.w : std::function<double(double, double)>([](double, double) { return 0.0; }),
                      s.time_constant && jm.time_constant()};
    return norms_from_lipschitz(lip, static_cast<bool>(s.c) || static_cast<bool>(s.w), jm, p, T);
}

/// Norms derived from a built-in coefficient family. The returned functions
/// reference `jm`, which must outlive them.
inline CoefficientNorms norms_from_coefficients(const CoefficientSet& coeffs, const JumpModel& jm, double p, double T) {
    if (!coeffs.lipschitz) {
        throw Error(ErrorCode::norms_unavailable,
                    std::string("no global Lipschitz data for family '") + to_string(coeffs.family) +
                        "'; supply coefficient norms explicitly");
    }
    return norms_from_lipschitz(*coeffs.lipschitz, coeffs.has_jump, jm, p, T);
}

// ---------------------------------------------------------------------------
// Moment orders for flow derivatives

struct MomentOrders {
    int n = 0;
    double q = 0.0;
    std::vector<double> p;  // p[k-1] = q n!/k!
    /// For k >= 2: p_k * |pi| <= k p_k = p_{k-1} for every pi in Pi[k].
    std::vector<bool> recursion_ok;
};

inline MomentOrders derivative_moment_orders(int n, double q) {
    if (n < 1) throw Error(ErrorCode::invalid_order, "derivative order must be >= 1");
    if (!(q >= 2.0)) throw Error(ErrorCode::invalid_exponent, "q must be >= 2");
    MomentOrders m;
    m.n = n;
    m.q = q;
    for (int k = 1; k <= n; ++k) {
        double v = q;
        for (int j = k + 1; j <= n; ++j) v *= j;
        m.p.push_back(v);
    }
    m.recursion_ok.push_back(true);
    for (int k = 2; k <= n; ++k) {
        const double pk = m.p[static_cast<std::size_t>(k - 1)];
        const double prev = m.p[static_cast<std::size_t>(k - 2)];
        // |pi| <= k, so the largest product is k p_k.
        m.recursion_ok.push_back(pk * k <= prev && k * pk == prev);
    }
    return m;
}

} // namespace jumpflow
