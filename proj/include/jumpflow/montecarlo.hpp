#pragma once

// Monte Carlo estimates of the left-hand sides of the moment bounds, and
// pathwise Greeks through the flow derivatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/constants.hpp"
#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/parallel.hpp"
#include "jumpflow/rng.hpp"
#include "jumpflow/simulate.hpp"
#include "jumpflow/variational.hpp"

namespace jumpflow {

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Mean, standard error and 95% interval of `samples`, summed in index order.
inline McEstimate summarize(std::span<const double> samples) {
    McEstimate e;
    e.n_samples = samples.size();
    if (samples.empty()) return e;
    double s = 0.0;
    for (double v : samples) s += v;
    e.mean = s / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - e.mean) * (v - e.mean);
        const double var = ss / static_cast<double>(samples.size() - 1);
        e.stderr_ = std::sqrt(var / static_cast<double>(samples.size()));
    }
    e.ci_lo = e.mean - 1.96 * e.stderr_;
    e.ci_hi = e.mean + 1.96 * e.stderr_;
    return e;
}

/// |a - b| / sqrt(se_a^2 + se_b^2); zero when both are exact and equal.
inline double combined_z(const McEstimate& a, const McEstimate& b) {
    const double se = std::hypot(a.stderr_, b.stderr_);
    const double d = std::abs(a.mean - b.mean);
    if (se == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / se;
}

inline double combined_z(const McEstimate& a, double exact) {
    const double d = std::abs(a.mean - exact);
    if (a.stderr_ == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / a.stderr_;
}

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

struct BoundReport {
    std::string label;
    McEstimate estimate;
    LogValue bound;
    double log_slack = 0.0;   // log bound - log mean
    double slack_ratio = 0.0; // bound / mean, +inf when it overflows or mean is 0
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> notes;
};

/// Compares an estimate with a bound in log domain. "violated" requires the
/// whole 95% interval above the bound.
inline BoundReport compare_to_bound(std::string label, const McEstimate& est, const LogValue& bound) {
    BoundReport r;
    r.label = std::move(label);
    r.estimate = est;
    r.bound = bound;
    auto le_bound = [&](double v) { return v <= 0.0 || std::log(v) <= bound.log; };
    if (le_bound(est.ci_hi)) {
        r.verdict = Verdict::holds;
    } else if (!le_bound(est.ci_lo)) {
        r.verdict = Verdict::violated;
    } else {
        r.verdict = Verdict::inconclusive;
    }
    const double lm = detail::safe_log(est.mean);
    r.log_slack = bound.log - lm;
    r.slack_ratio = std::exp(r.log_slack);
    return r;
}

struct McSettings {
    std::size_t paths = 10000;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

namespace detail {

inline void check_paths(std::size_t m) {
    if (m < 100) throw Error(ErrorCode::invalid_parameter, "need at least 100 paths, got " + std::to_string(m));
}

/// Per path, running_sup[k]^powers[k] for k = 0..n.
inline std::vector<McEstimate> sup_moments(const CoefficientSet& coeffs, const JumpModel& jm, double x, int n,
                                           std::span<const double> powers, const TimeGrid& grid, const McSettings& mc) {
    const std::vector<double> pw(powers.begin(), powers.end());
    auto rows = parallel_map<std::vector<double>>(mc.paths, mc.workers, [&](std::size_t i) {
        const auto rec = simulate_path(coeffs, jm, x, n, grid, path_seed(mc.master_seed, i), {false});
        std::vector<double> out(pw.size());
        for (std::size_t k = 0; k < pw.size(); ++k) out[k] = std::pow(rec.running_sup[k], pw[k]);
        return out;
    });
    std::vector<McEstimate> est;
    std::vector<double> col(mc.paths);
    for (std::size_t k = 0; k < pw.size(); ++k) {
        for (std::size_t i = 0; i < mc.paths; ++i) col[i] = rows[i][k];
        est.push_back(summarize(col));
    }
    return est;
}

} // namespace detail

/// E[sup_{t<=T} |X^(k)_t(x)|^p] over `mc.paths` independent paths.
inline McEstimate estimate_sup_moment(const CoefficientSet& coeffs, const JumpModel& jm, double x, int k, double p,
                                      const TimeGrid& grid, const McSettings& mc) {
    if (!(p >= 1.0)) throw Error(ErrorCode::invalid_exponent, "moment order must be >= 1");
    detail::check_paths(mc.paths);
    if (k < 0 || k > coeffs.n_max) throw Error(ErrorCode::insufficient_smoothness, "order outside [0, n_max]");
    std::vector<double> powers(static_cast<std::size_t>(k) + 1, 1.0);
    powers.back() = p;
    return detail::sup_moments(coeffs, jm, x, k, powers, grid, mc).back();
}

/// E[sup |X|^p] against the Gronwall bound C(p,T) built from the coefficient
/// norms (derived from the family unless supplied).
inline BoundReport verify_moment_bound(const CoefficientSet& coeffs, const JumpModel& jm, double x, double p,
                                       const TimeGrid& grid, const McSettings& mc,
                                       std::optional<CoefficientNorms> norms = std::nullopt,
                                       GronwallBound* bound_out = nullptr) {
    const auto nm = norms ? *norms : norms_from_coefficients(coeffs, jm, p, grid.T);
    const auto bound = gronwall_bound(nm, p, grid.T, x);
    if (bound_out) *bound_out = bound;
    const auto est = estimate_sup_moment(coeffs, jm, x, 0, p, grid, mc);
    auto rep = compare_to_bound("E[sup_t |X_t|^p]", est, bound.c_pT);
    if (bound.c_pT.overflow()) rep.notes.push_back("bound exceeds double range; compared in log domain");
    return rep;
}

// ---------------------------------------------------------------------------
// Derivative moments

struct DerivativeMomentRow {
    double x = 0.0;
    int k = 0;
    double p_k = 0.0;
    McEstimate coarse;
    McEstimate refined;  // doubled paths and steps, independent seeds
    double z = 0.0;
    bool stable = false;
};

struct DerivativeMomentReport {
    MomentOrders orders;
    std::vector<double> x_grid;
    std::vector<DerivativeMomentRow> rows;
    std::vector<BoundReport> per_order;  // max over x of the coarse estimate, per k
    bool in_hypothesis = true;
    std::vector<std::string> notes;
};

inline std::vector<double> default_x_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back((2.0 * i - 10.0) / 5.0);
    return g;
}

/// Seed for the refinement run, independent of the base run.
constexpr std::uint64_t refinement_seed(std::uint64_t master) noexcept {
    return splitmix64(master ^ 0xa5a5a5a55a5a5a5aULL);
}

/// E[sup |X^(k)|^{p_k}] with p_k = q n!/k! for k = 1..n over a grid of initial
/// points. Finiteness is judged by stability when both the path count and the
/// step count are doubled: |difference| < 3 combined standard errors.
inline DerivativeMomentReport verify_derivative_moments(const CoefficientSet& coeffs, const JumpModel& jm, int n,
                                                        double q, const TimeGrid& grid, const McSettings& mc,
                                                        std::vector<double> x_grid = default_x_grid()) {
    if (x_grid.empty()) throw Error(ErrorCode::invalid_parameter, "x grid must be nonempty");
    detail::check_paths(mc.paths);
    DerivativeMomentReport rep;
    rep.orders = derivative_moment_orders(n, q);
    rep.x_grid = x_grid;

    SampleGrid sg;
    sg.t = {0.0, 0.5 * grid.T, grid.T};
    const auto [xlo, xhi] = std::minmax_element(x_grid.begin(), x_grid.end());
    for (int i = 0; i <= 40; ++i) sg.x.push_back(*xlo - 3.0 + (*xhi - *xlo + 6.0) * i / 40.0);
    sg.y = jm.law().rule().nodes;
    const auto an = check_assumption_An(coeffs, jm, n, sg, q);
    rep.in_hypothesis = an.holds();
    if (!rep.in_hypothesis) rep.notes.push_back("out-of-hypothesis: (A_n) bound violated on the sample grid");
    if (an.fd_partials) rep.notes.push_back("coefficient partials from finite differences");
    rep.notes.push_back("sup over x taken over a finite grid of " + std::to_string(x_grid.size()) +
                        " points; the supremum over the real line is not certified");

    std::vector<double> powers(static_cast<std::size_t>(n) + 1, 1.0);
    for (int k = 1; k <= n; ++k) powers[static_cast<std::size_t>(k)] = rep.orders.p[static_cast<std::size_t>(k - 1)];
    const TimeGrid fine(grid.T, grid.n_steps * 2);
    const McSettings mc_fine{mc.paths * 2, refinement_seed(mc.master_seed), mc.workers};

    std::vector<McEstimate> worst(static_cast<std::size_t>(n) + 1);
    std::vector<bool> have(static_cast<std::size_t>(n) + 1, false);
    std::vector<bool> all_stable(static_cast<std::size_t>(n) + 1, true);
    for (double x : x_grid) {
        const auto coarse = detail::sup_moments(coeffs, jm, x, n, powers, grid, mc);
        const auto refined = detail::sup_moments(coeffs, jm, x, n, powers, fine, mc_fine);
        for (int k = 1; k <= n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            DerivativeMomentRow row;
            row.x = x;
            row.k = k;
            row.p_k = powers[i];
            row.coarse = coarse[i];
            row.refined = refined[i];
            row.z = combined_z(coarse[i], refined[i]);
            row.stable = std::isfinite(coarse[i].mean) && std::isfinite(refined[i].mean) && row.z < 3.0;
            all_stable[i] = all_stable[i] && row.stable;
            if (!have[i] || coarse[i].mean > worst[i].mean) {
                worst[i] = coarse[i];
                have[i] = true;
            }
            rep.rows.push_back(row);
        }
    }
    for (int k = 1; k <= n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        // Only finiteness is asserted, so the bound is +inf.
        auto br = compare_to_bound("max_x E[sup_t |X^(" + std::to_string(k) + ")_t(x)|^p_k]", worst[i],
                                   LogValue{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
        br.verdict = all_stable[i] ? Verdict::holds : Verdict::inconclusive;
        if (!all_stable[i]) br.notes.push_back("estimate not stable under refinement at some x");
        if (!rep.in_hypothesis) br.notes.push_back("out-of-hypothesis");
        rep.per_order.push_back(std::move(br));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Compensated Poisson integrals

/// Deterministic integrand g_s(y) of K_t = int int g d(N - nu).
struct BdgIntegrand {
    std::string label;
    std::function<double(double s, double y)> g;
    bool time_homogeneous = true;

    static BdgIntegrand mark(double scale = 1.0) {
        std::ostringstream label;
        label << "g_s(y) = " << scale << " y";
        return {label.str(), [scale](double, double y) { return scale * y; }, true};
    }
    static BdgIntegrand zero() { return {"g = 0", [](double, double) { return 0.0; }, true}; }
};

struct BdgReport {
    double p = 0.0;
    double T = 0.0;
    McEstimate sup_moment;      // E[(K*_T)^p]
    McEstimate terminal_square; // E[K_T^2]
    double isometry = 0.0;      // int int g^2 nu ds = E[K_T^2]
    Corollary3Stats stats;
    std::vector<double> power_moments;
    BoundReport corollary3;     // against the time-factored bound
    BoundReport lemma;          // against the jump BDG bound
};

namespace detail {

/// int_0^T f(s) ds by 64-point Gauss-Legendre, or T f(0) when constant.
template <class F>
double time_integral(F&& f, double T, bool constant) {
    if (constant) return T * f(0.0);
    return quadrature::gauss_legendre(64, 0.0, T).integrate(f);
}

} // namespace detail

/// Simulates K on a grid of `n_steps` plus the jump times and estimates
/// E[(K*)^p]; compares against both jump BDG bounds.
inline BdgReport estimate_bdg_lhs(const BdgIntegrand& integrand, const JumpModel& jm, double p, double T, int n_steps,
                                  const McSettings& mc) {
    if (!(p >= 2.0)) throw Error(ErrorCode::invalid_exponent, "jump BDG needs p >= 2");
    detail::check_paths(mc.paths);
    const TimeGrid grid(T, n_steps);
    const bool constant = integrand.time_homogeneous && jm.time_constant();
    const auto& g = integrand.g;

    auto nu_moment = [&](double s, auto&& h) {
        return compensator_integral(jm, Integrand::general([&](double y) { return h(g(s, y)); }), s);
    };
    // Cumulative compensator A(t) = int_0^t int g nu ds at grid nodes.
    std::vector<double> comp(static_cast<std::size_t>(n_steps) + 1, 0.0);
    auto rate = [&](double s) { return nu_moment(s, [](double v) { return v; }); };
    if (constant) {
        const double c = rate(0.0);
        for (int i = 0; i <= n_steps; ++i) comp[static_cast<std::size_t>(i)] = c * grid.time(i);
    } else {
        for (int i = 0; i < n_steps; ++i) {
            const auto rule = quadrature::gauss_legendre(8, grid.time(i), grid.time(i + 1));
            comp[static_cast<std::size_t>(i) + 1] = comp[static_cast<std::size_t>(i)] + rule.integrate(rate);
        }
    }
    auto comp_at = [&](double t) {
        const double pos = t / grid.dt();
        const int i = std::min(n_steps - 1, static_cast<int>(pos));
        const double w = (t - grid.time(i)) / (grid.time(i + 1) - grid.time(i));
        return comp[static_cast<std::size_t>(i)] + w * (comp[static_cast<std::size_t>(i) + 1] - comp[static_cast<std::size_t>(i)]);
    };

    struct Sample {
        double sup_p = 0.0;
        double terminal_sq = 0.0;
    };
    auto samples = parallel_map<Sample>(mc.paths, mc.workers, [&](std::size_t idx) {
        PathRng rng(path_seed(mc.master_seed, idx));
        const auto jumps = sample_jump_times(jm, grid, rng);
        double jump_sum = 0.0;
        double sup = 0.0;
        std::size_t j = 0;
        for (int i = 0; i <= n_steps; ++i) {
            const double t = grid.time(i);
            while (j < jumps.size() && jumps[j].time <= t) {
                const double tau = jumps[j].time;
                const double a = comp_at(tau);
                sup = std::max(sup, std::abs(jump_sum - a));  // left limit
                jump_sum += g(tau, jumps[j].mark);
                sup = std::max(sup, std::abs(jump_sum - a));
                ++j;
            }
            sup = std::max(sup, std::abs(jump_sum - comp[static_cast<std::size_t>(i)]));
        }
        const double kt = jump_sum - comp.back();
        if (!std::isfinite(kt) || !std::isfinite(sup)) {
            throw BlowUpError(T, {kt}, path_seed(mc.master_seed, idx), "non-finite compensated integral");
        }
        return Sample{std::pow(sup, p), kt * kt};
    });

    BdgReport rep;
    rep.p = p;
    rep.T = T;
    std::vector<double> col(mc.paths);
    for (std::size_t i = 0; i < mc.paths; ++i) col[i] = samples[i].sup_p;
    rep.sup_moment = summarize(col);
    for (std::size_t i = 0; i < mc.paths; ++i) col[i] = samples[i].terminal_sq;
    rep.terminal_square = summarize(col);

    rep.isometry = detail::time_integral([&](double s) { return nu_moment(s, [](double v) { return v * v; }); }, T, constant);
    rep.stats.x = 0.0;
    rep.stats.jump_p = detail::time_integral(
        [&](double s) { return nu_moment(s, [p](double v) { return std::pow(std::abs(v), p); }); }, T, constant);
    rep.stats.jump_l2_power = detail::time_integral(
        [&](double s) { return std::pow(nu_moment(s, [](double v) { return v * v; }), 0.5 * p); }, T, constant);
    const int depth = detail::recursion_depth(p);
    for (int k = 1; k <= depth; ++k) {
        const double e = std::pow(2.0, k);
        const double inner = detail::time_integral(
            [&](double s) { return nu_moment(s, [e](double v) { return std::pow(v, e); }); }, T, constant);
        rep.power_moments.push_back(std::pow(inner, p / e));
    }
    rep.corollary3 = compare_to_bound("E[(K*_T)^p] vs time-factored bound", rep.sup_moment,
                                      corollary3_log_bound(p, T, rep.stats));
    rep.lemma = compare_to_bound("E[(K*_T)^p] vs jump BDG bound", rep.sup_moment,
                                 poisson_bdg_bound(p, rep.stats.jump_p, rep.power_moments));
    return rep;
}

// ---------------------------------------------------------------------------
// Semigroup derivatives

/// Payoff f with derivatives up to `max_order`.
struct Payoff {
    std::string label;
    int max_order = 0;
    std::function<double(int order, double z)> derivative;

    double operator()(double z) const { return derivative(0, z); }

    static Payoff identity() {
        return {"z", 1000, [](int k, double z) { return k == 0 ? z : (k == 1 ? 1.0 : 0.0); }};
    }
    static Payoff constant(double c) {
        return {"constant", 1000, [c](int k, double) { return k == 0 ? c : 0.0; }};
    }
    static Payoff power(int m) {
        return {"z^" + std::to_string(m), 1000, [m](int k, double z) {
                    if (k > m) return 0.0;
                    double coef = 1.0;
                    for (int j = 0; j < k; ++j) coef *= (m - j);
                    return coef * std::pow(z, m - k);
                }};
    }
    static Payoff sine() {
        return {"sin z", 1000, [](int k, double z) {
                    switch (k % 4) {
                    case 0: return std::sin(z);
                    case 1: return std::cos(z);
                    case 2: return -std::sin(z);
                    default: return -std::cos(z);
                    }
                }};
    }
    /// (z - K)^+; first derivative is the closed indicator 1{z >= K}.
    static Payoff call(double strike) {
        return {"call", 1, [strike](int k, double z) {
                    if (k == 0) return std::max(z - strike, 0.0);
                    return z >= strike ? 1.0 : 0.0;
                }};
    }
};

/// d^n/dx^n E[f(X_t(x))] as the mean over paths of
///   sum_{pi in Pi[n]} f^(|pi|)(X_t) prod_B X^(|B|)_t.
inline McEstimate estimate_semigroup_derivative(const CoefficientSet& coeffs, const JumpModel& jm, const Payoff& f,
                                                int n, double t, double x, int n_steps, const McSettings& mc) {
    if (n < 1) throw Error(ErrorCode::invalid_order, "derivative order must be >= 1");
    if (n > f.max_order) {
        throw Error(ErrorCode::insufficient_smoothness,
                    "payoff '" + f.label + "' has derivatives only up to order " + std::to_string(f.max_order));
    }
    const TimeGrid grid(t, n_steps);
    const auto& table = PartitionTable::shared();
    table.check_order(n);
    auto vals = parallel_map<double>(mc.paths, mc.workers, [&](std::size_t i) {
        const auto rec = simulate_path(coeffs, jm, x, n, grid, path_seed(mc.master_seed, i), {false});
        std::vector<double> outer(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) outer[static_cast<std::size_t>(k)] = f.derivative(k, rec.terminal.x());
        return faa_di_bruno_sum(table, n, outer, rec.terminal.values);
    });
    return summarize(vals);
}

/// (P_t f(x+h) - P_t f(x-h)) / 2h with common random numbers.
inline McEstimate finite_difference_oracle(const CoefficientSet& coeffs, const JumpModel& jm, const Payoff& f, double t,
                                           double x, double h, int n_steps, const McSettings& mc) {
    if (!(h > 0.0)) throw Error(ErrorCode::invalid_parameter, "finite-difference step must be > 0");
    const TimeGrid grid(t, n_steps);
    auto vals = parallel_map<double>(mc.paths, mc.workers, [&](std::size_t i) {
        const auto seed = path_seed(mc.master_seed, i);
        const auto up = simulate_path(coeffs, jm, x + h, 0, grid, seed, {false});
        const auto dn = simulate_path(coeffs, jm, x - h, 0, grid, seed, {false});
        return (f(up.terminal.x()) - f(dn.terminal.x())) / (2.0 * h);
    });
    return summarize(vals);
}

} // namespace jumpflow
