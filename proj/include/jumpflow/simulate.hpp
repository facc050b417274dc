#pragma once

// Euler scheme for (X, X^(1), ..., X^(n)) with exact insertion of thinned
// jump times. All orders share one Brownian increment per sub-step; jumps act
// on the left limit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/rng.hpp"
#include "jumpflow/variational.hpp"

namespace jumpflow {

/// Uniform grid on [0, T].
struct TimeGrid {
    double T = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::invalid_parameter, "horizon must be > 0");
        if (steps < 1) throw Error(ErrorCode::invalid_parameter, "n_steps must be >= 1");
    }

    double dt() const noexcept { return T / n_steps; }
    double time(int i) const noexcept { return i == n_steps ? T : T * i / n_steps; }
};

struct JumpEvent {
    double time = 0.0;
    double mark = 0.0;

    friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

/// Jump times of N on [0, T] by thinning a Poisson(dominating) proposal
/// stream; each accepted time gets an independent mark from the size law.
inline std::vector<JumpEvent> sample_jump_times(const JumpModel& jm, const TimeGrid& grid, PathRng& rng) {
    std::vector<JumpEvent> out;
    const double bar = jm.dominating();
    if (bar == 0.0) {
        for (int i = 0; i <= grid.n_steps; ++i) {
            if (jm.intensity(grid.time(i)) > 0.0) {
                throw Error(ErrorCode::invalid_domination, "positive intensity with zero dominating rate");
            }
        }
        return out;
    }
    double t = 0.0;
    while (true) {
        t += rng.exponential(bar);
        if (t > grid.T) break;
        const double u = rng.uniform();
        const double l = jm.intensity(t);
        if (l > bar * (1.0 + 1e-12) || !(l >= 0.0)) {
            throw Error(ErrorCode::invalid_domination,
                        "intensity " + std::to_string(l) + " at t=" + std::to_string(t) + " exceeds dominating rate");
        }
        if (u * bar < l) out.push_back({t, jm.law().sample(rng)});
    }
    return out;
}

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

[[noreturn]] inline void throw_blow_up(double t, std::span<const double> v, std::uint64_t seed) {
    throw BlowUpError(t, std::vector<double>(v.begin(), v.end()), seed,
                      "non-finite flow state at t=" + std::to_string(t) + " (seed " + std::to_string(seed) + ")");
}

} // namespace detail

/// One explicit Euler step of every order:
///   X^(k) += (drift_k - lambda(t) E_mu[jump_k]) dt + diffusion_k dW.
inline FlowState euler_step(const FlowState& state, double t, double dt, double dW, const CoefficientSet& coeffs,
                            const JumpModel& jm) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_parameter, "step must be > 0");
    if (!detail::all_finite(state.values)) detail::throw_blow_up(t, state.values, 0);
    VariationalEvaluator eval(coeffs, jm, state.order());
    const auto n = state.values.size();
    std::vector<double> drift(n), diff(n);
    eval.continuous(t, state.values, drift, diff);
    FlowState next = state;
    for (std::size_t k = 0; k < n; ++k) next.values[k] += drift[k] * dt + diff[k] * dW;
    if (!detail::all_finite(next.values)) detail::throw_blow_up(t + dt, next.values, 0);
    return next;
}

/// X^(k) += jump_k(y), every order evaluated at the pre-jump state.
inline FlowState apply_jump(const FlowState& state, double t, double y, const CoefficientSet& coeffs) {
    const auto jm = JumpModel::none();
    VariationalEvaluator eval(coeffs, jm, state.order());
    std::vector<double> dj(state.values.size());
    eval.jump(t, y, state.values, dj);
    FlowState next = state;
    for (std::size_t k = 0; k < dj.size(); ++k) next.values[k] += dj[k];
    return next;
}

struct RecordedState {
    double t = 0.0;
    bool is_jump = false;
    std::vector<double> values;

    friend bool operator==(const RecordedState&, const RecordedState&) = default;
};

struct PathRecord {
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::vector<RecordedState> states;   // empty unless recording was requested
    std::vector<double> running_sup;     // per order, sup of |X^(k)| incl. left limits
    std::vector<JumpEvent> jumps;
    FlowState terminal;
    double brownian_terminal = 0.0;      // W_T

    friend bool operator==(const PathRecord& a, const PathRecord& b) {
        return a.seed == b.seed && a.states == b.states && a.running_sup == b.running_sup && a.jumps == b.jumps &&
               a.terminal == b.terminal && a.brownian_terminal == b.brownian_terminal;
    }
};

struct SimulationOptions {
    bool record_states = true;
};

/// Simulates one path of the flow and its first n derivatives.
/// Deterministic in (inputs, seed).
inline PathRecord simulate_path(const CoefficientSet& coeffs, const JumpModel& jm, double x, int n,
                                const TimeGrid& grid, std::uint64_t seed, SimulationOptions opts = {},
                                const FlowState* initial = nullptr) {
    if (n > coeffs.n_max) {
        throw Error(ErrorCode::insufficient_smoothness,
                    "order " + std::to_string(n) + " exceeds coefficient smoothness " + std::to_string(coeffs.n_max));
    }
    PathRng rng(seed);
    VariationalEvaluator eval(coeffs, jm, n);

    PathRecord rec;
    rec.grid = grid;
    rec.seed = seed;
    rec.terminal = initial ? *initial : FlowState::initial(x, n);
    if (rec.terminal.order() != n) throw Error(ErrorCode::incomplete_state, "initial state has the wrong order");
    rec.jumps = sample_jump_times(jm, grid, rng);

    auto& v = rec.terminal.values;
    const auto sz = v.size();
    std::vector<double> drift(sz), diff(sz), dj(sz);
    rec.running_sup.assign(sz, 0.0);
    auto update_sup = [&] {
        for (std::size_t k = 0; k < sz; ++k) rec.running_sup[k] = std::max(rec.running_sup[k], std::abs(v[k]));
    };
    auto record = [&](double t, bool is_jump) {
        if (opts.record_states) rec.states.push_back({t, is_jump, v});
    };
    auto step = [&](double t, double h) {
        const double dW = std::sqrt(h) * rng.normal();
        rec.brownian_terminal += dW;
        eval.continuous(t, v, drift, diff);
        for (std::size_t k = 0; k < sz; ++k) v[k] += drift[k] * h + diff[k] * dW;
        if (!detail::all_finite(v)) detail::throw_blow_up(t + h, v, seed);
    };

    double t = 0.0;
    update_sup();
    record(0.0, false);
    std::size_t j = 0;
    for (int i = 0; i < grid.n_steps; ++i) {
        const double t_end = grid.time(i + 1);
        while (j < rec.jumps.size() && rec.jumps[j].time <= t_end) {
            const double tau = rec.jumps[j].time;
            if (tau > t) step(t, tau - t);
            t = tau;
            update_sup();  // left limit
            eval.jump(t, rec.jumps[j].mark, v, dj);
            for (std::size_t k = 0; k < sz; ++k) v[k] += dj[k];
            if (!detail::all_finite(v)) detail::throw_blow_up(t, v, seed);
            update_sup();
            record(t, true);
            ++j;
        }
        if (t_end > t) step(t, t_end - t);
        t = t_end;
        update_sup();
        record(t, false);
    }
    return rec;
}

/// Path dump, one row per (recorded time, order).
inline void write_paths_csv(std::ostream& os, std::span<const PathRecord> paths) {
    os << "path_index,t,k,value,is_jump\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (const auto& s : paths[p].states) {
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                os << p << ',' << s.t << ',' << k << ',' << s.values[k] << ',' << (s.is_jump ? 1 : 0) << '\n';
            }
        }
    }
}

} // namespace jumpflow
