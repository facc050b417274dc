#pragma once

// Coefficients of the variational system for (X, X^(1), ..., X^(n)).
//
// The order-k coefficient is the Faa di Bruno sum over Pi[k] of the |pi|-th
// x-partial of r (resp. sigma, g) times prod_B X^(|B|). Order 0 is the
// coefficient itself.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jumpflow/error.hpp"
#include "jumpflow/model.hpp"
#include "jumpflow/partitions.hpp"

namespace jumpflow {

/// (X, X^(1), ..., X^(n)) at one time point.
struct FlowState {
    std::vector<double> values;

    int order() const noexcept { return static_cast<int>(values.size()) - 1; }
    double x() const noexcept { return values[0]; }
    double operator[](std::size_t k) const noexcept { return values[k]; }

    /// (x, 1, 0, ..., 0).
    static FlowState initial(double x, int n) {
        if (n < 0) throw Error(ErrorCode::invalid_order, "flow order must be >= 0");
        FlowState s;
        s.values.assign(static_cast<std::size_t>(n) + 1, 0.0);
        s.values[0] = x;
        if (n >= 1) s.values[1] = 1.0;
        return s;
    }

    friend bool operator==(const FlowState&, const FlowState&) = default;
};

struct VariationalTerms {
    double drift = 0.0;
    double diffusion = 0.0;
    std::optional<double> jump;  // present when a mark was given
};

namespace detail {

/// Faa di Bruno sum for order k with outer partials `outer` and inner values
/// `inner` = (X, X^(1), ...). Order 0 returns outer[0].
inline double variational_sum(const PartitionTable& table, int k, std::span<const double> outer,
                              std::span<const double> inner) {
    if (k == 0) return outer[0];
    return faa_di_bruno_sum(table, k, outer, inner);
}

} // namespace detail

/// Order-k drift, diffusion and (per mark y) jump coefficients at `state`.
inline VariationalTerms assemble_variational_coefficients(int k, const CoefficientSet& coeffs, const FlowState& state,
                                                          double t, std::optional<double> y = std::nullopt,
                                                          const PartitionTable& table = PartitionTable::shared()) {
    if (k < 0) throw Error(ErrorCode::invalid_order, "order must be >= 0");
    if (k > coeffs.n_max) {
        throw Error(ErrorCode::insufficient_smoothness,
                    "order " + std::to_string(k) + " exceeds coefficient smoothness " + std::to_string(coeffs.n_max));
    }
    if (state.order() < k) {
        throw Error(ErrorCode::incomplete_state,
                    "state carries derivatives up to " + std::to_string(state.order()) + ", need " + std::to_string(k));
    }
    if (k > 0) table.check_order(k);
    std::vector<double> buf(static_cast<std::size_t>(k) + 1);
    const double x = state.x();
    VariationalTerms out;
    coeffs.drift(t, x, buf);
    out.drift = detail::variational_sum(table, k, buf, state.values);
    coeffs.diffusion(t, x, buf);
    out.diffusion = detail::variational_sum(table, k, buf, state.values);
    if (y) {
        if (coeffs.has_jump) {
            coeffs.jump(t, x, *y, buf);
            out.jump = detail::variational_sum(table, k, buf, state.values);
        } else {
            out.jump = 0.0;
        }
    }
    return out;
}

/// Reusable buffers for stepping every order at once. Holds a reference to the
/// model; not shareable between threads.
class VariationalEvaluator {
public:
    VariationalEvaluator(const CoefficientSet& coeffs, const JumpModel& jm, int n,
                         const PartitionTable& table = PartitionTable::shared())
        : coeffs_(coeffs), jm_(jm), table_(table), n_(n) {
        if (n < 0) throw Error(ErrorCode::invalid_order, "order must be >= 0");
        if (n > coeffs.n_max) {
            throw Error(ErrorCode::insufficient_smoothness,
                        "order " + std::to_string(n) + " exceeds coefficient smoothness " + std::to_string(coeffs.n_max));
        }
        if (n > 0) table.check_order(n);
        const auto sz = static_cast<std::size_t>(n) + 1;
        dr_.resize(sz);
        ds_.resize(sz);
        dg_.resize(sz);
        mean_.resize(sz);
        compensated_ = coeffs.has_jump && !jm.inactive();
        if (compensated_ && coeffs.jump_factor) phi_mean_ = jm.law().expectation(coeffs.jump_factor->phi);
    }

    int order() const noexcept { return n_; }

    /// drift[k], diffusion[k] for k = 0..n, with the compensator
    /// lambda(t) E_mu[jump_k] already subtracted from the drift.
    void continuous(double t, std::span<const double> state, std::span<double> drift, std::span<double> diffusion) {
        const double x = state[0];
        coeffs_.drift(t, x, dr_);
        coeffs_.diffusion(t, x, ds_);
        const double lambda = compensated_ ? jm_.intensity(t) : 0.0;
        if (lambda != 0.0) jump_means(t, x);
        for (int k = 0; k <= n_; ++k) {
            const auto i = static_cast<std::size_t>(k);
            drift[i] = detail::variational_sum(table_, k, dr_, state);
            diffusion[i] = detail::variational_sum(table_, k, ds_, state);
            if (lambda != 0.0) drift[i] -= lambda * detail::variational_sum(table_, k, mean_, state);
        }
    }

    /// jump[k] for k = 0..n at mark y, evaluated at the given (pre-jump) state.
    void jump(double t, double y, std::span<const double> state, std::span<double> out) {
        if (!coeffs_.has_jump) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        coeffs_.jump(t, state[0], y, dg_);
        for (int k = 0; k <= n_; ++k) out[static_cast<std::size_t>(k)] = detail::variational_sum(table_, k, dg_, state);
    }

private:
    // mean_[j] = E_mu[d^j g/dx^j (t, x, y)]
    void jump_means(double t, double x) {
        if (coeffs_.jump_factor) {
            coeffs_.jump_factor->h(t, x, mean_);
            for (auto& v : mean_) v *= phi_mean_;
            return;
        }
        std::fill(mean_.begin(), mean_.end(), 0.0);
        const auto& rule = jm_.law().rule();
        for (std::size_t i = 0; i < rule.size(); ++i) {
            coeffs_.jump(t, x, rule.nodes[i], dg_);
            for (std::size_t j = 0; j < mean_.size(); ++j) mean_[j] += rule.weights[i] * dg_[j];
        }
    }

    const CoefficientSet& coeffs_;
    const JumpModel& jm_;
    const PartitionTable& table_;
    int n_;
    bool compensated_ = false;
    double phi_mean_ = 0.0;
    std::vector<double> dr_, ds_, dg_, mean_;
};

} // namespace jumpflow
