#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace jumpflow {

enum class ErrorCode {
    invalid_order,
    incomplete_state,
    insufficient_smoothness,
    invalid_parameter,
    unknown_family,
    numerical_failure,
    invalid_exponent,
    invalid_stats,
    invalid_norms,
    invalid_domination,
    blow_up,
    norms_unavailable,
    invalid_config,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_order: return "invalid-order";
    case ErrorCode::incomplete_state: return "incomplete-state";
    case ErrorCode::insufficient_smoothness: return "insufficient-smoothness";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::unknown_family: return "unknown-family";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::invalid_exponent: return "invalid-exponent";
    case ErrorCode::invalid_stats: return "invalid-stats";
    case ErrorCode::invalid_norms: return "invalid-norms";
    case ErrorCode::invalid_domination: return "invalid-domination";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::norms_unavailable: return "norms-unavailable";
    case ErrorCode::invalid_config: return "invalid-config";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised when a simulated state stops being finite. Carries enough to replay.
class BlowUpError : public Error {
public:
    BlowUpError(double t, std::vector<double> state, std::uint64_t seed, const std::string& what)
        : Error(ErrorCode::blow_up, what), t_(t), state_(std::move(state)), seed_(seed) {}

    double time() const noexcept { return t_; }
    const std::vector<double>& state() const noexcept { return state_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    double t_;
    std::vector<double> state_;
    std::uint64_t seed_;
};

// Quadrature produced a non-finite value.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, std::vector<double> nodes, std::vector<double> values)
        : Error(ErrorCode::numerical_failure, what), nodes_(std::move(nodes)), values_(std::move(values)) {}

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> nodes_;
    std::vector<double> values_;
};

} // namespace jumpflow
