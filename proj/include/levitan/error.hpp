#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace levitan {

enum class ErrorCode {
    malformed_band,
    non_monotonic,
    empty_gap,
    negative_ground,
    growth_failure,
    branch_at_edge,
    on_branch_cut,
    invalid_point,
    invalid_divisor,
    degenerate_gap,
    step_too_large,
    window_too_short,
    out_of_range,
    too_close_to_gap,
    quadrature_failure,
    at_divisor_pole,
    ambiguous_pole,
    extrapolation_failure,
    no_convergence,
    moment_violation,
    invalid_perturbation,
    missing_artifact,
    invalid_config,
};

/// Stable machine-readable name, e.g. "NonMonotonic".
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace levitan
