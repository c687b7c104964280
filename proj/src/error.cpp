#include "levitan/error.hpp"

namespace levitan {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::malformed_band: return "MalformedBand";
    case ErrorCode::non_monotonic: return "NonMonotonic";
    case ErrorCode::empty_gap: return "EmptyGap";
    case ErrorCode::negative_ground: return "NegativeGround";
    case ErrorCode::growth_failure: return "GrowthFailure";
    case ErrorCode::branch_at_edge: return "BranchAtEdge";
    case ErrorCode::on_branch_cut: return "OnBranchCut";
    case ErrorCode::invalid_point: return "InvalidPoint";
    case ErrorCode::invalid_divisor: return "InvalidDivisor";
    case ErrorCode::degenerate_gap: return "DegenerateGap";
    case ErrorCode::step_too_large: return "StepTooLarge";
    case ErrorCode::window_too_short: return "WindowTooShort";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::too_close_to_gap: return "TooCloseToGap";
    case ErrorCode::quadrature_failure: return "QuadratureFailure";
    case ErrorCode::at_divisor_pole: return "AtDivisorPole";
    case ErrorCode::ambiguous_pole: return "AmbiguousPole";
    case ErrorCode::extrapolation_failure: return "ExtrapolationFailure";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::moment_violation: return "MomentViolation";
    case ErrorCode::invalid_perturbation: return "InvalidPerturbation";
    case ErrorCode::missing_artifact: return "MissingArtifact";
    case ErrorCode::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

} // namespace levitan
