#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etaqfi {

enum class ErrorCode {
    dimension_mismatch,
    non_finite,
    singular,
    no_convergence,
    not_hermitian,
    near_defective,
    complex_spectrum,
    not_positive_definite,
    not_hermitian_result,
    not_normalized,
    eval_failure,
    tracking_lost,
    degenerate_extremes,
    at_exceptional_point,
    broken_phase,
    out_of_domain,
    invalid_model,
    invalid_argument,
    config_error,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::singular: return "Singular";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::not_hermitian: return "NotHermitian";
    case ErrorCode::near_defective: return "NearDefective";
    case ErrorCode::complex_spectrum: return "ComplexSpectrum";
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::not_hermitian_result: return "NotHermitianResult";
    case ErrorCode::not_normalized: return "NotNormalized";
    case ErrorCode::eval_failure: return "EvalFailure";
    case ErrorCode::tracking_lost: return "TrackingLost";
    case ErrorCode::degenerate_extremes: return "DegenerateExtremes";
    case ErrorCode::at_exceptional_point: return "AtExceptionalPoint";
    case ErrorCode::broken_phase: return "BrokenPhase";
    case ErrorCode::out_of_domain: return "OutOfDomain";
    case ErrorCode::invalid_model: return "InvalidModel";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::config_error: return "ConfigError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable code; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Phase errors mean "this θ has no positive-definite metric"; sweeps flag them instead of aborting.
constexpr bool is_phase_error(ErrorCode code) {
    return code == ErrorCode::at_exceptional_point || code == ErrorCode::broken_phase ||
           code == ErrorCode::complex_spectrum || code == ErrorCode::near_defective ||
           code == ErrorCode::not_positive_definite || code == ErrorCode::out_of_domain;
}

} // namespace etaqfi
