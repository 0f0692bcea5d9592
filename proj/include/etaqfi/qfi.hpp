#pragma once

// Fisher information of evolved pure states: the flat (standard) QFI, the
// covariant QFI under a θ-dependent metric, the metric-rotation operator A,
// the three-term split of F^H, QFI bounds from the generator h and the
// probes saturating them.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "etaqfi/densela.hpp"
#include "etaqfi/geometry.hpp"
#include "etaqfi/pseudoherm.hpp"

namespace etaqfi {

enum SampleFlag : unsigned {
    flag_near_ep = 1u << 0,
    flag_tracking_degenerate = 1u << 1,
    flag_bound_small_t = 1u << 2,
    flag_broken_phase = 1u << 3,
    flag_failed = 1u << 4,
};

inline constexpr std::pair<SampleFlag, const char*> kFlagNames[] = {
    {flag_near_ep, "NearEP"},
    {flag_tracking_degenerate, "TrackingDegenerate"},
    {flag_bound_small_t, "BoundSmallT"},
    {flag_broken_phase, "BrokenPhase"},
    {flag_failed, "Failed"},
};

/// "NearEP|BoundSmallT"; empty when no flag is set.
inline std::string flags_to_string(unsigned flags) {
    std::string out;
    for (const auto& [flag, name] : kFlagNames) {
        if ((flags & flag) == 0) continue;
        if (!out.empty()) out += '|';
        out += name;
    }
    return out;
}

/// Flags excluding a point from duality/bound assertions (BoundSmallT is informational).
inline constexpr unsigned kExclusionFlags = flag_near_ep | flag_tracking_degenerate | flag_broken_phase | flag_failed;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kNearEpCondition = 1e10;
inline constexpr double kSmallTime = 0.01;

struct QfiSample {
    double theta = 0.0;
    double time = 0.0;
    double sqfi = kNaN;      // F^H, Hermitian side
    double sqfi_flat = kNaN; // naive flat-normalized SQFI of ψ^pH
    double cqfi = kNaN;
    double bound = kNaN;
    double term_rot = kNaN;   // 4‖(Aψ)⊥‖²_η
    double term_cross = kNaN; // 8Re⟨(Aψ)⊥|(Dψ)⊥⟩_η
    std::optional<double> k_diag;
    unsigned flags = 0;
    std::string error;

    bool unflagged() const { return (flags & kExclusionFlags) == 0; }

    /// |sqfi − (cqfi + term_rot + term_cross)|
    double closure_residual() const { return std::abs(sqfi - (cqfi + term_rot + term_cross)); }
};

enum class Normalization { flat, eta };

struct ProbeState {
    Ket amplitudes;
    Normalization normalization = Normalization::flat;
};

/// (I − P_ψ)v with P_ψv = ψ⟨ψ|η|v⟩.
inline Ket project_perp(const Ket& v, const Ket& psi, const Operator& eta) {
    return v - psi * inner(psi, eta, v);
}

inline Ket project_perp(const Ket& v, const Ket& psi) { return v - psi * inner(psi, v); }

inline double eta_norm_squared(const Ket& v, const Operator& eta) { return inner(v, eta, v).real(); }

/// ψ(θ)/‖ψ(θ)‖
inline StateCurve normalized_flat(const StateCurve& curve) {
    StateCurve out;
    out.value = [curve](double th) {
        const Ket p = curve(th);
        return p / Complex(norm(p));
    };
    if (curve.has_derivative()) {
        out.derivative = [curve](double th) {
            const Ket p = curve(th);
            const double n = norm(p);
            const Ket unit = p / Complex(n);
            const Ket d = curve.derivative(th);
            return (d - unit * Complex(inner(unit, d).real())) / Complex(n);
        };
    }
    return out;
}

/// ψ(θ)/√⟨ψ(θ)|η(θ)|ψ(θ)⟩
inline StateCurve normalized_eta(const StateCurve& curve, const OperatorCurve& eta_curve) {
    StateCurve out;
    out.value = [curve, eta_curve](double th) {
        const Ket p = curve(th);
        return p / Complex(std::sqrt(eta_norm_squared(p, eta_curve(th))));
    };
    if (curve.has_derivative() && eta_curve.has_derivative()) {
        out.derivative = [curve, eta_curve](double th) {
            const Ket p = curve(th);
            const Operator eta = eta_curve(th);
            const Ket d = curve.derivative(th);
            const double n2 = eta_norm_squared(p, eta);
            const double dn2 = 2.0 * inner(p, eta, d).real() + inner(p, eta_curve.derivative(th), p).real();
            const double n = std::sqrt(n2);
            return d / Complex(n) - p * Complex(0.5 * dn2 / (n2 * n));
        };
    }
    return out;
}

/// ψ(t) = exp(−iHt)·ψ0
inline Ket evolve(const Operator& h, const Ket& psi0, double t) {
    if (psi0.size() != h.dim()) throw Error(ErrorCode::dimension_mismatch, "state and Hamiltonian dimensions differ");
    if (t == 0.0) return psi0;
    return expm(-kImag * t * h) * psi0;
}

namespace detail {

// `renormalize` exists only so verification can inject a missing normalization.
inline double sqfi_impl(const StateCurve& curve, double theta, const FdScheme& scheme, bool renormalize) {
    const StateCurve c = renormalize ? normalized_flat(curve) : curve;
    const Ket psi = evaluate_at(c.value, theta);
    const Ket d = d_theta(c, theta, scheme);
    return 4.0 * norm_squared(project_perp(d, psi));
}

struct CovariantParts {
    Ket psi;    // η-normalized
    Ket d_perp; // (D_θψ)⊥
    Connection conn;
};

inline CovariantParts covariant_parts(const StateCurve& psi_curve, const OperatorCurve& eta_curve, double theta,
                                      const FdScheme& scheme, double connection_sign = 1.0) {
    const StateCurve c = normalized_eta(psi_curve, eta_curve);
    CovariantParts out;
    out.conn = connection_impl(eta_curve, theta, scheme, connection_sign);
    out.psi = evaluate_at(c.value, theta);
    const Ket d = d_theta(c, theta, scheme) + out.conn.gamma * out.psi;
    out.d_perp = project_perp(d, out.psi, out.conn.eta);
    return out;
}

} // namespace detail

/// F^H = 4‖∂_θψ⊥‖²; the curve is flat-normalized at every stencil point.
inline double sqfi(const StateCurve& psi_curve, double theta, const FdScheme& scheme = {}) {
    return detail::sqfi_impl(psi_curve, theta, scheme, true);
}

/// F_c = 4‖(D_θψ)⊥‖²_η; the curve is η(θ')-normalized at every stencil point.
inline double cqfi(const StateCurve& psi_curve, const OperatorCurve& eta_curve, double theta,
                   const FdScheme& scheme = {}) {
    const auto parts = detail::covariant_parts(psi_curve, eta_curve, theta, scheme);
    return 4.0 * eta_norm_squared(parts.d_perp, parts.conn.eta);
}

inline double metric_condition(const Operator& eta) {
    const auto he = eig_hermitian(eta);
    return he.values.front() / he.values.back();
}

/// A = ½U∂U† + ½η⁻¹U∂U†η
inline Operator operator_a(const Operator& u, const Operator& du, const Operator& eta) {
    const Operator x = u * du.adjoint();
    return 0.5 * (x + solve(eta, x * eta));
}

inline Operator operator_a(const OperatorCurve& eta_curve, const TrackedBasis& tracked, double theta,
                           const FdScheme& scheme = {}) {
    const auto [u, du] = basis_at(eta_curve, tracked, theta, scheme);
    return operator_a(u, du, detail::evaluate_at(eta_curve.value, theta));
}

/// S(θ') for the Hermitian side: the supplied similarity curve, else factor_metric(η(θ')).
inline OperatorCurve similarity_curve(const OperatorCurve& eta_curve, const OperatorCurve* similarity = nullptr) {
    if (similarity != nullptr) return *similarity;
    return {[eta_curve](double th) { return factor_metric(eta_curve(th)); }, nullptr};
}

/// ψ^H(θ') = S(θ')·ψ̂(θ') with ψ̂ η-normalized.
inline StateCurve hermitian_side_curve(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                                       const OperatorCurve& s_curve) {
    const StateCurve c = normalized_eta(psi_curve, eta_curve);
    return {[c, s_curve](double th) { return map_state(c(th), s_curve(th)); }, nullptr};
}

/// k with (Aψ)⊥ = −k(D_θψ)⊥ in the η inner product; absent when not collinear.
inline std::optional<double> antiparallel_k(const Ket& a_perp, const Ket& d_perp, const Operator& eta,
                                            double tolerance = 1e-6) {
    const double na = std::sqrt(eta_norm_squared(a_perp, eta));
    const double nd = std::sqrt(eta_norm_squared(d_perp, eta));
    if (na <= 1e-12 * std::max(1.0, nd)) return 0.0;
    if (nd == 0.0) return std::nullopt;
    const Complex c = inner(d_perp, eta, a_perp) / (nd * nd);
    const double off_line = std::sqrt(eta_norm_squared(a_perp - c * d_perp, eta)) / na;
    if (off_line > tolerance) return std::nullopt;
    if (std::abs(c.imag()) > tolerance * std::abs(c)) return std::nullopt;
    return -c.real();
}

struct IdentityCheck {
    double lhs = 0.0; // ‖∂_θψ^H⊥‖²
    double rhs = 0.0; // ‖(Aψ)⊥ + (Dψ)⊥‖²_η
    double residual = 0.0;
    double relative() const { return residual / std::max(std::abs(lhs), std::numeric_limits<double>::min()); }
};

namespace detail {

struct Decomposed {
    QfiSample sample;
    Ket a_perp;
    Ket d_perp;
    Operator eta;
};

inline Decomposed decompose(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                            const TrackedBasis& tracked, double theta, const FdScheme& scheme,
                            const OperatorCurve* similarity) {
    Decomposed out;
    QfiSample& s = out.sample;
    s.theta = theta;
    const auto parts = covariant_parts(psi_curve, eta_curve, theta, scheme);
    const Operator& eta = parts.conn.eta;
    if (metric_condition(eta) > kNearEpCondition) s.flags |= flag_near_ep;

    const Operator a = operator_a(eta_curve, tracked, theta, scheme);
    out.a_perp = project_perp(a * parts.psi, parts.psi, eta);
    out.d_perp = parts.d_perp;
    out.eta = eta;

    s.cqfi = 4.0 * eta_norm_squared(parts.d_perp, eta);
    s.term_rot = 4.0 * eta_norm_squared(out.a_perp, eta);
    s.term_cross = 8.0 * inner(out.a_perp, eta, parts.d_perp).real();
    s.sqfi = sqfi(hermitian_side_curve(psi_curve, eta_curve, similarity_curve(eta_curve, similarity)), theta, scheme);
    s.k_diag = antiparallel_k(out.a_perp, out.d_perp, eta);
    return out;
}

} // namespace detail

/// Both sides of ‖∂ψ^H⊥‖² = ‖(Aψ)⊥ + (Dψ)⊥‖²_η by independent paths.
inline IdentityCheck identity_residual(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                                       const TrackedBasis& tracked, double theta, const FdScheme& scheme = {},
                                       const OperatorCurve* similarity = nullptr) {
    const StateCurve psi_h = hermitian_side_curve(psi_curve, eta_curve, similarity_curve(eta_curve, similarity));
    const auto parts = detail::covariant_parts(psi_curve, eta_curve, theta, scheme);
    const Operator a = operator_a(eta_curve, tracked, theta, scheme);
    const Operator& eta = parts.conn.eta;
    const Ket a_perp = project_perp(a * parts.psi, parts.psi, eta);
    IdentityCheck out;
    out.lhs = 0.25 * sqfi(psi_h, theta, scheme);
    out.rhs = eta_norm_squared(a_perp + parts.d_perp, eta);
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

/// sqfi, cqfi, term_rot, term_cross and k_diag at θ.
inline QfiSample decompose_fh(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                              const TrackedBasis& tracked, double theta, const FdScheme& scheme = {},
                              const OperatorCurve* similarity = nullptr) {
    return detail::decompose(psi_curve, eta_curve, tracked, theta, scheme, similarity).sample;
}

struct Generator {
    Operator h;
    double asymmetry = 0.0; // ‖h − h†‖_F before symmetrization
    bool small_t = false;
};

/// h(θ) = i·V†·∂_θV with V = exp(−iH^H t); t ≤ 0.01 uses h = t·∂_θH^H.
inline Generator generator_h(const OperatorCurve& hh_curve, double theta, double t, const FdScheme& scheme = {}) {
    Generator g;
    if (std::abs(t) <= kSmallTime) {
        g.small_t = true;
        const Operator dh = d_theta(hh_curve, theta, scheme);
        g.asymmetry = hermiticity_defect(dh) * std::abs(t);
        g.h = hermitian_part(dh) * Complex(t);
        return g;
    }
    const OperatorCurve v{[&hh_curve, t](double th) { return expm(-kImag * t * hh_curve(th)); }, nullptr};
    const Operator h = kImag * (detail::evaluate_at(v.value, theta).adjoint() * d_theta_fd(v, theta, scheme));
    g.asymmetry = hermiticity_defect(h);
    g.h = hermitian_part(h);
    return g;
}

struct Bound {
    double value = 0.0; // (λ_max − λ_min)² of h
    Generator generator;
};

inline Bound qfi_bound(const OperatorCurve& hh_curve, double theta, double t, const FdScheme& scheme = {}) {
    Bound b;
    b.generator = generator_h(hh_curve, theta, t, scheme);
    const auto he = eig_hermitian(b.generator.h);
    const double width = he.values.front() - he.values.back();
    b.value = width * width;
    return b;
}

inline constexpr double kDegenerateExtremes = 1e-10;

/// S⁻¹[|λ_max⟩ + e^{iφ}|λ_min⟩]/√2, η-normalized.
inline ProbeState optimal_probe(const Operator& h, const Operator& s, double phase = 0.0) {
    if (h.dim() != s.dim()) throw Error(ErrorCode::dimension_mismatch, "h and S dimensions differ");
    const auto he = eig_hermitian(h);
    if (he.values.front() - he.values.back() < kDegenerateExtremes) {
        throw Error(ErrorCode::degenerate_extremes, "extremal eigenvalues of h coincide");
    }
    const Ket x = (he.basis.column(0) + std::exp(kImag * phase) * he.basis.column(h.dim() - 1)) /
                  Complex(std::sqrt(2.0));
    return {solve(s, x), Normalization::eta};
}

/// k from the curve-level decomposition; when 0 < k < 1 it must also satisfy
/// cqfi = sqfi/(1−k)² to 1e-6 relative, otherwise the result is absent.
inline std::optional<double> antiparallel_diagnostic(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                                                     const TrackedBasis& tracked, double theta,
                                                     const FdScheme& scheme = {},
                                                     const OperatorCurve* similarity = nullptr) {
    const auto d = detail::decompose(psi_curve, eta_curve, tracked, theta, scheme, similarity);
    const auto k = d.sample.k_diag;
    if (k && *k > 0.0 && *k < 1.0) {
        const double predicted = d.sample.sqfi / ((1.0 - *k) * (1.0 - *k));
        if (std::abs(predicted - d.sample.cqfi) > 1e-6 * std::max(std::abs(d.sample.cqfi), 1e-300)) return std::nullopt;
    }
    return k;
}

} // namespace etaqfi
