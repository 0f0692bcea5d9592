#pragma once

// A two-level family whose metric eigenbasis rotates with θ, so the
// metric-rotation operator A is nonzero:
//   R(θ) = rotation by θ,  η(θ) = R·diag[1,2]·Rᵀ,  S(θ) = √diag[1,2]·Rᵀ,
//   H^H(θ) = θσ_z + σ_x,   H^pH(θ) = S⁻¹·H^H·S.
// Keep θ inside (−π/4, π/4); at ±π/4 the dominant eigenvector component switches.

#include <cmath>

#include "etaqfi/geometry.hpp"

namespace etaqfi::fixtures {

struct RotatingMetric {
    static Operator rotation(double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        return Operator{{c, -s}, {s, c}};
    }
    static Operator d_rotation(double theta) {
        const double c = std::cos(theta), s = std::sin(theta);
        return Operator{{-s, -c}, {c, -s}};
    }
    static Operator eta(double theta) {
        const Operator r = rotation(theta);
        return r * Operator::diagonal({1.0, 2.0}) * r.adjoint();
    }
    static Operator d_eta(double theta) {
        const Operator r = rotation(theta), dr = d_rotation(theta);
        const Operator d = Operator::diagonal({1.0, 2.0});
        return dr * d * r.adjoint() + r * d * dr.adjoint();
    }
    static Operator similarity(double theta) {
        return Operator::diagonal({1.0, std::sqrt(2.0)}) * rotation(theta).adjoint();
    }
    static Operator hermitian_hamiltonian(double theta) {
        return Operator{{theta, 1.0}, {1.0, -theta}};
    }
    static Operator hamiltonian(double theta) {
        const Operator s = similarity(theta);
        return inverse(s) * hermitian_hamiltonian(theta) * s;
    }

    static OperatorCurve eta_curve(bool analytic = true) {
        return {[](double th) { return eta(th); }, analytic ? std::function<Operator(double)>(d_eta) : nullptr};
    }

    /// ψ(θ) = exp(−iH^pH(θ)t)·ψ0, not normalized.
    static StateCurve state_curve(double t, Ket psi0) {
        return {[t, psi0](double th) { return expm(-kImag * t * hamiltonian(th)) * psi0; }, nullptr};
    }
};

} // namespace etaqfi::fixtures
