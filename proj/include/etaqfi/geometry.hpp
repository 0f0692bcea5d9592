#pragma once

// Parameter-space geometry: finite differences along θ, the metric
// connection Γ = ½η⁻¹∂η, covariant derivatives and gauge-fixed tracking of
// the metric eigenbasis U(θ).

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "etaqfi/densela.hpp"

namespace etaqfi {

struct FdScheme {
    int order = 2;
    double step = 1e-6;
    bool richardson = false;

    /// Absolute step used at θ: step·max(1, |θ|).
    double step_at(double theta) const { return step * std::max(1.0, std::abs(theta)); }

    void validate() const {
        if (order != 2 && order != 4) {
            throw Error(ErrorCode::invalid_argument, "finite-difference order must be 2 or 4");
        }
        if (!(step > 1e-12) || !std::isfinite(step)) {
            throw Error(ErrorCode::invalid_argument, "finite-difference step must exceed 1e-12");
        }
    }

    friend bool operator==(const FdScheme&, const FdScheme&) = default;
};

/// θ ↦ T with an optional analytic derivative.
template <class T>
struct ParamCurve {
    std::function<T(double)> value;
    std::function<T(double)> derivative;

    T operator()(double theta) const { return value(theta); }
    bool has_derivative() const { return static_cast<bool>(derivative); }
};

using OperatorCurve = ParamCurve<Operator>;
using StateCurve = ParamCurve<Ket>;
using ScalarCurve = ParamCurve<double>;

template <class T>
ParamCurve<T> constant_curve(T value) {
    return {[value](double) { return value; }, nullptr};
}

namespace detail {

inline double scaled(double x, double c) { return x * c; }
inline Ket scaled(const Ket& x, double c) { return x * Complex(c); }
inline Operator scaled(const Operator& x, double c) { return x * Complex(c); }

template <class T>
T evaluate_at(const std::function<T(double)>& f, double theta) {
    try {
        return f(theta);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::tracking_lost) throw;
        throw Error(ErrorCode::eval_failure, "at θ = " + std::to_string(theta) + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::eval_failure, "at θ = " + std::to_string(theta) + ": " + e.what());
    }
}

template <class T>
T central_difference(const std::function<T(double)>& f, double theta, double h, int order) {
    const T fp = evaluate_at(f, theta + h);
    const T fm = evaluate_at(f, theta - h);
    if (order == 2) return scaled(fp - fm, 0.5 / h);
    const T f2p = evaluate_at(f, theta + 2.0 * h);
    const T f2m = evaluate_at(f, theta - 2.0 * h);
    return scaled((f2m - f2p) + scaled(fp - fm, 8.0), 1.0 / (12.0 * h));
}

} // namespace detail

/// Finite-difference derivative, ignoring any analytic derivative.
template <class T>
T d_theta_fd(const ParamCurve<T>& curve, double theta, const FdScheme& scheme) {
    scheme.validate();
    const double h = scheme.step_at(theta);
    const T coarse = detail::central_difference(curve.value, theta, h, scheme.order);
    if (!scheme.richardson) return coarse;
    const T fine = detail::central_difference(curve.value, theta, 0.5 * h, scheme.order);
    const double gain = scheme.order == 2 ? 4.0 : 16.0;
    return detail::scaled(detail::scaled(fine, gain) - coarse, 1.0 / (gain - 1.0));
}

/// ∂_θ of the curve: analytic when available, central differences otherwise.
template <class T>
T d_theta(const ParamCurve<T>& curve, double theta, const FdScheme& scheme) {
    if (curve.has_derivative()) return detail::evaluate_at(curve.derivative, theta);
    return d_theta_fd(curve, theta, scheme);
}

inline bool is_positive_definite(const Operator& eta) {
    if (!is_hermitian(eta, 1e-10)) return false;
    const auto he = eig_hermitian(eta);
    return he.values.back() > 0.0;
}

struct Connection {
    Operator gamma;                      // ½η⁻¹∂η
    Operator eta;                        // η(θ)
    Operator d_eta;                      // ∂η(θ)
    double compatibility_residual = 0.0; // ‖∂η − ηΓ − Γ†η‖_F
};

namespace detail {

// `sign` exists only so verification can inject a wrong connection.
inline Connection connection_impl(const OperatorCurve& eta_curve, double theta, const FdScheme& scheme,
                                  double sign) {
    Connection c;
    c.eta = evaluate_at(eta_curve.value, theta);
    if (!is_positive_definite(c.eta)) {
        throw Error(ErrorCode::not_positive_definite, "metric at θ = " + std::to_string(theta));
    }
    c.d_eta = d_theta(eta_curve, theta, scheme);
    c.gamma = solve(c.eta, c.d_eta) * Complex(0.5 * sign);
    c.compatibility_residual = norm_fro(c.d_eta - c.eta * c.gamma - c.gamma.adjoint() * c.eta);
    return c;
}

} // namespace detail

inline Connection connection(const OperatorCurve& eta_curve, double theta, const FdScheme& scheme = {}) {
    return detail::connection_impl(eta_curve, theta, scheme, 1.0);
}

struct CovariantDerivative {
    Ket value; // D_θψ = ∂_θψ + Γψ
    Ket psi;
    Ket d_psi;
    Connection conn;
    double norm_residual = 0.0; // |∂⟨ψ|ψ⟩_η − 2Re⟨D_θψ|ψ⟩_η|
};

inline constexpr double kNormalizationTolerance = 1e-8;

/// Requires ψ(θ) to be η(θ)-normalized.
inline CovariantDerivative covariant_derivative(const StateCurve& psi_curve, const OperatorCurve& eta_curve,
                                                double theta, const FdScheme& scheme = {}) {
    CovariantDerivative out;
    out.conn = connection(eta_curve, theta, scheme);
    out.psi = detail::evaluate_at(psi_curve.value, theta);
    const double n = inner(out.psi, out.conn.eta, out.psi).real();
    if (std::abs(n - 1.0) > kNormalizationTolerance) {
        throw Error(ErrorCode::not_normalized, "⟨ψ|η|ψ⟩ = " + std::to_string(n));
    }
    out.d_psi = d_theta(psi_curve, theta, scheme);
    out.value = out.d_psi + out.conn.gamma * out.psi;

    const ScalarCurve eta_norm{[&](double th) {
                                   const Ket p = psi_curve(th);
                                   return inner(p, eta_curve(th), p).real();
                               },
                               nullptr};
    const double d_norm = d_theta_fd(eta_norm, theta, scheme);
    out.norm_residual = std::abs(d_norm - 2.0 * inner(out.value, out.conn.eta, out.psi).real());
    return out;
}

// ---------------------------------------------------------------------------
// eigenbasis tracking

inline constexpr double kTrackingAmbiguity = 1e-3;
inline constexpr double kDegenerateMetricGap = 1e-8;
inline constexpr double kScalarMetricSpread = 1e-12;

struct BasisPoint {
    Operator u;
    std::vector<double> lambda;
    bool scalar = false; // η ∝ I, U fixed to the identity
};

/// Eigenbasis of η with columns matched to `reference` by maximal overlap and
/// each column's largest-magnitude component made real positive.
inline BasisPoint gauge_fixed_basis(const Operator& eta, const Operator* reference = nullptr) {
    const auto he = eig_hermitian(eta);
    const std::size_t n = eta.dim();
    BasisPoint bp;
    const double top = std::abs(he.values.front());
    if (he.values.front() - he.values.back() <= kScalarMetricSpread * top) {
        bp.u = Operator::identity(n);
        bp.lambda = he.values;
        bp.scalar = true;
        return bp;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (he.values[i - 1] - he.values[i] < kDegenerateMetricGap * top) {
            throw Error(ErrorCode::tracking_lost, "degenerate metric eigenvalues, ∂U undefined");
        }
    }
    if (reference == nullptr) {
        bp.u = he.basis;
        bp.lambda = he.values;
        return bp;
    }
    if (reference->dim() != n) throw Error(ErrorCode::dimension_mismatch, "reference basis");

    bp.u = Operator(n);
    bp.lambda.assign(n, 0.0);
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Ket ref = reference->column(i);
        std::size_t best = 0;
        double first = -1.0, second = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ov = std::abs(inner(ref, he.basis.column(j)));
            if (ov > first) {
                second = first;
                first = ov;
                best = j;
            } else if (ov > second) {
                second = ov;
            }
        }
        if (first - second < kTrackingAmbiguity || used[best]) {
            throw Error(ErrorCode::tracking_lost, "ambiguous eigenvector overlap (" + std::to_string(first) + " vs " +
                                                      std::to_string(second) + ")");
        }
        used[best] = true;
        bp.u.set_column(i, he.basis.column(best));
        bp.lambda[i] = he.values[best];
    }
    return bp;
}

/// ∂_θU at θ by central differences of the gauge-fixed family matched to `reference`.
inline Operator basis_derivative(const OperatorCurve& eta_curve, double theta, const Operator& reference,
                                 const FdScheme& scheme) {
    const OperatorCurve u_curve{[&](double th) { return gauge_fixed_basis(eta_curve(th), &reference).u; }, nullptr};
    return d_theta_fd(u_curve, theta, scheme);
}

struct TrackedBasis {
    std::vector<double> grid;
    std::vector<Operator> bases;
    std::vector<Operator> derivative;
    std::vector<std::vector<double>> lambda;

    /// Index of the grid point equal to θ (relative 1e-12), if any.
    std::optional<std::size_t> locate(double theta) const {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::abs(grid[i] - theta) <= 1e-12 * std::max(1.0, std::abs(theta))) return i;
        }
        return std::nullopt;
    }

    std::size_t nearest(double theta) const {
        if (grid.empty()) throw Error(ErrorCode::invalid_argument, "empty tracked basis");
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (std::abs(grid[i] - theta) < std::abs(grid[best] - theta)) best = i;
        return best;
    }
};

inline TrackedBasis track_eigenbasis(const OperatorCurve& eta_curve, const std::vector<double>& grid,
                                     const FdScheme& scheme = {}) {
    if (grid.empty()) throw Error(ErrorCode::invalid_argument, "tracking grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::invalid_argument, "tracking grid must be ascending");
    }
    TrackedBasis tb;
    tb.grid = grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Operator eta = detail::evaluate_at(eta_curve.value, grid[i]);
        BasisPoint bp = gauge_fixed_basis(eta, i == 0 ? nullptr : &tb.bases.back());
        if (i > 0 && (tb.bases.back().adjoint() * bp.u).trace().real() <= 0.0) {
            throw Error(ErrorCode::tracking_lost, "eigenbasis continuity lost at θ = " + std::to_string(grid[i]));
        }
        if (bp.scalar) {
            tb.derivative.push_back(Operator(eta.dim()));
        } else {
            tb.derivative.push_back(basis_derivative(eta_curve, grid[i], bp.u, scheme));
        }
        tb.bases.push_back(std::move(bp.u));
        tb.lambda.push_back(std::move(bp.lambda));
    }
    return tb;
}

/// U(θ) and ∂_θU(θ), taken from the tracked grid when θ is a grid point.
inline std::pair<Operator, Operator> basis_at(const OperatorCurve& eta_curve, const TrackedBasis& tracked,
                                              double theta, const FdScheme& scheme = {}) {
    if (const auto i = tracked.locate(theta)) return {tracked.bases[*i], tracked.derivative[*i]};
    const Operator& ref = tracked.bases[tracked.nearest(theta)];
    BasisPoint bp = gauge_fixed_basis(detail::evaluate_at(eta_curve.value, theta), &ref);
    if (bp.scalar) return {bp.u, Operator(bp.u.dim())};
    Operator du = basis_derivative(eta_curve, theta, bp.u, scheme);
    return {std::move(bp.u), std::move(du)};
}

} // namespace etaqfi
