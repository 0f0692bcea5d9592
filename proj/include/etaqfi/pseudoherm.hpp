#pragma once

// Metric construction for pseudo-Hermitian Hamiltonians: biorthogonal
// eigensystems, η = Σ|φ_i⟩⟨φ_i|, its factorization η = S†S, and the
// Hermitian counterpart S·H·S⁻¹.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etaqfi/densela.hpp"

namespace etaqfi {

/// Normalization convention fixing the free overall scale of a constructed metric.
enum class Gauge {
    entry11,     ///< η₁₁ = 1
    closed_form, ///< a model-supplied η is used verbatim
    raw,         ///< unit right eigenvectors, biorthonormal lefts, no rescale
};

constexpr std::string_view to_string(Gauge g) {
    switch (g) {
    case Gauge::entry11: return "entry11";
    case Gauge::closed_form: return "closed-form";
    case Gauge::raw: return "raw";
    }
    return "raw";
}

inline Gauge parse_gauge(std::string_view name) {
    if (name == "entry11") return Gauge::entry11;
    if (name == "closed-form") return Gauge::closed_form;
    if (name == "raw") return Gauge::raw;
    throw Error(ErrorCode::config_error, "unknown gauge '" + std::string(name) + "'");
}

inline constexpr double kRealSpectrumTolerance = 1e-8;
inline constexpr double kClusterGap = 1e-8;

struct BiorthogonalSystem {
    Operator hamiltonian;
    std::vector<Complex> values; // imaginary parts below tolerance are zeroed
    Operator right;              // columns |ψ_i⟩, unit flat norm
    Operator left;               // columns |φ_i⟩, ⟨φ_i|ψ_j⟩ = δ_ij
    double vector_condition = 1.0;
    bool hermitian_input = false;
};

struct MetricBundle {
    Operator eta;
    Operator basis;             // U, η = U·diag(Λ)·U†
    std::vector<double> lambda; // descending
    Operator s;                 // η = S†S
    double residual_ph = 0.0;   // normalized ‖H†η − ηH‖
    bool posdef = false;
    Gauge gauge = Gauge::raw;
    double vector_condition = 1.0;
    double congruence_factor = 1.0;   // closed-form gauge: η_ref ≈ factor·η_generic
    double congruence_residual = 0.0; // ‖factor·η_generic − η_ref‖ / ‖η_ref‖

    double metric_condition() const { return lambda.front() / lambda.back(); }
};

namespace detail {

// Orthonormalizes the columns [begin, end) of p in place (modified Gram–Schmidt).
inline void orthonormalize_cluster(Operator& p, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
        Ket v = p.column(j);
        const double before = norm(v);
        for (std::size_t i = begin; i < j; ++i) {
            const Ket u = p.column(i);
            v -= inner(u, v) * u;
        }
        const double after = norm(v);
        if (after < 1e-8 * before) {
            throw Error(ErrorCode::near_defective, "degenerate cluster has dependent eigenvectors");
        }
        v /= after;
        fix_phase(v);
        p.set_column(j, v);
    }
}

} // namespace detail

/// ‖H†η − ηH‖_F / (‖η‖_F·‖H‖_F)
inline double check_pseudo_hermiticity(const Operator& h, const Operator& eta) {
    if (h.dim() != eta.dim()) throw Error(ErrorCode::dimension_mismatch, "H and η dimensions differ");
    const double denom = norm_fro(eta) * norm_fro(h);
    if (denom == 0.0) return 0.0;
    return norm_fro(h.adjoint() * eta - eta * h) / denom;
}

inline BiorthogonalSystem biorthogonal_system(const Operator& h) {
    const std::size_t n = h.dim();
    const double hnorm = norm_fro(h);
    BiorthogonalSystem b;
    b.hamiltonian = h;

    if (hermiticity_defect(h) <= 1e-14 * std::max(hnorm, std::numeric_limits<double>::min())) {
        const auto he = eig_hermitian(h);
        b.hermitian_input = true;
        b.values.assign(he.values.begin(), he.values.end());
        b.right = he.basis;
        b.left = he.basis;
        b.vector_condition = static_cast<double>(n);
        return b;
    }

    const auto es = eig_general(h);
    if (es.near_defective) {
        throw Error(ErrorCode::near_defective,
                    "eigenvector condition " + std::to_string(es.vector_condition) + " (exceptional point?)");
    }
    b.values = es.values;
    for (auto& v : b.values) {
        if (std::abs(v.imag()) > kRealSpectrumTolerance * hnorm) {
            throw Error(ErrorCode::complex_spectrum, "eigenvalue with imaginary part " + std::to_string(v.imag()));
        }
        v = v.real();
    }
    b.right = es.right_vectors;

    // degenerate clusters get an orthonormal right basis before biorthogonalization
    const double gap = kClusterGap * std::max(1.0, hnorm);
    std::size_t begin = 0;
    while (begin < n) {
        std::size_t end = begin + 1;
        while (end < n && std::abs(b.values[end] - b.values[end - 1]) < gap) ++end;
        if (end - begin > 1) detail::orthonormalize_cluster(b.right, begin, end);
        begin = end;
    }

    const Operator pinv = inverse(b.right);
    b.left = Operator(n);
    for (std::size_t i = 0; i < n; ++i) {
        Ket phi(n);
        for (std::size_t j = 0; j < n; ++j) phi[j] = std::conj(pinv(i, j));
        const Complex overlap = inner(phi, b.right.column(i));
        phi /= std::conj(overlap);
        b.left.set_column(i, phi);
    }
    b.vector_condition = vector_condition(b.right);
    return b;
}

namespace detail {

// S = T·√Λ·U† where the row permutation T places each row at the dominant
// component of its eigenvector whenever those positions are unambiguous.
inline Operator canonical_factor(const Operator& basis, const std::vector<double>& lambda) {
    const std::size_t n = basis.dim();
    std::vector<std::size_t> row_of(n);
    std::vector<bool> taken(n, false);
    bool permutation = true;
    for (std::size_t j = 0; j < n && permutation; ++j) {
        std::size_t best = 0;
        double first = -1.0, second = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::abs(basis(i, j));
            if (a > first) {
                second = first;
                first = a;
                best = i;
            } else if (a > second) {
                second = a;
            }
        }
        if (second >= first * (1.0 - 1e-10) || taken[best]) {
            permutation = false;
            break;
        }
        taken[best] = true;
        row_of[j] = best;
    }
    Operator s(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t row = permutation ? row_of[j] : j;
        const double root = std::sqrt(lambda[j]);
        for (std::size_t c = 0; c < n; ++c) s(row, c) = root * std::conj(basis(c, j));
    }
    return s;
}

inline void fill_spectral(MetricBundle& bundle) {
    const auto he = eig_hermitian(bundle.eta);
    bundle.basis = he.basis;
    bundle.lambda = he.values;
    bundle.posdef = he.values.back() > 1e-15 * std::abs(he.values.front()) && he.values.back() > 0.0;
    if (!bundle.posdef) {
        throw Error(ErrorCode::not_positive_definite,
                    "smallest metric eigenvalue " + std::to_string(he.values.back()));
    }
    bundle.s = canonical_factor(bundle.basis, bundle.lambda);
}

} // namespace detail

/// Builds η = Σ|φ_i⟩⟨φ_i| and its spectral data. `reference` is required for Gauge::closed_form.
inline MetricBundle metric_from_biorthogonal(const BiorthogonalSystem& b, Gauge gauge,
                                             const Operator* reference = nullptr) {
    const std::size_t n = b.left.dim();
    MetricBundle bundle;
    bundle.gauge = gauge;
    bundle.vector_condition = b.vector_condition;

    Operator eta(n);
    if (b.hermitian_input) {
        eta = Operator::identity(n);
    } else {
        eta = hermitian_part(b.left * b.left.adjoint());
    }

    switch (gauge) {
    case Gauge::entry11: {
        const double e11 = eta(0, 0).real();
        if (!(e11 > 0.0)) throw Error(ErrorCode::not_positive_definite, "η₁₁ is not positive");
        eta /= Complex(e11);
        break;
    }
    case Gauge::closed_form: {
        if (reference == nullptr) {
            throw Error(ErrorCode::invalid_argument, "closed-form gauge needs a model-supplied metric");
        }
        if (reference->dim() != n) throw Error(ErrorCode::dimension_mismatch, "reference metric");
        bundle.congruence_factor = reference->trace().real() / eta.trace().real();
        bundle.congruence_residual =
            norm_fro(bundle.congruence_factor * eta - *reference) / norm_fro(*reference);
        eta = *reference;
        break;
    }
    case Gauge::raw: break;
    }
    bundle.eta = eta;
    detail::fill_spectral(bundle);
    bundle.residual_ph = check_pseudo_hermiticity(b.hamiltonian, bundle.eta);
    return bundle;
}

/// Bundle for an explicitly given metric (e.g. a closed-form model metric).
inline MetricBundle metric_bundle(const Operator& eta, const Operator& hamiltonian, Gauge gauge = Gauge::closed_form) {
    if (!is_hermitian(eta, 1e-12)) throw Error(ErrorCode::not_hermitian, "metric is not Hermitian");
    MetricBundle bundle;
    bundle.gauge = gauge;
    bundle.eta = hermitian_part(eta);
    detail::fill_spectral(bundle);
    bundle.residual_ph = check_pseudo_hermiticity(hamiltonian, bundle.eta);
    return bundle;
}

/// S = √Λ·U† (rows permuted to the dominant eigenvector components when unambiguous).
inline Operator factor_metric(const MetricBundle& bundle) {
    if (!bundle.posdef || bundle.lambda.empty() || !(bundle.lambda.back() > 0.0)) {
        throw Error(ErrorCode::not_positive_definite, "metric bundle is not positive definite");
    }
    return detail::canonical_factor(bundle.basis, bundle.lambda);
}

inline Operator factor_metric(const Operator& eta) {
    MetricBundle bundle;
    bundle.eta = eta;
    detail::fill_spectral(bundle);
    return bundle.s;
}

struct Counterpart {
    Operator hamiltonian;        // Hermitian part of S·H·S⁻¹
    double hermiticity_residual; // ‖M − M†‖_F / ‖H‖_F before symmetrization
};

inline Counterpart hermitian_counterpart(const Operator& h, const Operator& s) {
    if (h.dim() != s.dim()) throw Error(ErrorCode::dimension_mismatch, "H and S dimensions differ");
    const Operator m = s * h * inverse(s);
    const double hnorm = std::max(norm_fro(h), std::numeric_limits<double>::min());
    const double residual = hermiticity_defect(m) / hnorm;
    if (residual > 1e-6) {
        throw Error(ErrorCode::not_hermitian_result,
                    "S·H·S⁻¹ Hermiticity residual " + std::to_string(residual) + " (wrong metric or broken phase)");
    }
    return {hermitian_part(m), residual};
}

/// |ψ^H⟩ = S|ψ^pH⟩
inline Ket map_state(const Ket& psi, const Operator& s) {
    if (psi.size() != s.dim()) throw Error(ErrorCode::dimension_mismatch, "state and S dimensions differ");
    return s * psi;
}

} // namespace etaqfi
