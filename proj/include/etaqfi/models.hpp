#pragma once

// Built-in model families and the ParameterizedSystem consumed by the QFI
// pipeline:
//   nonreciprocal  H = [[ω, k₁],[k₂, −ω]]
//   PT-symmetric   H = [[r e^{iφ}, s+θ],[s+θ, r e^{−iφ}]]
//   polynomial     H = Σ θⁿ C_n

#include <functional>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "etaqfi/geometry.hpp"
#include "etaqfi/pseudoherm.hpp"
#include "etaqfi/qfi.hpp"

namespace etaqfi {

// ---------------------------------------------------------------------------
// nonreciprocal

enum class Parameterization { additive, multiplicative, raw };

constexpr std::string_view to_string(Parameterization p) {
    switch (p) {
    case Parameterization::additive: return "additive";
    case Parameterization::multiplicative: return "multiplicative";
    case Parameterization::raw: return "raw";
    }
    return "raw";
}

inline constexpr double kExceptionalRadius = 1e-14;

struct NonreciprocalModel {
    Parameterization parameterization = Parameterization::additive;
    double delta = 0.5; // additive: k₁ = 1/δ + θ, k₂ = δ + θ; multiplicative: k₁ = θ/δ, k₂ = θδ
    double omega = 0.0;
    double k1 = 0.0; // raw only
    double k2 = 0.0;

    struct Couplings {
        double k1, k2, dk1, dk2;
    };

    void check() const {
        if (!std::isfinite(omega)) throw Error(ErrorCode::invalid_model, "ω must be finite");
        if (parameterization == Parameterization::raw) {
            if (!std::isfinite(k1) || !std::isfinite(k2)) throw Error(ErrorCode::invalid_model, "k₁, k₂ must be finite");
            if (k1 == k2) throw Error(ErrorCode::invalid_model, "k₁ = k₂ is Hermitian; the model needs k₁ ≠ k₂");
            return;
        }
        if (!(std::abs(delta) > 0.0) || !std::isfinite(delta)) {
            throw Error(ErrorCode::invalid_model, "δ must be finite and nonzero");
        }
        if (std::abs(delta) == 1.0) throw Error(ErrorCode::invalid_model, "|δ| = 1 makes k₁ ≡ k₂");
    }

    Couplings couplings(double theta) const {
        switch (parameterization) {
        case Parameterization::additive: return {1.0 / delta + theta, delta + theta, 1.0, 1.0};
        case Parameterization::multiplicative:
            if (!(theta > 0.0)) {
                throw Error(ErrorCode::out_of_domain, "multiplicative family is restricted to θ > 0");
            }
            return {theta / delta, theta * delta, 1.0 / delta, delta};
        case Parameterization::raw: return {k1, k2, 0.0, 0.0};
        }
        return {k1, k2, 0.0, 0.0};
    }

    /// θ values where k₁k₂ = 0.
    std::vector<double> exceptional_points() const {
        if (parameterization != Parameterization::additive) return {};
        std::vector<double> eps{-delta, -1.0 / delta};
        std::sort(eps.begin(), eps.end());
        return eps;
    }

    friend bool operator==(const NonreciprocalModel&, const NonreciprocalModel&) = default;
};

struct NonreciprocalPoint {
    double k1 = 0.0, k2 = 0.0;
    Operator h, dh;     // H^pH, ∂_θH^pH
    Operator s;         // diag[1, √(k₁/k₂)]
    Operator eta, d_eta; // diag[1, k₁/k₂]
    Operator hh, dhh;   // off-diagonal sign(k₁)√(k₁k₂)
};

inline Operator nonreciprocal_hamiltonian(const NonreciprocalModel& m, double theta) {
    const auto c = m.couplings(theta);
    return Operator{{m.omega, c.k1}, {c.k2, -m.omega}};
}

inline NonreciprocalPoint nonreciprocal(const NonreciprocalModel& m, double theta) {
    m.check();
    const auto c = m.couplings(theta);
    const double prod = c.k1 * c.k2;
    if (std::abs(prod) <= kExceptionalRadius) {
        throw Error(ErrorCode::at_exceptional_point, "k₁k₂ = 0 at θ = " + std::to_string(theta));
    }
    if (prod < 0.0) {
        throw Error(ErrorCode::broken_phase, "k₁k₂ < 0 at θ = " + std::to_string(theta) + " (complex spectrum)");
    }
    NonreciprocalPoint p;
    p.k1 = c.k1;
    p.k2 = c.k2;
    p.h = Operator{{m.omega, c.k1}, {c.k2, -m.omega}};
    p.dh = Operator{{0.0, c.dk1}, {c.dk2, 0.0}};
    const double ratio = c.k1 / c.k2;
    const double d_ratio = (c.dk1 * c.k2 - c.k1 * c.dk2) / (c.k2 * c.k2);
    p.s = Operator::diagonal({1.0, std::sqrt(ratio)});
    p.eta = Operator::diagonal({1.0, ratio});
    p.d_eta = Operator::diagonal({0.0, d_ratio});
    const double sign = c.k1 > 0.0 ? 1.0 : -1.0;
    const double g = sign * std::sqrt(prod);
    const double dg = sign * (c.dk1 * c.k2 + c.k1 * c.dk2) / (2.0 * std::sqrt(prod));
    p.hh = Operator{{m.omega, g}, {g, -m.omega}};
    p.dhh = Operator{{0.0, dg}, {dg, 0.0}};
    return p;
}

// ---------------------------------------------------------------------------
// PT-symmetric

struct PtModel {
    double r = 1.0;
    double phi = std::numbers::pi / 2;
    double s = 2.0;

    void check() const {
        if (!std::isfinite(r) || !std::isfinite(phi) || !std::isfinite(s)) {
            throw Error(ErrorCode::invalid_model, "r, φ, s must be finite");
        }
    }

    /// θ at which s + θ = |r sin φ|.
    double exceptional_point() const { return std::abs(r * std::sin(phi)) - s; }

    friend bool operator==(const PtModel&, const PtModel&) = default;
};

struct PtPoint {
    double alpha = 0.0;         // arcsin(r sin φ / (s+θ))
    Operator h, dh;             // ∂ w.r.t. the shift of s
    Operator eta, d_eta;        // sec α [[1, −i sin α],[i sin α, 1]]
    std::vector<double> lambda; // {sec α + tan α, sec α − tan α}
    Operator u;                 // (1/√2)[[−i, i],[1, 1]]
    Operator s;                 // √Λ·U†
    Operator hh, dhh;           // [[r cos φ, i w],[−i w, r cos φ]], w = √((s+θ)² − r² sin² φ)
};

inline Operator pt_hamiltonian(const PtModel& m, double shift) {
    const double sp = m.s + shift;
    return Operator{{m.r * std::exp(kImag * m.phi), sp}, {sp, m.r * std::exp(-kImag * m.phi)}};
}

inline PtPoint pt_symmetric(const PtModel& m, double shift) {
    m.check();
    const double sp = m.s + shift;
    const double rs = m.r * std::sin(m.phi);
    if (!(sp > std::abs(rs))) {
        throw Error(ErrorCode::broken_phase, "s + θ = " + std::to_string(sp) + " ≤ |r sin φ| = " +
                                                 std::to_string(std::abs(rs)) + " (complex spectrum)");
    }
    PtPoint p;
    p.alpha = std::asin(rs / sp);
    const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
    const double sec = 1.0 / ca, tan = sa / ca;
    p.h = pt_hamiltonian(m, shift);
    p.dh = Operator{{0.0, 1.0}, {1.0, 0.0}};
    p.eta = Operator{{sec, -kImag * sa * sec}, {kImag * sa * sec, sec}};
    const double dalpha = -(rs / (sp * sp)) / ca;
    p.d_eta = Operator{{sec * tan, -kImag * sec * sec}, {kImag * sec * sec, sec * tan}} * Complex(dalpha);
    p.lambda = {sec + tan, sec - tan};
    const double r2 = 1.0 / std::sqrt(2.0);
    p.u = Operator{{-kImag * r2, kImag * r2}, {r2, r2}};
    p.s = Operator::diagonal({std::sqrt(p.lambda[0]), std::sqrt(p.lambda[1])}) * p.u.adjoint();
    const double w = std::sqrt(sp * sp - rs * rs);
    const double rc = m.r * std::cos(m.phi);
    p.hh = Operator{{rc, kImag * w}, {-kImag * w, rc}};
    p.dhh = Operator{{0.0, kImag * (sp / w)}, {-kImag * (sp / w), 0.0}};
    return p;
}

// ---------------------------------------------------------------------------
// polynomial

struct PolynomialModel {
    std::vector<Operator> coefficients; // H(θ) = Σ θⁿ C_n

    void check() const {
        if (coefficients.empty()) throw Error(ErrorCode::invalid_model, "polynomial model needs coefficients");
        for (const auto& c : coefficients) {
            if (c.dim() != coefficients.front().dim()) {
                throw Error(ErrorCode::dimension_mismatch, "polynomial coefficients differ in dimension");
            }
        }
    }

    std::size_t dim() const { return coefficients.empty() ? 0 : coefficients.front().dim(); }

    friend bool operator==(const PolynomialModel&, const PolynomialModel&) = default;
};

struct PolynomialPoint {
    Operator h, dh;
};

inline PolynomialPoint polynomial(const PolynomialModel& m, double theta) {
    m.check();
    const std::size_t n = m.dim();
    PolynomialPoint p{Operator(n), Operator(n)};
    // Horner for both H and ∂H
    for (std::size_t i = m.coefficients.size(); i-- > 0;) {
        p.dh = p.dh * Complex(theta) + p.h;
        p.h = p.h * Complex(theta) + m.coefficients[i];
    }
    return p;
}

// ---------------------------------------------------------------------------
// ParameterizedSystem

using ModelSpec = std::variant<NonreciprocalModel, PtModel, PolynomialModel>;

/// θ ↦ H^pH(θ) plus whatever closed forms the model provides. Unset members
/// fall back to the generic biorthogonal / factorization path.
struct ParameterizedSystem {
    using OperatorFn = std::function<Operator(double)>;

    std::string name;
    std::size_t dim = 0;
    OperatorFn hamiltonian;
    OperatorFn hamiltonian_derivative;
    OperatorFn metric;
    OperatorFn metric_derivative;
    OperatorFn similarity;
    OperatorFn counterpart;
    OperatorFn counterpart_derivative;
    std::function<void(double)> validate; // throws phase/domain errors
    Gauge gauge = Gauge::entry11;
    std::vector<double> exceptional_points;

    bool uses_closed_form() const { return gauge == Gauge::closed_form; }

    void check_phase(double theta) const {
        if (validate) validate(theta);
    }

    OperatorCurve hamiltonian_curve() const { return {hamiltonian, hamiltonian_derivative}; }

    OperatorCurve metric_curve() const {
        if (uses_closed_form()) {
            if (!metric) throw Error(ErrorCode::invalid_argument, name + " has no closed-form metric");
            return {metric, metric_derivative};
        }
        auto h = hamiltonian;
        const Gauge g = gauge;
        return {[h, g](double th) { return metric_from_biorthogonal(biorthogonal_system(h(th)), g).eta; }, nullptr};
    }

    MetricBundle bundle(double theta) const {
        const Operator h = hamiltonian(theta);
        if (uses_closed_form()) {
            const Operator ref = metric_curve()(theta);
            return metric_from_biorthogonal(biorthogonal_system(h), Gauge::closed_form, &ref);
        }
        return metric_from_biorthogonal(biorthogonal_system(h), gauge);
    }

    OperatorCurve similarity_curve() const {
        if (uses_closed_form() && similarity) return {similarity, nullptr};
        const OperatorCurve eta = metric_curve();
        return {[eta](double th) { return factor_metric(eta(th)); }, nullptr};
    }

    OperatorCurve counterpart_curve() const {
        if (uses_closed_form() && counterpart) return {counterpart, counterpart_derivative};
        const OperatorCurve s = similarity_curve();
        auto h = hamiltonian;
        return {[s, h](double th) { return hermitian_counterpart(h(th), s(th)).hamiltonian; }, nullptr};
    }

    /// ψ(θ) = exp(−iH(θ)t)·probe, unnormalized.
    StateCurve state_curve(const Ket& probe, double t) const {
        if (probe.size() != dim) throw Error(ErrorCode::dimension_mismatch, "probe dimension");
        auto h = hamiltonian;
        return {[h, probe, t](double th) { return evolve(h(th), probe, t); }, nullptr};
    }
};

inline ParameterizedSystem make_system(const NonreciprocalModel& m, Gauge gauge = Gauge::closed_form) {
    m.check();
    ParameterizedSystem sys;
    sys.name = "nonreciprocal";
    sys.dim = 2;
    sys.gauge = gauge;
    sys.hamiltonian = [m](double th) { return nonreciprocal_hamiltonian(m, th); };
    sys.hamiltonian_derivative = [m](double th) {
        const auto c = m.couplings(th);
        return Operator{{0.0, c.dk1}, {c.dk2, 0.0}};
    };
    sys.metric = [m](double th) { return nonreciprocal(m, th).eta; };
    sys.metric_derivative = [m](double th) { return nonreciprocal(m, th).d_eta; };
    sys.similarity = [m](double th) { return nonreciprocal(m, th).s; };
    sys.counterpart = [m](double th) { return nonreciprocal(m, th).hh; };
    sys.counterpart_derivative = [m](double th) { return nonreciprocal(m, th).dhh; };
    sys.validate = [m](double th) { (void)nonreciprocal(m, th); };
    sys.exceptional_points = m.exceptional_points();
    return sys;
}

inline ParameterizedSystem make_system(const PtModel& m, Gauge gauge = Gauge::closed_form) {
    m.check();
    ParameterizedSystem sys;
    sys.name = "pt";
    sys.dim = 2;
    sys.gauge = gauge;
    sys.hamiltonian = [m](double th) { return pt_hamiltonian(m, th); };
    sys.hamiltonian_derivative = [](double) { return Operator{{0.0, 1.0}, {1.0, 0.0}}; };
    sys.metric = [m](double th) { return pt_symmetric(m, th).eta; };
    sys.metric_derivative = [m](double th) { return pt_symmetric(m, th).d_eta; };
    sys.similarity = [m](double th) { return pt_symmetric(m, th).s; };
    sys.counterpart = [m](double th) { return pt_symmetric(m, th).hh; };
    sys.counterpart_derivative = [m](double th) { return pt_symmetric(m, th).dhh; };
    sys.validate = [m](double th) { (void)pt_symmetric(m, th); };
    sys.exceptional_points = {m.exceptional_point()};
    return sys;
}

inline ParameterizedSystem make_system(const PolynomialModel& m, Gauge gauge = Gauge::entry11) {
    m.check();
    if (gauge == Gauge::closed_form) {
        throw Error(ErrorCode::invalid_argument, "polynomial model has no closed-form metric");
    }
    ParameterizedSystem sys;
    sys.name = "polynomial";
    sys.dim = m.dim();
    sys.gauge = gauge;
    sys.hamiltonian = [m](double th) { return polynomial(m, th).h; };
    sys.hamiltonian_derivative = [m](double th) { return polynomial(m, th).dh; };
    sys.validate = [m, gauge](double th) {
        (void)metric_from_biorthogonal(biorthogonal_system(polynomial(m, th).h), gauge);
    };
    return sys;
}

inline ParameterizedSystem make_system(const ModelSpec& spec, Gauge gauge) {
    return std::visit([gauge](const auto& m) { return make_system(m, gauge); }, spec);
}

/// Closed-form gauge where the model has one, entry11 otherwise.
inline Gauge default_gauge(const ModelSpec& spec) {
    return std::holds_alternative<PolynomialModel>(spec) ? Gauge::entry11 : Gauge::closed_form;
}

inline std::size_t model_dim(const ModelSpec& spec) {
    if (const auto* p = std::get_if<PolynomialModel>(&spec)) return p->dim();
    return 2;
}

struct EvolvedProbe {
    Ket state;
    double flat_norm = 0.0; // ⟨ψ|ψ⟩
    double eta_norm = 0.0;  // ⟨ψ|η|ψ⟩
};

inline EvolvedProbe evolve_probe(const ParameterizedSystem& sys, double theta, double t, const Ket& probe) {
    sys.check_phase(theta);
    EvolvedProbe out;
    out.state = evolve(sys.hamiltonian(theta), probe, t);
    out.flat_norm = norm_squared(out.state);
    out.eta_norm = inner(out.state, sys.metric_curve()(theta), out.state).real();
    return out;
}

} // namespace etaqfi
