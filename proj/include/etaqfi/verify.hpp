#pragma once

// Machine-checkable invariants of every module, run as one suite.

#include <chrono>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "etaqfi/fixtures.hpp"
#include "etaqfi/random.hpp"
#include "etaqfi/sweep.hpp"

namespace etaqfi {

enum class VerifyLevel { fast, full };

/// Deliberate defects, so the suite can show it notices them.
struct VerifyFaults {
    bool flip_connection_sign = false;
    bool skip_sqfi_renormalization = false;
};

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::fast;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    VerifyFaults faults;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyReport {
    VerifyLevel level = VerifyLevel::fast;
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return !checks.empty();
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

/// Worst value relative to its tolerance; a check passes when that ratio is ≤ 1.
struct Measure {
    double tolerance = 0.0;
    double worst = 0.0;
    double worst_tolerance = 0.0;
    double worst_ratio = -1.0;
    std::size_t count = 0;
    std::string where;

    explicit Measure(double tol) : tolerance(tol), worst_tolerance(tol) {}

    void add(double value, const std::string& at = {}) { add(value, tolerance, at); }
    void add(double value, double tol, const std::string& at) {
        ++count;
        const double ratio = tol > 0.0 ? value / tol : (value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (!(ratio <= worst_ratio)) {
            worst_ratio = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : ratio;
            worst = value;
            worst_tolerance = tol;
            where = at;
        }
    }
};

inline CheckResult verdict(const Measure& m) {
    CheckResult r;
    r.measured = m.worst;
    r.tolerance = m.worst_tolerance;
    r.passed = m.count > 0 && m.worst_ratio <= 1.0;
    std::ostringstream os;
    os << m.count << " cases";
    if (!m.where.empty()) os << ", worst at " << m.where;
    r.detail = os.str();
    return r;
}

inline std::string at_theta(double th) {
    std::ostringstream os;
    os << "θ = " << th;
    return os.str();
}

/// ∂_θ exp(X(θ)) as the upper-right block of exp([[X, ∂X], [0, X]]).
inline Operator expm_derivative(const Operator& x, const Operator& dx) {
    const std::size_t n = x.dim();
    Operator big(2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            big(i, j) = x(i, j);
            big(n + i, n + j) = x(i, j);
            big(i, n + j) = dx(i, j);
        }
    const Operator e = expm(big);
    Operator out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = e(i, n + j);
    return out;
}

/// H = S⁻¹·H_h·S with random Hermitian H_h and well-conditioned S.
inline Operator random_pseudo_hermitian(std::mt19937_64& rng, std::size_t dim, Operator* s_out = nullptr) {
    const Operator s = random_metric(rng, dim, 0.5, 2.0) * random_unitary(rng, dim);
    if (s_out) *s_out = s;
    return solve(s, random_hermitian(rng, dim) * s);
}

} // namespace detail

class Verifier {
public:
    explicit Verifier(VerifyOptions options) : opt_(options), rng_(options.seed) {}

    VerifyReport run() {
        VerifyReport rep;
        rep.level = opt_.level;
        rep.seed = opt_.seed;
        std::vector<std::pair<const char*, CheckResult (Verifier::*)()>> checks{
            {"eig_general reconstruction", &Verifier::eig_reconstruction},
            {"eig_hermitian unitarity", &Verifier::hermitian_unitarity},
            {"expm group property", &Verifier::expm_group},
            {"expm closed-form evolution", &Verifier::expm_closed_form},
            {"generator Hermiticity", &Verifier::generator_hermiticity},
            {"gauge congruence", &Verifier::gauge_congruence},
            {"counterpart spectrum", &Verifier::counterpart_spectrum},
            {"similarity freedom", &Verifier::similarity_freedom},
            {"similarity round trip", &Verifier::similarity_round_trip},
            {"metric compatibility", &Verifier::metric_compatibility},
            {"norm invariance", &Verifier::norm_invariance},
            {"fd convergence", &Verifier::fd_convergence},
            {"gauge stability", &Verifier::gauge_stability},
            {"eta = I reduction", &Verifier::reduction},
            {"duality", &Verifier::duality},
            {"bound", &Verifier::bound},
            {"phase invariance", &Verifier::phase_invariance},
            {"dual-path identity", &Verifier::dual_path},
            {"identity closure", &Verifier::closure},
            {"closed-form vs generic metric", &Verifier::closed_vs_generic},
            {"spectrum reality", &Verifier::spectrum_reality},
            {"counterpart Hermiticity", &Verifier::counterpart_hermiticity},
            {"norm conservation", &Verifier::conservation},
            {"config round trip", &Verifier::config_round_trip},
            {"csv determinism", &Verifier::csv_determinism},
        };
        if (full()) checks.emplace_back("figure1 divergence", &Verifier::figure1);
        for (const auto& [name, fn] : checks) {
            const auto t0 = std::chrono::steady_clock::now();
            CheckResult r;
            try {
                r = (this->*fn)();
            } catch (const std::exception& e) {
                r.passed = false;
                r.detail = std::string("threw: ") + e.what();
            }
            r.name = name;
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rep.checks.push_back(std::move(r));
        }
        return rep;
    }

private:
    VerifyOptions opt_;
    std::mt19937_64 rng_;

    bool full() const { return opt_.level == VerifyLevel::full; }
    std::size_t cases(std::size_t fast, std::size_t full_count) const { return full() ? full_count : fast; }
    // fast level keeps sweeps at ≤ 50 points
    std::size_t sweep_points() const { return full() ? 100 : 50; }
    double connection_sign() const { return opt_.faults.flip_connection_sign ? -1.0 : 1.0; }

    std::size_t random_dim(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    // ---- densela

    CheckResult eig_reconstruction() {
        detail::Measure m{1e-9};
        for (std::size_t i = 0; i < cases(50, 200);) {
            const Operator a = random_operator(rng_, random_dim(2, 8));
            const auto es = eig_general(a);
            if (es.vector_condition >= 1e6) continue;
            ++i;
            const Operator p = es.right_vectors;
            const Operator rec = p * Operator::diagonal(std::span<const Complex>(es.values)) * inverse(p);
            m.add(norm_fro(a - rec) / norm_fro(a));
        }
        return detail::verdict(m);
    }

    CheckResult hermitian_unitarity() {
        detail::Measure m{1e-12};
        for (std::size_t i = 0; i < cases(50, 200); ++i) {
            const std::size_t n = random_dim(2, 8);
            const Operator u = eig_hermitian(random_hermitian(rng_, n)).basis;
            m.add(norm_fro(u.adjoint() * u - Operator::identity(n)));
        }
        return detail::verdict(m);
    }

    CheckResult expm_group() {
        detail::Measure m{1e-10};
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (std::size_t i = 0; i < cases(30, 100); ++i) {
            Operator a = random_operator(rng_, random_dim(2, 6));
            a *= Complex(5.0 * std::abs(uni(rng_)) / norm_spectral(a));
            const double t1 = uni(rng_), t2 = uni(rng_);
            const Operator lhs = expm(a * Complex(t1 + t2));
            m.add(norm_fro(lhs - expm(a * Complex(t1)) * expm(a * Complex(t2))) / std::max(1.0, norm_fro(lhs)));
        }
        return detail::verdict(m);
    }

    // exp(−iHt)|0⟩ = (cos gt, −i√(k₂/k₁) sin gt), g = √(k₁k₂)
    CheckResult expm_closed_form() {
        detail::Measure m{1e-12};
        const NonreciprocalModel model{};
        for (double th : {-0.4, -0.1, 0.0, 0.3, 1.0})
            for (int k = 0; k < 20; ++k) {
                const double t = 2.0 * std::numbers::pi * k / 19.0;
                const auto c = model.couplings(th);
                const double g = std::sqrt(c.k1 * c.k2);
                const Ket expected{std::cos(g * t), -kImag * std::sqrt(c.k2 / c.k1) * std::sin(g * t)};
                m.add(norm(evolve(nonreciprocal_hamiltonian(model, th), Ket{1.0, 0.0}, t) - expected),
                      detail::at_theta(th));
            }
        return detail::verdict(m);
    }

    CheckResult generator_hermiticity() {
        detail::Measure m{1e-6};
        const FdScheme fd{2, 1e-5, false};
        for (std::size_t i = 0; i < cases(10, 40); ++i) {
            const std::size_t n = random_dim(2, 4);
            const Operator h0 = random_hermitian(rng_, n), h1 = random_hermitian(rng_, n);
            const OperatorCurve hh{[=](double th) { return h0 + h1 * Complex(th); }, nullptr};
            m.add(generator_h(hh, 0.2, 0.5 + 0.25 * static_cast<double>(i % 8), fd).asymmetry);
        }
        return detail::verdict(m);
    }

    // ---- pseudoherm

    CheckResult gauge_congruence() {
        detail::Measure m{1e-10};
        for (std::size_t i = 0; i < cases(20, 80); ++i) {
            const Operator h = detail::random_pseudo_hermitian(rng_, random_dim(2, 5));
            const auto bo = biorthogonal_system(h);
            for (Gauge g : {Gauge::entry11, Gauge::raw}) {
                const MetricBundle b = metric_from_biorthogonal(bo, g);
                m.add(check_pseudo_hermiticity(h, b.eta), "pseudo-Hermiticity");
                // P†ηP must be positive diagonal
                const Operator d = bo.right.adjoint() * b.eta * bo.right;
                double off = 0.0, min_diag = std::numeric_limits<double>::infinity();
                for (std::size_t r = 0; r < d.dim(); ++r) {
                    min_diag = std::min(min_diag, d(r, r).real());
                    for (std::size_t c = 0; c < d.dim(); ++c)
                        if (r != c) off = std::max(off, std::abs(d(r, c)));
                }
                m.add(min_diag > 0.0 ? off / norm_fro(d) : 1.0, 1e-9, "congruence off-diagonal");
            }
        }
        return detail::verdict(m);
    }

    CheckResult counterpart_spectrum() {
        detail::Measure m{1e-9};
        for (std::size_t i = 0; i < cases(20, 80); ++i) {
            const Operator h = detail::random_pseudo_hermitian(rng_, random_dim(2, 5));
            const MetricBundle b = metric_from_biorthogonal(biorthogonal_system(h), Gauge::entry11);
            const auto hh = hermitian_counterpart(h, b.s).hamiltonian;
            const auto ev = eig_hermitian(hh).values;
            const auto eg = eig_general(h).values;
            for (std::size_t k = 0; k < ev.size(); ++k) m.add(std::abs(ev[k] - eg[k]) / std::max(1.0, std::abs(eg[k])));
        }
        return detail::verdict(m);
    }

    CheckResult similarity_freedom() {
        detail::Measure m{1e-12};
        for (std::size_t i = 0; i < cases(20, 80); ++i) {
            const std::size_t n = random_dim(2, 5);
            Operator s;
            const Operator h = detail::random_pseudo_hermitian(rng_, n, &s);
            const Operator t = random_unitary(rng_, n);
            const Operator ts = t * s;
            m.add(norm_fro(ts.adjoint() * ts - s.adjoint() * s) / norm_fro(s.adjoint() * s));
            const Operator hh = hermitian_counterpart(h, s).hamiltonian;
            const Operator hh_t = hermitian_counterpart(h, ts).hamiltonian;
            m.add(norm_fro(hh_t - t * hh * t.adjoint()) / std::max(1.0, norm_fro(hh)), 1e-10, "counterpart map");
        }
        return detail::verdict(m);
    }

    CheckResult similarity_round_trip() {
        detail::Measure m{1e-10};
        for (std::size_t i = 0; i < cases(20, 80); ++i) {
            const Operator h = detail::random_pseudo_hermitian(rng_, random_dim(2, 5));
            const MetricBundle b = metric_from_biorthogonal(biorthogonal_system(h), Gauge::entry11);
            const Operator hh = hermitian_counterpart(h, b.s).hamiltonian;
            m.add(norm_fro(solve(b.s, hh * b.s) - h) / std::max(1.0, norm_fro(h)));
        }
        return detail::verdict(m);
    }

    // ---- geometry

    std::vector<std::pair<std::string, OperatorCurve>> metric_families() {
        std::vector<std::pair<std::string, OperatorCurve>> out;
        out.emplace_back("nonreciprocal", make_system(NonreciprocalModel{}).metric_curve());
        out.emplace_back("nonreciprocal generic", make_system(NonreciprocalModel{}, Gauge::entry11).metric_curve());
        out.emplace_back("pt", make_system(PtModel{}).metric_curve());
        out.emplace_back("rotating", fixtures::RotatingMetric::eta_curve(false));
        for (int i = 0; i < 3; ++i) {
            const std::size_t n = random_dim(2, 4);
            const Operator e0 = random_metric(rng_, n), e1 = random_hermitian(rng_, n, 0.1);
            out.emplace_back("random", OperatorCurve{[=](double th) { return e0 + e1 * Complex(th); }, nullptr});
        }
        return out;
    }

    CheckResult metric_compatibility() {
        detail::Measure m{1e-6};
        for (const auto& [name, eta] : metric_families())
            for (double th : {-0.3, 0.0, 0.4}) {
                const Connection c = detail::connection_impl(eta, th, FdScheme{}, connection_sign());
                m.add(c.compatibility_residual, 1e-6 * norm_fro(c.d_eta) + 1e-10, name + ", " + detail::at_theta(th));
            }
        return detail::verdict(m);
    }

    CheckResult norm_invariance() {
        detail::Measure m{1e-6};
        const FdScheme fd;
        for (const auto& [name, eta] : metric_families()) {
            const std::size_t n = eta(0.0).dim();
            const Operator h0 = random_hermitian(rng_, n), h1 = random_hermitian(rng_, n);
            const Ket p0 = random_ket(rng_, n);
            const StateCurve psi = normalized_eta(
                StateCurve{[=](double th) { return evolve(h0 + h1 * Complex(th), p0, 1.0); }, nullptr}, eta);
            for (double th : {-0.3, 0.0, 0.4}) {
                const Connection c = detail::connection_impl(eta, th, fd, connection_sign());
                const Ket v = psi(th);
                const Ket d = d_theta(psi, th, fd) + c.gamma * v;
                m.add(std::abs(2.0 * inner(d, c.eta, v).real()), name + ", " + detail::at_theta(th));
            }
        }
        return detail::verdict(m);
    }

    // order-2 error ratio over a decade of steps must be ≈ 100
    CheckResult fd_convergence() {
        detail::Measure m{0.05};
        const ScalarCurve f{[](double th) { return std::sin(2.0 * th) * std::exp(0.3 * th); }, nullptr};
        const auto exact = [](double th) {
            return std::exp(0.3 * th) * (2.0 * std::cos(2.0 * th) + 0.3 * std::sin(2.0 * th));
        };
        for (double th : {-0.7, 0.1, 0.9}) {
            const double e1 = std::abs(d_theta_fd(f, th, FdScheme{2, 1e-2, false}) - exact(th));
            const double e2 = std::abs(d_theta_fd(f, th, FdScheme{2, 1e-3, false}) - exact(th));
            m.add(std::abs(std::log10(e1 / e2) - 2.0), detail::at_theta(th));
        }
        return detail::verdict(m);
    }

    CheckResult gauge_stability() {
        detail::Measure m{1e-8};
        using fixtures::RotatingMetric;
        std::vector<double> coarse, fine;
        for (int i = 0; i <= 20; ++i) coarse.push_back(-0.6 + 0.06 * i);
        for (int i = 0; i <= 40; ++i) fine.push_back(-0.6 + 0.03 * i);
        for (const auto& eta : {RotatingMetric::eta_curve(), make_system(PtModel{}).metric_curve()}) {
            const auto a = track_eigenbasis(eta, coarse), b = track_eigenbasis(eta, fine);
            for (std::size_t i = 0; i < coarse.size(); ++i)
                m.add(norm_fro(a.bases[i] - b.bases[2 * i]), detail::at_theta(coarse[i]));
        }
        return detail::verdict(m);
    }

    // ---- qfi

    CheckResult reduction() {
        detail::Measure m{1e-8};
        const FdScheme fd;
        for (std::size_t i = 0; i < cases(8, 20); ++i) {
            const std::size_t n = random_dim(2, 4);
            const Operator h0 = random_hermitian(rng_, n), h1 = random_hermitian(rng_, n);
            Ket p0 = random_ket(rng_, n);
            p0 /= Complex(norm(p0));
            const double t = 0.5 + 0.1 * static_cast<double>(i), th = 0.3;
            const StateCurve c{[=](double x) { return evolve(h0 + h1 * Complex(x), p0, t); }, nullptr};
            const OperatorCurve identity = constant_curve(Operator::identity(n));
            const auto parts = detail::covariant_parts(c, identity, th, fd, connection_sign());
            const double fc = 4.0 * norm_squared(parts.d_perp);
            m.add(std::abs(fc - sqfi(c, th, fd)), 1e-10, "cqfi − sqfi");
            const Operator x = -kImag * t * (h0 + h1 * Complex(th));
            const Ket g = expm(x).adjoint() * detail::expm_derivative(x, -kImag * t * h1) * p0;
            const double oracle = 4.0 * norm_squared(project_perp(g, p0));
            m.add(std::abs(fc - oracle) / std::max(1.0, oracle));
        }
        return detail::verdict(m);
    }

    JobSpec duality_job(ModelSpec model, double lo, double hi, double t, ProbeKind probe) const {
        JobSpec job;
        job.model = std::move(model);
        job.gauge = default_gauge(job.model);
        job.range = ThetaRange{lo, hi, sweep_points(), GridKind::uniform};
        job.time = t;
        job.probe = probe;
        job.fd.step = default_fd_step();
        return job;
    }

    std::vector<JobSpec> worked_sweeps() const {
        return {duality_job(NonreciprocalModel{}, -0.4, 1.0, std::numbers::pi, ProbeKind::ground),
                duality_job(PtModel{}, -0.8, 1.0, 1.0, ProbeKind::ground)};
    }

    CheckResult duality() {
        detail::Measure m{1e-6};
        for (const auto& job : worked_sweeps()) {
            const ParameterizedSystem sys = make_system(job.model, job.gauge);
            const OperatorCurve eta = sys.metric_curve(), sim = sys.similarity_curve();
            const Ket probe = Ket::basis(sys.dim, 0);
            for (double th : theta_grid(*job.range)) {
                const StateCurve psi = sys.state_curve(probe, job.time);
                if (metric_condition(eta(th)) > kNearEpCondition) continue;
                const auto parts = detail::covariant_parts(psi, eta, th, job.fd, connection_sign());
                const double fc = 4.0 * eta_norm_squared(parts.d_perp, parts.conn.eta);
                const double fh = sqfi(hermitian_side_curve(psi, eta, sim), th, job.fd);
                m.add(std::abs(fh - fc) / std::max(1.0, fh), sys.name + ", " + detail::at_theta(th));
            }
        }
        return detail::verdict(m);
    }

    CheckResult bound() {
        std::size_t checked = 0, violations = 0;
        std::vector<JobSpec> jobs = worked_sweeps();
        jobs.push_back(duality_job(NonreciprocalModel{}, -0.4, 1.0, 1e-3, ProbeKind::ground));
        jobs.push_back(duality_job(PtModel{}, -0.8, 1.0, 1e-3, ProbeKind::optimal));
        jobs.push_back(duality_job(PtModel{}, -0.8, 1.0, 1.0, ProbeKind::optimal));
        for (const auto& job : jobs) {
            const Summary s = summarize(run_sweep(job, opt_.workers).rows);
            checked += s.bound_checked;
            violations += s.bound_violations;
        }
        CheckResult r;
        r.measured = static_cast<double>(violations);
        r.tolerance = 0.0;
        r.passed = checked > 0 && violations == 0;
        r.detail = std::to_string(checked) + " ∂U = 0 points checked, " + std::to_string(violations) + " violations";
        return r;
    }

    // ψ → 2e^{iα}ψ: global phase and scale must both drop out
    CheckResult phase_invariance() {
        detail::Measure m{1e-9};
        const FdScheme fd{4, 1e-4, false};
        const bool renormalize = !opt_.faults.skip_sqfi_renormalization;
        const auto sys = make_system(NonreciprocalModel{});
        std::vector<std::pair<StateCurve, OperatorCurve>> curves{
            {sys.state_curve(Ket{1.0, 0.0}, 1.0), sys.metric_curve()},
            {fixtures::RotatingMetric::state_curve(1.0, Ket{1.0, 0.0}), fixtures::RotatingMetric::eta_curve()}};
        for (const auto& [psi, eta] : curves)
            for (double alpha : {0.7, 2.9})
                for (double th : {-0.2, 0.3}) {
                    const Complex factor = 2.0 * std::exp(kImag * alpha);
                    const StateCurve rotated{[psi, factor](double x) { return psi(x) * factor; }, nullptr};
                    m.add(std::abs(detail::sqfi_impl(rotated, th, fd, renormalize) -
                                   detail::sqfi_impl(psi, th, fd, renormalize)),
                          "sqfi, " + detail::at_theta(th));
                    m.add(std::abs(cqfi(rotated, eta, th, fd) - cqfi(psi, eta, th, fd)), "cqfi, " + detail::at_theta(th));
                }
        return detail::verdict(m);
    }

    CheckResult dual_path() {
        detail::Measure m{1e-5};
        const FdScheme fd;
        const std::size_t n = cases(15, 50);
        const auto nr = make_system(NonreciprocalModel{});
        const auto pt = make_system(PtModel{});
        struct Family {
            std::string name;
            StateCurve psi;
            OperatorCurve eta;
            OperatorCurve sim;
            double lo, hi;
        };
        const std::vector<Family> families{
            {"nonreciprocal", nr.state_curve(Ket{1.0, 0.0}, 1.0), nr.metric_curve(), nr.similarity_curve(), -0.4, 1.0},
            {"pt", pt.state_curve(Ket{1.0, 0.0}, 1.0), pt.metric_curve(), pt.similarity_curve(), -0.8, 1.0},
            {"rotating", fixtures::RotatingMetric::state_curve(1.0, Ket{1.0, 0.0}),
             fixtures::RotatingMetric::eta_curve(), OperatorCurve{fixtures::RotatingMetric::similarity, nullptr}, -0.7,
             0.7}};
        for (const auto& f : families)
            for (std::size_t i = 0; i < n; ++i) {
                const double th = f.lo + (f.hi - f.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
                const auto tb = track_eigenbasis(f.eta, {th}, fd);
                const auto r = identity_residual(f.psi, f.eta, tb, th, fd, &f.sim);
                m.add(r.relative(), f.name + ", " + detail::at_theta(th));
            }
        return detail::verdict(m);
    }

    CheckResult closure() {
        detail::Measure m{1e-6};
        for (const auto& job : worked_sweeps()) {
            for (const auto& row : run_sweep(job, opt_.workers).rows) {
                const QfiSample& s = row.sample;
                if (!s.unflagged()) continue;
                m.add(s.closure_residual() / std::max(1.0, s.sqfi), detail::at_theta(s.theta));
            }
        }
        const FdScheme fd;
        const auto psi = fixtures::RotatingMetric::state_curve(1.0, Ket{1.0, 0.0});
        const auto eta = fixtures::RotatingMetric::eta_curve();
        const OperatorCurve sim{fixtures::RotatingMetric::similarity, nullptr};
        for (double th : {-0.6, -0.2, 0.1, 0.5}) {
            const QfiSample s = decompose_fh(psi, eta, track_eigenbasis(eta, {th}, fd), th, fd, &sim);
            m.add(s.closure_residual() / std::max(1.0, s.sqfi), "rotating, " + detail::at_theta(th));
        }
        return detail::verdict(m);
    }

    // ---- models

    CheckResult closed_vs_generic() {
        detail::Measure m{1e-9};
        const auto closed = make_system(NonreciprocalModel{});
        const auto generic = make_system(NonreciprocalModel{}, Gauge::entry11);
        const auto pt = make_system(PtModel{});
        for (std::size_t i = 0; i < cases(20, 60); ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(cases(20, 60) - 1);
            const double th = -0.45 + 1.45 * u;
            const Operator ref = closed.metric(th);
            m.add(norm_fro(generic.metric_curve()(th) - ref) / norm_fro(ref), "nonreciprocal, " + detail::at_theta(th));
            m.add(pt.bundle(-0.9 + 1.9 * u).congruence_residual, "pt, " + detail::at_theta(-0.9 + 1.9 * u));
        }
        return detail::verdict(m);
    }

    CheckResult spectrum_reality() {
        detail::Measure m{1e-10};
        const auto nr = make_system(NonreciprocalModel{});
        const auto pt = make_system(PtModel{});
        for (int i = 0; i < 20; ++i) {
            const double u = i / 19.0;
            for (const auto& [sys, th] : {std::pair{&nr, -0.49 + 1.49 * u}, std::pair{&pt, -0.99 + 1.99 * u}})
                for (const auto& v : eig_general(sys->hamiltonian(th)).values)
                    m.add(std::abs(v.imag()), sys->name + ", " + detail::at_theta(th));
        }
        // beyond the EP the phase check must refuse
        for (const auto& [sys, th] : {std::pair{&nr, -1.0}, std::pair{&pt, -1.5}}) {
            bool refused = false;
            try {
                sys->check_phase(th);
            } catch (const Error& e) {
                refused = e.code() == ErrorCode::broken_phase;
            }
            m.add(refused ? 0.0 : 1.0, sys->name + " broken phase, " + detail::at_theta(th));
        }
        return detail::verdict(m);
    }

    CheckResult counterpart_hermiticity() {
        detail::Measure m{1e-12};
        const auto nr = make_system(NonreciprocalModel{});
        const auto pt = make_system(PtModel{});
        const auto pt_generic = make_system(PtModel{}, Gauge::raw);
        for (int i = 0; i < 20; ++i) {
            const double u = i / 19.0;
            m.add(hermiticity_defect(nr.counterpart_curve()(-0.49 + 1.49 * u)), "nonreciprocal");
            m.add(hermiticity_defect(pt.counterpart_curve()(-0.99 + 1.99 * u)), "pt");
            m.add(hermiticity_defect(pt_generic.counterpart_curve()(-0.99 + 1.99 * u)), "pt generic");
        }
        return detail::verdict(m);
    }

    CheckResult conservation() {
        detail::Measure m{1e-10};
        const auto nr = make_system(NonreciprocalModel{});
        const auto pt = make_system(PtModel{});
        for (const auto* sys : {&nr, &pt}) {
            const double th = 0.3;
            const Ket probe = Ket{1.0, 0.0};
            for (int k = 0; k < 20; ++k) {
                const double t = 2.0 * std::numbers::pi * k / 19.0;
                const auto e = evolve_probe(*sys, th, t, probe);
                const double start = evolve_probe(*sys, th, 0.0, probe).eta_norm;
                m.add(std::abs(e.eta_norm - start), sys->name + " η-norm, t = " + std::to_string(t));
                if (sys == &nr) {
                    const auto c = NonreciprocalModel{}.couplings(th);
                    const double g = std::sqrt(c.k1 * c.k2);
                    const double flat = std::pow(std::cos(g * t), 2) + std::pow(std::sin(g * t), 2) * c.k2 / c.k1;
                    m.add(std::abs(e.flat_norm - flat), 1e-12, "flat norm, t = " + std::to_string(t));
                }
            }
        }
        return detail::verdict(m);
    }

    // ---- cli

    CheckResult config_round_trip() {
        detail::Measure m{0.0};
        std::vector<JobSpec> jobs;
        for (const auto& [name, _] : preset_configs()) jobs.push_back(preset(name));
        JobSpec poly;
        poly.name = "polynomial";
        poly.model = PolynomialModel{{Operator{{0.0, 2.0}, {0.5, 0.0}}, Operator{{0.0, 1.0}, {1.0, 0.0}}}};
        poly.gauge = Gauge::entry11;
        poly.theta = 0.1;
        poly.time = 1.0;
        poly.probe = ProbeKind::amplitudes;
        poly.amplitudes = Ket{Complex(0.6, 0.1), Complex(-0.2, 0.3)};
        poly.fd = FdScheme{4, 1e-4, true};
        poly.csv = "p.csv";
        jobs.push_back(poly);
        for (const auto& job : jobs) {
            const JobSpec back = parse_job(Json::parse(echo(job).dump()));
            m.add(back == job ? 0.0 : 1.0, job.name);
        }
        return detail::verdict(m);
    }

    CheckResult csv_determinism() {
        detail::Measure m{0.0};
        JobSpec job = preset("figure1a");
        if (!full()) job.range->points = 50;
        std::string reference;
        for (unsigned w : {1u, 3u, 1u, 4u}) {
            std::ostringstream os;
            write_csv(os, run_sweep(job, w).rows, job.sqfi_mode);
            if (reference.empty()) reference = os.str();
            m.add(os.str() == reference ? 0.0 : 1.0, std::to_string(w) + " workers");
        }
        return detail::verdict(m);
    }

    // ---- full only

    CheckResult figure1() {
        detail::Measure m{0.0};
        for (const char* name : {"figure1a", "figure1b"}) {
            const JobSpec job = preset(name);
            const auto rows = run_sweep(job, opt_.workers).rows;
            const double ep = std::get<NonreciprocalModel>(job.model).exceptional_points().back();
            std::size_t near = 0;
            for (std::size_t i = 1; i < rows.size(); ++i)
                if (std::abs(rows[i].sample.theta - (ep + 1e-3)) < std::abs(rows[near].sample.theta - (ep + 1e-3)))
                    near = i;
            m.add(rows[near].sample.cqfi > 1e3 ? 0.0 : 1.0, std::string(name) + " cqfi > 1e3");
            bool monotone = true;
            double naive = 0.0;
            for (std::size_t i = 0; i < 20; ++i) {
                monotone = monotone && rows[i].sample.cqfi > rows[i + 1].sample.cqfi;
                naive = std::max(naive, rows[i].sample.sqfi_flat);
            }
            naive = std::max(naive, rows[20].sample.sqfi_flat);
            m.add(monotone ? 0.0 : 1.0, std::string(name) + " monotone");
            m.add(naive < 1e2 ? 0.0 : 1.0, std::string(name) + " sqfi < 1e2");
        }
        return detail::verdict(m);
    }
};

inline VerifyReport run_verify(const VerifyOptions& options) { return Verifier(options).run(); }

inline void print_report(std::ostream& os, const VerifyReport& rep) {
    for (const auto& c : rep.checks) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g (tol %.3g)", c.measured, c.tolerance);
        os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << buf << ", " << c.detail << '\n';
    }
    std::size_t failed = 0;
    for (const auto& c : rep.checks) failed += c.passed ? 0 : 1;
    os << (rep.passed() ? "verify: all " : "verify: ") << rep.checks.size() - failed << '/' << rep.checks.size()
       << " checks passed (" << (rep.level == VerifyLevel::full ? "full" : "fast") << ", seed " << rep.seed << ")\n";
}

} // namespace etaqfi
