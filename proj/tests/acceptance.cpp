// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "etaqfi/etaqfi.hpp"

#ifndef ETAQFI_CLI_PATH
#error "ETAQFI_CLI_PATH must name the etaqfi executable"
#endif

using namespace etaqfi;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

JobSpec sweep(ModelSpec model, double lo, double hi, std::size_t n, double t, ProbeKind probe = ProbeKind::ground) {
    JobSpec job;
    job.model = std::move(model);
    job.gauge = default_gauge(job.model);
    job.range = ThetaRange{lo, hi, n, GridKind::uniform};
    job.time = t;
    job.probe = probe;
    return job;
}

Outcome duality(const JobSpec& job, double time_limit) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_sweep(job).rows;
    const double dt = seconds_since(t0);
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& r : rows) {
        const QfiSample& s = r.sample;
        if (!s.unflagged()) continue;
        ++checked;
        worst = std::max(worst, std::abs(s.sqfi - s.cqfi) / std::max(1.0, s.sqfi));
    }
    return {checked >= job.range->points / 2 && worst <= 1e-6 && dt < time_limit,
            fmt("max |sqfi - cqfi|/max(1, sqfi) = %.3g over %g unflagged points, %.2f s", worst,
                static_cast<double>(checked), dt)};
}

// (δ² + 2θδ + 1)² / (δ(δ + θ)(δθ + 1))·t²
double nonreciprocal_bound(double delta, double theta, double t) {
    const double num = delta * delta + 2.0 * theta * delta + 1.0;
    return num * num / (delta * (delta + theta) * (delta * theta + 1.0)) * t * t;
}

// 4(s + θ)² / ((s + θ)² − r² sin²φ)·t²
double pt_bound(double r, double phi, double s, double theta, double t) {
    const double sp = s + theta, rs = r * std::sin(phi);
    return 4.0 * sp * sp / (sp * sp - rs * rs) * t * t;
}

Outcome bound_formulas() {
    const double t = 1e-3;
    double worst = 0.0;
    const auto nr = make_system(NonreciprocalModel{});
    for (double th : {0.0, 0.25, 0.5}) {
        const double b = qfi_bound(nr.counterpart_curve(), th, t).value;
        worst = std::max(worst, std::abs(b - nonreciprocal_bound(0.5, th, t)) / nonreciprocal_bound(0.5, th, t));
    }
    const auto pt = make_system(PtModel{});
    for (double th : {0.0, 0.5, 1.0}) {
        const double b = qfi_bound(pt.counterpart_curve(), th, t).value;
        const double ref = pt_bound(1.0, kPi / 2, 2.0, th, t);
        worst = std::max(worst, std::abs(b - ref) / ref);
    }
    const double c1 = std::abs(nonreciprocal_bound(0.5, 0.0, t) - 6.25 * t * t) / (6.25 * t * t);
    const double c2 = std::abs(pt_bound(1.0, kPi / 2, 2.0, 0.0, t) - 16.0 / 3.0 * t * t) / (16.0 / 3.0 * t * t);
    const double c3 = std::abs(qfi_bound(nr.counterpart_curve(), 0.0, t).value - 6.25 * t * t) / (6.25 * t * t);
    const double c4 = std::abs(qfi_bound(pt.counterpart_curve(), 0.0, t).value - 16.0 / 3.0 * t * t) / (16.0 / 3.0 * t * t);
    const double closed = std::max({c1, c2, c3, c4});
    return {worst <= 1e-8 && closed <= 1e-8,
            fmt("max rel. deviation from closed forms %.3g; 6.25t^2 and (16/3)t^2 reproduced to %.3g", worst, closed)};
}

Outcome saturation() {
    double worst = std::numeric_limits<double>::infinity();
    for (const ModelSpec& m : {ModelSpec{NonreciprocalModel{}}, ModelSpec{PtModel{}}}) {
        JobSpec job = sweep(m, 0.0, 1.0, 2, 1e-3, ProbeKind::optimal);
        const auto r = analyze_point(make_system(job.model, job.gauge), job, 0.0);
        worst = std::min(worst, r.sample.cqfi / r.sample.bound);
    }
    return {worst >= 0.99, fmt("min cqfi/bound = %.9f", worst)};
}

Outcome figure1() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"figure1a", "figure1b"}) {
        const JobSpec job = preset(name);
        const auto rows = run_sweep(job).rows;
        const double ep = std::get<NonreciprocalModel>(job.model).exceptional_points().back();
        std::size_t near = 0;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (std::abs(rows[i].sample.theta - (ep + 1e-3)) < std::abs(rows[near].sample.theta - (ep + 1e-3))) near = i;
        // last 20 points approaching the EP are the first 20 of the ascending grid
        bool monotone = true;
        double sqfi_max = 0.0;
        for (std::size_t i = 0; i < 20; ++i) monotone = monotone && rows[i].sample.cqfi > rows[i + 1].sample.cqfi;
        for (std::size_t i = 0; i <= 20; ++i) sqfi_max = std::max(sqfi_max, rows[i].sample.sqfi_flat);
        const double c = rows[near].sample.cqfi;
        ok = ok && c > 1e3 && monotone && sqfi_max < 1e2;
        detail += std::string(name) + fmt(": cqfi(θ_EP+1e-3) = %.4g, monotone = %g, max sqfi = %.4g; ", c,
                                          monotone ? 1.0 : 0.0, sqfi_max);
    }
    const double dt = seconds_since(t0);
    return {ok && dt < 60.0, detail + fmt("%.2f s", dt)};
}

Outcome dual_path() {
    double worst = 0.0;
    const FdScheme fd;
    const auto nr = make_system(NonreciprocalModel{});
    const auto pt = make_system(PtModel{});
    struct Family {
        StateCurve psi;
        OperatorCurve eta, sim;
        double lo, hi;
    };
    const Family fams[] = {
        {nr.state_curve(Ket{1.0, 0.0}, 1.0), nr.metric_curve(), nr.similarity_curve(), -0.4, 1.0},
        {pt.state_curve(Ket{1.0, 0.0}, 1.0), pt.metric_curve(), pt.similarity_curve(), -0.8, 1.0},
        {fixtures::RotatingMetric::state_curve(1.0, Ket{1.0, 0.0}), fixtures::RotatingMetric::eta_curve(),
         OperatorCurve{fixtures::RotatingMetric::similarity, nullptr}, -0.7, 0.7}};
    double rotating_a = 0.0;
    for (const auto& f : fams)
        for (int i = 0; i < 50; ++i) {
            const double th = f.lo + (f.hi - f.lo) * i / 49.0;
            const auto tb = track_eigenbasis(f.eta, {th}, fd);
            worst = std::max(worst, identity_residual(f.psi, f.eta, tb, th, fd, &f.sim).relative());
            if (&f == &fams[2]) rotating_a = std::max(rotating_a, norm_fro(operator_a(f.eta, tb, th, fd)));
        }
    return {worst <= 1e-5 && rotating_a > 0.1,
            fmt("max relative residual %.3g over 150 points (rotating family max |A| = %.3g)", worst, rotating_a)};
}

// ∂_θ exp(−i(H0 + θH1)t) by divided differences in the eigenbasis
Operator exp_derivative(const Operator& h, const Operator& h1, double t) {
    const auto he = eig_hermitian(h);
    const std::size_t n = h.dim();
    const Operator g = he.basis.adjoint() * h1 * he.basis;
    Operator phi(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double lj = he.values[j], lk = he.values[k];
            const Complex ej = std::exp(-kImag * lj * t), ek = std::exp(-kImag * lk * t);
            phi(j, k) = (std::abs(lj - lk) > 1e-9 ? (ej - ek) / (lj - lk) : -kImag * t * ej) * g(j, k);
        }
    return he.basis * phi * he.basis.adjoint();
}

Outcome reduction() {
    std::mt19937_64 rng(2024);
    double gap = 0.0, oracle_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 3;
        const Operator h0 = random_hermitian(rng, n), h1 = random_hermitian(rng, n);
        Ket p0 = random_ket(rng, n);
        p0 /= Complex(norm(p0));
        const double t = 0.4 + 0.15 * trial, th = -0.2 + 0.03 * trial;
        const StateCurve c{[=](double x) { return evolve(h0 + h1 * Complex(x), p0, t); }, nullptr};
        const double fc = cqfi(c, constant_curve(Operator::identity(n)), th);
        gap = std::max(gap, std::abs(fc - sqfi(c, th)));
        const Operator h = h0 + h1 * Complex(th);
        const Ket g = expm(-kImag * t * h).adjoint() * exp_derivative(h, h1, t) * p0;
        const double oracle = 4.0 * norm_squared(g - p0 * inner(p0, g));
        oracle_gap = std::max(oracle_gap, std::abs(fc - oracle) / std::max(1.0, oracle));
    }
    return {gap <= 1e-10 && oracle_gap <= 1e-8,
            fmt("max |cqfi - sqfi| = %.3g, max deviation from 4|(U'dU psi0)_perp|^2 = %.3g (20 cases)", gap,
                oracle_gap)};
}

Outcome conservation() {
    double drift = 0.0, flat_gap = 0.0;
    const double th = 0.3;
    const Ket probe{1.0, 0.0};
    for (const auto& sys : {make_system(NonreciprocalModel{}), make_system(PtModel{})}) {
        const double start = evolve_probe(sys, th, 0.0, probe).eta_norm;
        for (int k = 0; k < 20; ++k) {
            const double t = 2.0 * kPi * k / 19.0;
            const auto e = evolve_probe(sys, th, t, probe);
            drift = std::max(drift, std::abs(e.eta_norm - start));
            if (sys.name == "nonreciprocal") {
                const double k1 = 2.0 + th, k2 = 0.5 + th, g = std::sqrt(k1 * k2);
                const double flat = std::pow(std::cos(g * t), 2) + std::pow(std::sin(g * t), 2) * k2 / k1;
                flat_gap = std::max(flat_gap, std::abs(e.flat_norm - flat));
            }
        }
    }
    return {drift <= 1e-10 && flat_gap <= 1e-12, fmt("eta-norm drift %.3g, flat-norm deviation %.3g", drift, flat_gap)};
}

Outcome kernels() {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int done = 0; done < 200;) {
        const std::size_t n = 1 + rng() % 8;
        const Operator a = random_operator(rng, n);
        const auto es = eig_general(a);
        if (es.vector_condition >= 1e6) continue;
        ++done;
        const Operator& p = es.right_vectors;
        const Operator rec = p * Operator::diagonal(std::span<const Complex>(es.values)) * inverse(p);
        worst = std::max(worst, norm_fro(a - rec) / norm_fro(a));
    }
    double expm_gap = 0.0;
    for (double th : {-0.4, 0.0, 0.3, 1.0})
        for (int k = 0; k <= 20; ++k) {
            const double t = 0.3 * k;
            const double k1 = 2.0 + th, k2 = 0.5 + th, g = std::sqrt(k1 * k2);
            const Operator h{{0.0, k1}, {k2, 0.0}};
            const Ket psi = expm(-kImag * t * h) * Ket{1.0, 0.0};
            const Ket ref{std::cos(g * t), -kImag * std::sqrt(k2 / k1) * std::sin(g * t)};
            expm_gap = std::max(expm_gap, norm(psi - ref));
        }
    return {worst <= 1e-9 && expm_gap <= 1e-12,
            fmt("eig_general residual %.3g (200 matrices), expm vs closed-form evolution %.3g", worst, expm_gap)};
}

Outcome verify_full() {
    const auto t0 = std::chrono::steady_clock::now();
    const int status = std::system(ETAQFI_CLI_PATH " verify --full > /dev/null");
    const double dt = seconds_since(t0);
    const int code = status != -1 && WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code == 0 && dt < 300.0, fmt("exit %g in %.2f s", code, dt)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"duality, nonreciprocal (100 points)",
         [] { return duality(sweep(NonreciprocalModel{}, -0.4, 1.0, 100, kPi), 10.0); }},
        {"duality, PT (100 points)", [] { return duality(sweep(PtModel{}, -0.8, 1.0, 100, 1.0), 1e9); }},
        {"small-t bound formulas", bound_formulas},
        {"optimal probe saturates the bound", saturation},
        {"figure 1 divergence", figure1},
        {"dual-path identity", dual_path},
        {"eta = I reduction", reduction},
        {"norm conservation", conservation},
        {"kernel quality", kernels},
        {"verify --full", verify_full},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.passed ? 0 : 1;
        std::printf("%s criterion %zu (%s): %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
