#pragma once

// Job configuration, per-point analysis, θ-sweeps and their CSV / JSON output.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "etaqfi/models.hpp"
#include "etaqfi/qfi.hpp"

#ifndef ETAQFI_VERSION
#define ETAQFI_VERSION "0.0.0"
#endif

namespace etaqfi {

using Json = nlohmann::ordered_json;

inline constexpr const char* kCsvHeader = "theta,t,sqfi,cqfi,bound,term_rot,term_cross,k_diag,flags";

enum class ProbeKind { ground, optimal, amplitudes };
enum class SqfiMode { hermitian, naive };
enum class GridKind { uniform, graded };

struct ThetaRange {
    double min = 0.0;
    double max = 1.0;
    std::size_t points = 2;
    GridKind grid = GridKind::uniform;

    friend bool operator==(const ThetaRange&, const ThetaRange&) = default;
};

struct JobSpec {
    std::string name = "job";
    ModelSpec model = NonreciprocalModel{};
    std::optional<double> theta; // analyze
    std::optional<ThetaRange> range; // sweep
    double time = 0.0;
    ProbeKind probe = ProbeKind::ground;
    Ket amplitudes; // ProbeKind::amplitudes
    double probe_phase = 0.0;
    FdScheme fd;
    Gauge gauge = Gauge::closed_form;
    SqfiMode sqfi_mode = SqfiMode::hermitian;
    std::string csv;
    std::string report;

    friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

// ---------------------------------------------------------------------------
// config parsing

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::config_error, field + ": " + msg);
}

inline void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) config_fail(where.empty() ? key : where + "." + key, "unknown field");
    }
}

inline double get_real(const Json& obj, const std::string& key, const std::string& field) {
    const auto& v = obj.at(key);
    if (!v.is_number()) config_fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_fail(field, "must be finite");
    return x;
}

inline double get_real(const Json& obj, const std::string& key, const std::string& field, double fallback) {
    return obj.contains(key) ? get_real(obj, key, field) : fallback;
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& field) {
    const auto& v = obj.at(key);
    if (!v.is_string()) config_fail(field, "expected a string");
    return v.get<std::string>();
}

inline Complex parse_complex(const Json& v, const std::string& field) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        config_fail(field, "complex numbers are [re, im] pairs");
    }
    const Complex z{v[0].get<double>(), v[1].get<double>()};
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) config_fail(field, "must be finite");
    return z;
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Operator parse_matrix(const Json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) config_fail(field, "expected a non-empty array of rows");
    const std::size_t n = v.size();
    std::vector<Complex> entries;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string row = field + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != n) config_fail(row, "matrix must be square");
        for (std::size_t j = 0; j < n; ++j) entries.push_back(parse_complex(v[i][j], row + "[" + std::to_string(j) + "]"));
    }
    return Operator(n, std::move(entries));
}

inline Json matrix_json(const Operator& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(complex_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Parameterization parse_parameterization(const std::string& s) {
    if (s == "additive") return Parameterization::additive;
    if (s == "multiplicative") return Parameterization::multiplicative;
    if (s == "raw") return Parameterization::raw;
    config_fail("model.parameterization", "expected additive, multiplicative or raw, got '" + s + "'");
}

inline ModelSpec parse_model(const Json& m) {
    if (!m.is_object()) config_fail("model", "expected an object");
    if (!m.contains("type")) config_fail("model.type", "missing");
    const std::string type = get_string(m, "type", "model.type");
    if (type == "nonreciprocal") {
        reject_unknown(m, "model", {"type", "parameterization", "delta", "omega", "k1", "k2"});
        NonreciprocalModel nr;
        if (m.contains("parameterization")) {
            nr.parameterization = parse_parameterization(get_string(m, "parameterization", "model.parameterization"));
        }
        nr.delta = get_real(m, "delta", "model.delta", nr.delta);
        nr.omega = get_real(m, "omega", "model.omega", nr.omega);
        nr.k1 = get_real(m, "k1", "model.k1", nr.k1);
        nr.k2 = get_real(m, "k2", "model.k2", nr.k2);
        if (nr.parameterization == Parameterization::raw && (!m.contains("k1") || !m.contains("k2"))) {
            config_fail("model", "raw parameterization needs k1 and k2");
        }
        return nr;
    }
    if (type == "pt") {
        reject_unknown(m, "model", {"type", "r", "phi", "s"});
        PtModel pt;
        pt.r = get_real(m, "r", "model.r", pt.r);
        pt.phi = get_real(m, "phi", "model.phi", pt.phi);
        pt.s = get_real(m, "s", "model.s", pt.s);
        return pt;
    }
    if (type == "polynomial") {
        reject_unknown(m, "model", {"type", "coefficients"});
        if (!m.contains("coefficients") || !m["coefficients"].is_array() || m["coefficients"].empty()) {
            config_fail("model.coefficients", "expected a non-empty array of matrices");
        }
        PolynomialModel p;
        const auto& cs = m["coefficients"];
        for (std::size_t i = 0; i < cs.size(); ++i) {
            p.coefficients.push_back(parse_matrix(cs[i], "model.coefficients[" + std::to_string(i) + "]"));
            if (p.coefficients.back().dim() != p.coefficients.front().dim()) {
                config_fail("model.coefficients[" + std::to_string(i) + "]", "dimension differs from coefficient 0");
            }
        }
        return p;
    }
    config_fail("model.type", "expected nonreciprocal, pt or polynomial, got '" + type + "'");
}

inline Json model_json(const ModelSpec& spec) {
    return std::visit(
        [](const auto& m) -> Json {
            using T = std::decay_t<decltype(m)>;
            Json j;
            if constexpr (std::is_same_v<T, NonreciprocalModel>) {
                j["type"] = "nonreciprocal";
                j["parameterization"] = std::string(to_string(m.parameterization));
                j["delta"] = m.delta;
                j["omega"] = m.omega;
                j["k1"] = m.k1;
                j["k2"] = m.k2;
            } else if constexpr (std::is_same_v<T, PtModel>) {
                j["type"] = "pt";
                j["r"] = m.r;
                j["phi"] = m.phi;
                j["s"] = m.s;
            } else {
                j["type"] = "polynomial";
                j["coefficients"] = Json::array();
                for (const auto& c : m.coefficients) j["coefficients"].push_back(matrix_json(c));
            }
            return j;
        },
        spec);
}

inline std::size_t get_count(const Json& obj, const std::string& key, const std::string& field) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) config_fail(field, "expected a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace detail

/// FD step when the config omits fd.step: ETAQFI_FD_STEP if set, else 1e-6.
inline double default_fd_step() {
    const char* env = std::getenv("ETAQFI_FD_STEP");
    if (env == nullptr || *env == '\0') return FdScheme{}.step;
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 1e-12) || !std::isfinite(v)) {
        detail::config_fail("ETAQFI_FD_STEP", std::string("invalid step '") + env + "'");
    }
    return v;
}

inline JobSpec parse_job(const Json& j, double fd_step_default) {
    using namespace detail;
    if (!j.is_object()) config_fail("config", "expected a JSON object");
    reject_unknown(j, "", {"name", "model", "theta", "theta_min", "theta_max", "theta_points", "theta_grid", "time",
                           "probe", "probe_phase", "fd", "gauge", "sqfi_mode", "outputs"});
    JobSpec job;
    if (j.contains("name")) job.name = get_string(j, "name", "name");
    if (!j.contains("model")) config_fail("model", "missing");
    job.model = parse_model(j["model"]);
    const std::size_t dim = model_dim(job.model);

    if (j.contains("theta")) job.theta = get_real(j, "theta", "theta");
    const bool any_range = j.contains("theta_min") || j.contains("theta_max") || j.contains("theta_points");
    if (any_range) {
        for (const char* k : {"theta_min", "theta_max", "theta_points"}) {
            if (!j.contains(k)) config_fail(k, "missing (theta_min, theta_max and theta_points go together)");
        }
        ThetaRange r;
        r.min = get_real(j, "theta_min", "theta_min");
        r.max = get_real(j, "theta_max", "theta_max");
        r.points = get_count(j, "theta_points", "theta_points");
        if (!(r.min < r.max)) config_fail("theta_min", "must be below theta_max");
        if (r.points < 2) config_fail("theta_points", "must be at least 2");
        if (j.contains("theta_grid")) {
            const std::string g = get_string(j, "theta_grid", "theta_grid");
            if (g == "uniform") r.grid = GridKind::uniform;
            else if (g == "graded") r.grid = GridKind::graded;
            else config_fail("theta_grid", "expected uniform or graded, got '" + g + "'");
        }
        job.range = r;
    } else if (j.contains("theta_grid")) {
        config_fail("theta_grid", "needs theta_min, theta_max and theta_points");
    }
    if (!job.theta && !job.range) config_fail("theta", "give theta or theta_min/theta_max/theta_points");

    if (!j.contains("time")) config_fail("time", "missing");
    job.time = get_real(j, "time", "time");

    if (j.contains("probe")) {
        const auto& p = j["probe"];
        if (p.is_string()) {
            const std::string s = p.get<std::string>();
            if (s == "ground") job.probe = ProbeKind::ground;
            else if (s == "optimal") job.probe = ProbeKind::optimal;
            else config_fail("probe", "expected \"ground\", \"optimal\" or an array of [re, im]");
        } else if (p.is_array()) {
            job.probe = ProbeKind::amplitudes;
            std::vector<Complex> amps;
            for (std::size_t i = 0; i < p.size(); ++i) amps.push_back(parse_complex(p[i], "probe[" + std::to_string(i) + "]"));
            job.amplitudes = Ket(std::move(amps));
            if (job.amplitudes.size() != dim) {
                config_fail("probe", "dimension " + std::to_string(job.amplitudes.size()) + " does not match model dimension " +
                                         std::to_string(dim));
            }
            if (norm(job.amplitudes) == 0.0) config_fail("probe", "zero vector");
        } else {
            config_fail("probe", "expected a string or an array");
        }
    }
    job.probe_phase = get_real(j, "probe_phase", "probe_phase", 0.0);

    job.fd.step = fd_step_default;
    if (j.contains("fd")) {
        const auto& f = j["fd"];
        if (!f.is_object()) config_fail("fd", "expected an object");
        reject_unknown(f, "fd", {"order", "step", "richardson"});
        if (f.contains("order")) job.fd.order = static_cast<int>(get_count(f, "order", "fd.order"));
        job.fd.step = get_real(f, "step", "fd.step", job.fd.step);
        if (f.contains("richardson")) {
            if (!f["richardson"].is_boolean()) config_fail("fd.richardson", "expected true or false");
            job.fd.richardson = f["richardson"].get<bool>();
        }
    }
    try {
        job.fd.validate();
    } catch (const Error& e) {
        config_fail("fd", e.what());
    }

    job.gauge = default_gauge(job.model);
    if (j.contains("gauge")) {
        try {
            job.gauge = parse_gauge(get_string(j, "gauge", "gauge"));
        } catch (const Error& e) {
            config_fail("gauge", e.what());
        }
    }
    if (job.gauge == Gauge::closed_form && std::holds_alternative<PolynomialModel>(job.model)) {
        config_fail("gauge", "polynomial models have no closed-form metric");
    }

    if (j.contains("sqfi_mode")) {
        const std::string s = get_string(j, "sqfi_mode", "sqfi_mode");
        if (s == "hermitian") job.sqfi_mode = SqfiMode::hermitian;
        else if (s == "naive") job.sqfi_mode = SqfiMode::naive;
        else config_fail("sqfi_mode", "expected hermitian or naive, got '" + s + "'");
    }

    if (j.contains("outputs")) {
        const auto& o = j["outputs"];
        if (!o.is_object()) config_fail("outputs", "expected an object");
        reject_unknown(o, "outputs", {"csv", "report"});
        if (o.contains("csv")) job.csv = get_string(o, "csv", "outputs.csv");
        if (o.contains("report")) job.report = get_string(o, "report", "outputs.report");
    }

    try {
        std::visit([](const auto& m) { m.check(); }, job.model);
    } catch (const Error& e) {
        config_fail("model", e.what());
    }
    return job;
}

inline JobSpec parse_job(const Json& j) { return parse_job(j, default_fd_step()); }

inline JobSpec parse_job_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::config_error, std::string("invalid JSON: ") + e.what());
    }
    return parse_job(j);
}

inline JobSpec load_job(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::config_error, "cannot read config '" + path + "'");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_job_text(text);
}

/// Fully resolved job; parse_job(echo(job)) == job.
inline Json echo(const JobSpec& job) {
    Json j;
    j["name"] = job.name;
    j["model"] = detail::model_json(job.model);
    if (job.theta) j["theta"] = *job.theta;
    if (job.range) {
        j["theta_min"] = job.range->min;
        j["theta_max"] = job.range->max;
        j["theta_points"] = job.range->points;
        j["theta_grid"] = job.range->grid == GridKind::graded ? "graded" : "uniform";
    }
    j["time"] = job.time;
    switch (job.probe) {
    case ProbeKind::ground: j["probe"] = "ground"; break;
    case ProbeKind::optimal: j["probe"] = "optimal"; break;
    case ProbeKind::amplitudes:
        j["probe"] = Json::array();
        for (const auto& a : job.amplitudes) j["probe"].push_back(detail::complex_json(a));
        break;
    }
    j["probe_phase"] = job.probe_phase;
    j["fd"] = {{"order", job.fd.order}, {"step", job.fd.step}, {"richardson", job.fd.richardson}};
    j["gauge"] = std::string(to_string(job.gauge));
    j["sqfi_mode"] = job.sqfi_mode == SqfiMode::naive ? "naive" : "hermitian";
    Json outputs = Json::object();
    if (!job.csv.empty()) outputs["csv"] = job.csv;
    if (!job.report.empty()) outputs["report"] = job.report;
    j["outputs"] = outputs;
    return j;
}

// ---------------------------------------------------------------------------
// presets

inline const std::vector<std::pair<std::string, std::string>>& preset_configs() {
    // Near-EP panels start 1e-3 above θ_EP on a grid graded toward it.
    static const std::vector<std::pair<std::string, std::string>> presets{
        {"figure1a", R"({"name": "figure1a",
            "model": {"type": "nonreciprocal", "parameterization": "additive", "delta": 0.5},
            "theta_min": -0.499, "theta_max": 1.0, "theta_points": 400, "theta_grid": "graded",
            "time": 3.141592653589793, "probe": "ground", "sqfi_mode": "naive"})"},
        {"figure1b", R"({"name": "figure1b",
            "model": {"type": "nonreciprocal", "parameterization": "additive", "delta": 0.2},
            "theta_min": -0.199, "theta_max": 1.0, "theta_points": 400, "theta_grid": "graded",
            "time": 3.141592653589793, "probe": "ground", "sqfi_mode": "naive"})"},
        {"multiplicative", R"({"name": "multiplicative",
            "model": {"type": "nonreciprocal", "parameterization": "multiplicative", "delta": 0.5},
            "theta_min": 0.1, "theta_max": 2.0, "theta_points": 50,
            "time": 0.001, "probe": "ground"})"},
        {"pt-bound", R"({"name": "pt-bound",
            "model": {"type": "pt", "r": 1.0, "phi": 1.5707963267948966, "s": 2.0},
            "theta_min": -0.8, "theta_max": 1.0, "theta_points": 100,
            "time": 0.001, "probe": "optimal"})"},
    };
    return presets;
}

inline JobSpec preset(const std::string& name) {
    for (const auto& [n, text] : preset_configs()) {
        if (n == name) return parse_job_text(text);
    }
    std::string known;
    for (const auto& p : preset_configs()) known += (known.empty() ? "" : ", ") + p.first;
    throw Error(ErrorCode::config_error, "unknown preset '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// grids

inline std::vector<double> theta_grid(const ThetaRange& r) {
    std::vector<double> g(r.points);
    const double span = r.max - r.min;
    for (std::size_t i = 0; i < r.points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(r.points - 1);
        g[i] = r.min + span * (r.grid == GridKind::graded ? u * u : u);
    }
    g.back() = r.max;
    return g;
}

struct SnappedGrid {
    std::vector<double> theta;
    std::vector<double> excluded; // grid points with no EP-free neighbour
    std::size_t snapped = 0;
};

/// Points sitting on an exceptional point move by half the local spacing,
/// upward first, then downward, never leaving [θ_min, θ_max]; a point with no
/// EP-free candidate is dropped.
inline SnappedGrid snap_grid(const ParameterizedSystem& sys, const std::vector<double>& grid) {
    const auto at_ep = [&](double th) {
        try {
            sys.check_phase(th);
        } catch (const Error& e) {
            return e.code() == ErrorCode::at_exceptional_point;
        }
        return false;
    };
    SnappedGrid out;
    if (grid.empty()) return out;
    const double lo = grid.front(), hi = grid.back();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = grid[i];
        if (!at_ep(th)) {
            out.theta.push_back(th);
            continue;
        }
        const double h = grid.size() < 2 ? 0.0 : 0.5 * (i + 1 < grid.size() ? grid[i + 1] - th : th - grid[i - 1]);
        bool placed = false;
        for (double cand : {th + h, th - h}) {
            if (h > 0.0 && cand >= lo && cand <= hi && !at_ep(cand)) {
                out.theta.push_back(cand);
                ++out.snapped;
                placed = true;
                break;
            }
        }
        if (!placed) out.excluded.push_back(th);
    }
    return out;
}

// ---------------------------------------------------------------------------
// per-point analysis

struct PointResult {
    QfiSample sample;
    bool bound_applicable = false; // ∂_θU = 0 and S(θ)ψ₀ θ-stationary
};

inline constexpr double kStationaryBasis = 1e-8;
inline constexpr double kStationaryProbe = 1e-10;

inline Ket resolve_probe(const JobSpec& job, std::size_t dim, const Operator& h, const Operator& s) {
    switch (job.probe) {
    case ProbeKind::ground: return Ket::basis(dim, 0);
    case ProbeKind::amplitudes: return job.amplitudes;
    case ProbeKind::optimal: return optimal_probe(h, s, job.probe_phase).amplitudes;
    }
    return Ket::basis(dim, 0);
}

inline PointResult analyze_point(const ParameterizedSystem& sys, const JobSpec& job, double theta) {
    PointResult r;
    QfiSample& s = r.sample;
    s.theta = theta;
    s.time = job.time;
    const FdScheme& fd = job.fd;
    try {
        sys.check_phase(theta);

        const OperatorCurve eta = sys.metric_curve();
        const OperatorCurve sim = sys.similarity_curve();
        const Bound b = qfi_bound(sys.counterpart_curve(), theta, job.time, fd);
        s.bound = b.value;
        if (b.generator.small_t) s.flags |= flag_bound_small_t;

        const Ket probe = resolve_probe(job, sys.dim, b.generator.h, sim(theta));
        const StateCurve psi = sys.state_curve(probe, job.time);
        s.sqfi_flat = sqfi(psi, theta, fd);

        std::optional<TrackedBasis> tracked;
        try {
            tracked = track_eigenbasis(eta, {theta}, fd);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::tracking_lost) throw;
            s.flags |= flag_tracking_degenerate;
            s.error = e.what();
        }
        if (tracked) {
            const auto d = detail::decompose(psi, eta, *tracked, theta, fd, &sim);
            const unsigned keep = s.flags;
            const double flat = s.sqfi_flat, bound = s.bound;
            s = d.sample;
            s.flags |= keep;
            s.time = job.time;
            s.sqfi_flat = flat;
            s.bound = bound;
            if (s.k_diag && *s.k_diag > 0.0 && *s.k_diag < 1.0) {
                const double predicted = s.sqfi / ((1.0 - *s.k_diag) * (1.0 - *s.k_diag));
                if (std::abs(predicted - s.cqfi) > 1e-6 * std::abs(s.cqfi)) s.k_diag.reset();
            }
        } else {
            s.cqfi = cqfi(psi, eta, theta, fd);
            s.sqfi = sqfi(hermitian_side_curve(psi, eta, sim), theta, fd);
            if (metric_condition(eta(theta)) > kNearEpCondition) s.flags |= flag_near_ep;
        }

        if (tracked && norm_fro(tracked->derivative.front()) <= kStationaryBasis) {
            const StateCurve initial = hermitian_side_curve(constant_curve(probe), eta, sim);
            r.bound_applicable = sqfi(initial, theta, fd) <= kStationaryProbe;
        }
    } catch (const Error& e) {
        const double th = s.theta, t = s.time;
        s = QfiSample{};
        s.theta = th;
        s.time = t;
        s.flags = e.code() == ErrorCode::broken_phase ? flag_broken_phase : flag_failed;
        s.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    return r;
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepResult {
    JobSpec job;
    SnappedGrid grid;
    std::vector<PointResult> rows;
};

/// Points are independent; results land by index so the output does not
/// depend on the worker count.
inline SweepResult run_sweep(const JobSpec& job, unsigned workers = 1) {
    if (!job.range) throw Error(ErrorCode::config_error, "theta_min/theta_max/theta_points: required for a sweep");
    const ParameterizedSystem sys = make_system(job.model, job.gauge);
    SweepResult out;
    out.job = job;
    out.grid = snap_grid(sys, theta_grid(*job.range));
    const std::size_t n = out.grid.theta.size();
    out.rows.resize(n);

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    const auto work = [&](unsigned w) {
        try {
            for (std::size_t i = next++; i < n; i = next++) out.rows[i] = analyze_point(sys, job, out.grid.theta[i]);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

struct Summary {
    double max_cqfi = kNaN;
    double argmax_theta = kNaN;
    double duality_max_deviation = 0.0; // max |sqfi − cqfi|/max(1, sqfi) over unflagged rows
    std::size_t bound_violations = 0;
    std::size_t bound_checked = 0;
    std::size_t flagged = 0;
    std::size_t failed = 0;
};

inline bool bound_holds(const QfiSample& s) { return s.cqfi <= s.bound * (1.0 + 1e-6) + 1e-9; }

inline Summary summarize(const std::vector<PointResult>& rows) {
    Summary sm;
    for (const auto& r : rows) {
        const QfiSample& s = r.sample;
        if (s.flags & (flag_failed | flag_broken_phase)) ++sm.failed;
        if (std::isfinite(s.cqfi) && !(s.cqfi <= sm.max_cqfi)) {
            sm.max_cqfi = s.cqfi;
            sm.argmax_theta = s.theta;
        }
        if (!s.unflagged()) {
            ++sm.flagged;
            continue;
        }
        sm.duality_max_deviation =
            std::max(sm.duality_max_deviation, std::abs(s.sqfi - s.cqfi) / std::max(1.0, std::abs(s.sqfi)));
        if (r.bound_applicable) {
            ++sm.bound_checked;
            if (!bound_holds(s)) ++sm.bound_violations;
        }
    }
    return sm;
}

// ---------------------------------------------------------------------------
// output

inline std::string format_number(double x) {
    if (!std::isfinite(x)) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_csv(std::ostream& os, const std::vector<PointResult>& rows, SqfiMode mode) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        const QfiSample& s = r.sample;
        os << format_number(s.theta) << ',' << format_number(s.time) << ','
           << format_number(mode == SqfiMode::naive ? s.sqfi_flat : s.sqfi) << ',' << format_number(s.cqfi) << ','
           << format_number(s.bound) << ',' << format_number(s.term_rot) << ',' << format_number(s.term_cross) << ','
           << (s.k_diag ? format_number(*s.k_diag) : std::string()) << ',' << flags_to_string(s.flags) << '\n';
    }
}

inline Json number_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json sample_json(const PointResult& r) {
    const QfiSample& s = r.sample;
    Json j;
    j["theta"] = s.theta;
    j["t"] = s.time;
    j["sqfi"] = number_json(s.sqfi);
    j["sqfi_flat"] = number_json(s.sqfi_flat);
    j["cqfi"] = number_json(s.cqfi);
    j["bound"] = number_json(s.bound);
    j["term_rot"] = number_json(s.term_rot);
    j["term_cross"] = number_json(s.term_cross);
    j["closure_residual"] = number_json(s.closure_residual());
    j["k_diag"] = s.k_diag ? Json(*s.k_diag) : Json(nullptr);
    j["flags"] = flags_to_string(s.flags);
    j["bound_applicable"] = r.bound_applicable;
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

inline Json summary_json(const Summary& sm) {
    return {{"max_cqfi", number_json(sm.max_cqfi)},
            {"argmax_theta", number_json(sm.argmax_theta)},
            {"duality_max_deviation", sm.duality_max_deviation},
            {"bound_violations", sm.bound_violations},
            {"bound_checked", sm.bound_checked},
            {"flagged", sm.flagged},
            {"failed", sm.failed}};
}

inline Json provenance_json(const JobSpec& job) {
    Json p;
    p["tool"] = "etaqfi";
    p["version"] = ETAQFI_VERSION;
    p["gauge"] = std::string(to_string(job.gauge));
    p["fd"] = {{"order", job.fd.order}, {"step", job.fd.step}, {"richardson", job.fd.richardson}};
    p["sqfi_column"] = job.sqfi_mode == SqfiMode::naive
                           ? "naive: flat-renormalized SQFI of the pseudo-Hermitian state"
                           : "hermitian: SQFI of S(θ)ψ(θ), ψ η(θ)-normalized";
    p["normalization"] = "renormalized at every stencil point (flat for SQFI, η(θ') for CQFI)";
    if (job.range) {
        p["grid"] = job.range->grid == GridKind::graded ? "graded: θ_i = θ_min + (θ_max − θ_min)(i/(n−1))²"
                                                        : "uniform";
    }
    return p;
}

inline Json sweep_report(const SweepResult& r) {
    Json j;
    j["spec"] = echo(r.job);
    j["rows"] = Json::array();
    for (const auto& row : r.rows) j["rows"].push_back(sample_json(row));
    j["summary"] = summary_json(summarize(r.rows));
    j["summary"]["rows"] = r.rows.size();
    j["summary"]["snapped"] = r.grid.snapped;
    j["summary"]["excluded"] = r.grid.excluded;
    j["provenance"] = provenance_json(r.job);
    return j;
}

/// Single-θ analysis plus the metric diagnostics at that point.
inline Json analyze_report(const JobSpec& job) {
    if (!job.theta) throw Error(ErrorCode::config_error, "theta: required for analyze");
    const ParameterizedSystem sys = make_system(job.model, job.gauge);
    const double theta = *job.theta;
    sys.check_phase(theta);
    const PointResult r = analyze_point(sys, job, theta);
    if (r.sample.flags & flag_failed) throw Error(ErrorCode::eval_failure, r.sample.error);

    const MetricBundle b = sys.bundle(theta);
    const Operator hh = sys.counterpart_curve()(theta);
    Json diag;
    diag["hamiltonian"] = detail::matrix_json(sys.hamiltonian(theta));
    diag["eta"] = detail::matrix_json(b.eta);
    diag["eta_eigenvalues"] = b.lambda;
    diag["metric_condition"] = b.metric_condition();
    diag["pseudo_hermiticity_residual"] = b.residual_ph;
    diag["positive_definite"] = b.posdef;
    diag["vector_condition"] = b.vector_condition;
    diag["congruence_factor"] = number_json(b.congruence_factor);
    diag["congruence_residual"] = number_json(b.congruence_residual);
    diag["similarity"] = detail::matrix_json(b.s);
    diag["counterpart"] = detail::matrix_json(hh);
    diag["counterpart_hermiticity"] = hermiticity_defect(hh);

    Json j;
    j["spec"] = echo(job);
    j["rows"] = Json::array({sample_json(r)});
    j["diagnostics"] = diag;
    j["summary"] = summary_json(summarize({r}));
    j["provenance"] = provenance_json(job);
    return j;
}

} // namespace etaqfi
