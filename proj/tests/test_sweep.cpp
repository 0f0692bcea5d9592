#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <numbers>
#include <sstream>

#include "etaqfi/sweep.hpp"
#include "test_support.hpp"

using namespace etaqfi;
using namespace etaqfi::testing;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

Json base_config() {
    return Json::parse(R"({"model": {"type": "nonreciprocal", "parameterization": "additive", "delta": 0.5},
                           "theta": 0.0, "time": 3.141592653589793})");
}

std::string config_error(const Json& j) {
    try {
        (void)parse_job(j, 1e-6);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config_error);
        return e.what();
    }
    FAIL("config accepted: " << j.dump());
    return {};
}

std::string csv_of(const SweepResult& r) {
    std::ostringstream os;
    write_csv(os, r.rows, r.job.sqfi_mode);
    return os.str();
}

JobSpec sweep_job(ModelSpec model, double lo, double hi, std::size_t n, double t) {
    JobSpec job;
    job.model = std::move(model);
    job.gauge = default_gauge(job.model);
    job.range = ThetaRange{lo, hi, n, GridKind::uniform};
    job.time = t;
    return job;
}

} // namespace

TEST_CASE("config parsing", "[sweep][config]") {
    SECTION("defaults are resolved") {
        const JobSpec job = parse_job(base_config(), 1e-6);
        CHECK(job.theta == 0.0);
        CHECK_FALSE(job.range);
        CHECK(job.probe == ProbeKind::ground);
        CHECK(job.gauge == Gauge::closed_form);
        CHECK(job.fd == FdScheme{});
        CHECK(job.sqfi_mode == SqfiMode::hermitian);
    }
    SECTION("field-level errors") {
        Json j = base_config();
        j.erase("model");
        CHECK_THAT(config_error(j), ContainsSubstring("model: missing"));

        j = base_config();
        j["colour"] = "red";
        CHECK_THAT(config_error(j), ContainsSubstring("colour: unknown field"));

        j = base_config();
        j["model"]["delta"] = "half";
        CHECK_THAT(config_error(j), ContainsSubstring("model.delta"));

        j = base_config();
        j["model"]["delta"] = 1.0;
        j["model"]["parameterization"] = "multiplicative";
        CHECK_THAT(config_error(j), ContainsSubstring("model:"));

        j = base_config();
        j["probe"] = Json::parse("[[1, 0], [0, 0], [0, 0]]");
        CHECK_THAT(config_error(j), ContainsSubstring("probe: dimension 3"));

        j = base_config();
        j["probe"] = Json::parse("[[1, 0], [0]]");
        CHECK_THAT(config_error(j), ContainsSubstring("probe[1]"));

        j = base_config();
        j.erase("theta");
        CHECK_THAT(config_error(j), ContainsSubstring("theta"));

        j = base_config();
        j["theta_min"] = 1.0;
        j["theta_max"] = 0.0;
        j["theta_points"] = 10;
        CHECK_THAT(config_error(j), ContainsSubstring("theta_min"));

        j["theta_max"] = 2.0;
        j["theta_points"] = 1;
        CHECK_THAT(config_error(j), ContainsSubstring("theta_points"));

        j = base_config();
        j["fd"] = {{"order", 3}};
        CHECK_THAT(config_error(j), ContainsSubstring("fd"));

        j = base_config();
        j["gauge"] = "sideways";
        CHECK_THAT(config_error(j), ContainsSubstring("gauge"));

        j = Json::parse(R"({"model": {"type": "polynomial", "coefficients": [[[0, 1], [1, 0]]]},
                            "theta": 0, "time": 1, "gauge": "closed-form"})");
        CHECK_THAT(config_error(j), ContainsSubstring("gauge"));

        j = Json::parse(R"({"model": {"type": "polynomial", "coefficients": [[[0, 1], [1, 0]], [[1]]]},
                            "theta": 0, "time": 1})");
        CHECK_THAT(config_error(j), ContainsSubstring("model.coefficients[1]"));
    }
    SECTION("invalid JSON text") {
        try {
            (void)parse_job_text("{not json");
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::config_error);
        }
    }
    SECTION("complex entries and explicit probes") {
        const Json j = Json::parse(R"({"model": {"type": "polynomial",
                                        "coefficients": [[[0, [0, -1]], [[0, 1], 0]], [[1, 0], [0, -1]]]},
                                        "theta": 0.2, "time": 1, "probe": [[0.6, 0], [0, 0.8]]})");
        const JobSpec job = parse_job(j, 1e-6);
        const auto& p = std::get<PolynomialModel>(job.model);
        CHECK(p.coefficients[0] == pauli_y());
        CHECK(job.gauge == Gauge::entry11);
        CHECK(job.amplitudes == (Ket{0.6, Complex(0, 0.8)}));
    }
}

TEST_CASE("spec echo round-trips", "[sweep][config][property]") {
    for (const auto& [name, _] : preset_configs()) {
        const JobSpec job = preset(name);
        CHECK(job.name == name);
        CHECK(parse_job(Json::parse(echo(job).dump()), 1e-6) == job);
    }
    JobSpec job = sweep_job(PtModel{0.5, 0.3, 1.7}, -0.2, 0.4, 7, 2.0);
    job.probe = ProbeKind::optimal;
    job.probe_phase = 0.25;
    job.fd = FdScheme{4, 3e-5, true};
    job.sqfi_mode = SqfiMode::naive;
    job.csv = "out/x.csv";
    job.report = "out/x.json";
    job.range->grid = GridKind::graded;
    CHECK(parse_job(Json::parse(echo(job).dump()), 1e-6) == job);
    // the echo carries the resolved step, so a different default does not leak in
    CHECK(parse_job(echo(job), 1e-3).fd.step == 3e-5);
}

TEST_CASE("ETAQFI_FD_STEP", "[sweep][config]") {
    ::unsetenv("ETAQFI_FD_STEP");
    CHECK(default_fd_step() == 1e-6);
    ::setenv("ETAQFI_FD_STEP", "2.5e-5", 1);
    CHECK(default_fd_step() == 2.5e-5);
    CHECK(parse_job(base_config()).fd.step == 2.5e-5);
    Json j = base_config();
    j["fd"] = {{"step", 1e-4}};
    CHECK(parse_job(j).fd.step == 1e-4);
    ::setenv("ETAQFI_FD_STEP", "tiny", 1);
    CHECK_THROWS_AS(default_fd_step(), Error);
    ::unsetenv("ETAQFI_FD_STEP");
}

TEST_CASE("theta grids and EP snapping", "[sweep]") {
    SECTION("uniform and graded grids hit both ends") {
        const auto u = theta_grid({-1.0, 1.0, 5, GridKind::uniform});
        CHECK(u == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
        const auto g = theta_grid({0.0, 1.0, 5, GridKind::graded});
        CHECK(g == std::vector<double>{0.0, 0.0625, 0.25, 0.5625, 1.0});
    }
    SECTION("a grid point on the EP moves up by half a step") {
        const auto sys = make_system(NonreciprocalModel{});
        const auto s = snap_grid(sys, theta_grid({-1.0, 1.0, 5, GridKind::uniform}));
        CHECK(s.theta == std::vector<double>{-1.0, -0.25, 0.0, 0.5, 1.0});
        CHECK(s.snapped == 1);
        CHECK(s.excluded.empty());
    }
    SECTION("last point snaps downward, unresolvable points are dropped") {
        ParameterizedSystem sys = make_system(NonreciprocalModel{});
        sys.validate = [](double th) {
            if (std::abs(th) < 0.6) throw Error(ErrorCode::at_exceptional_point, "test");
        };
        const auto s = snap_grid(sys, {-1.0, 0.0, 1.0});
        CHECK(s.theta == std::vector<double>{-1.0, 1.0});
        CHECK(s.excluded == std::vector<double>{0.0});

        sys.validate = [](double th) {
            if (th == 1.0) throw Error(ErrorCode::at_exceptional_point, "test");
        };
        CHECK(snap_grid(sys, {0.0, 0.5, 1.0}).theta == std::vector<double>{0.0, 0.5, 0.75});
    }
}

TEST_CASE("analyze_point", "[sweep]") {
    SECTION("additive nonreciprocal δ = 0.5, θ = 0, t = π: sqfi = cqfi") {
        JobSpec job = parse_job(base_config(), 1e-6);
        const auto r = analyze_point(make_system(job.model, job.gauge), job, 0.0);
        CHECK(r.sample.unflagged());
        CHECK_THAT(r.sample.cqfi, WithinRel(r.sample.sqfi, 1e-6));
        CHECK(r.sample.k_diag == 0.0);
        CHECK(r.bound_applicable);
        CHECK(bound_holds(r.sample));
    }
    SECTION("PT, θ = 0, t = 0.001: bound ≈ (16/3)t²") {
        JobSpec job = sweep_job(PtModel{}, 0, 1, 2, 0.001);
        const auto r = analyze_point(make_system(job.model, job.gauge), job, 0.0);
        CHECK(r.sample.flags == flag_bound_small_t);
        CHECK_THAT(r.sample.bound, WithinRel(16.0 / 3.0 * 1e-6, 1e-8));
    }
    SECTION("optimal probe saturates the bound") {
        JobSpec job = sweep_job(PtModel{}, 0, 1, 2, 0.001);
        job.probe = ProbeKind::optimal;
        const auto r = analyze_point(make_system(job.model, job.gauge), job, 0.0);
        CHECK(r.sample.cqfi >= 0.99 * r.sample.bound);
        CHECK(bound_holds(r.sample));
    }
    SECTION("η = I polynomial model: sqfi = cqfi") {
        JobSpec job = sweep_job(PolynomialModel{{pauli_x(), pauli_z()}}, 0, 1, 2, 1.0);
        job.gauge = Gauge::entry11;
        job.probe = ProbeKind::amplitudes;
        job.amplitudes = Ket{0.6, Complex(0, 0.8)};
        const auto r = analyze_point(make_system(job.model, job.gauge), job, 0.3);
        CHECK(std::abs(r.sample.sqfi - r.sample.cqfi) <= 1e-10);
        CHECK(r.sample.term_rot == 0.0);
    }
    SECTION("broken phase yields a flagged row with empty numbers") {
        JobSpec job = parse_job(base_config(), 1e-6);
        const auto r = analyze_point(make_system(job.model, job.gauge), job, -1.0);
        CHECK(r.sample.flags == flag_broken_phase);
        CHECK(std::isnan(r.sample.cqfi));
        CHECK(std::isnan(r.sample.bound));
        CHECK_FALSE(r.sample.k_diag);
        CHECK_THAT(r.sample.error, ContainsSubstring("BrokenPhase"));
    }
    SECTION("out-of-domain points fail softly") {
        JobSpec job = sweep_job(NonreciprocalModel{Parameterization::multiplicative, 0.5}, 0.1, 1, 2, 0.1);
        const auto r = analyze_point(make_system(job.model, job.gauge), job, -0.5);
        CHECK(r.sample.flags == flag_failed);
        CHECK_THAT(r.sample.error, ContainsSubstring("OutOfDomain"));
    }
}

TEST_CASE("sweeps", "[sweep]") {
    SECTION("partial failure: broken-phase rows are kept, EP points snapped") {
        const JobSpec job = sweep_job(NonreciprocalModel{}, -1.5, 1.0, 11, 1.0);
        const auto r = run_sweep(job);
        CHECK(r.rows.size() == 11);
        CHECK(r.grid.snapped == 1); // −0.5
        std::size_t broken = 0;
        for (const auto& row : r.rows) {
            if (row.sample.flags & flag_broken_phase) {
                ++broken;
                CHECK(row.sample.theta < -0.5);
            } else {
                CHECK(row.sample.unflagged());
            }
        }
        CHECK(broken == 4); // −1.5, −1.25, −1.0, −0.75
        const Summary sm = summarize(r.rows);
        CHECK(sm.failed == 4);
        CHECK(sm.duality_max_deviation <= 1e-6);
    }
    SECTION("row count equals grid points minus exclusions") {
        const JobSpec job = preset("figure1a");
        const auto r = run_sweep(job, 2);
        CHECK(r.rows.size() + r.grid.excluded.size() == job.range->points);
        for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].sample.theta > r.rows[i - 1].sample.theta);
        const Json rep = sweep_report(r);
        CHECK(rep["rows"].size() == r.rows.size());
        CHECK(rep["summary"]["bound_violations"] == 0);
        CHECK(rep["summary"]["argmax_theta"] == -0.499);
        CHECK(parse_job(rep["spec"], 1e-6) == job);
    }
    SECTION("multiplicative preset: bound column constant = 4t²") {
        const JobSpec job = preset("multiplicative");
        for (const auto& row : run_sweep(job).rows) CHECK_THAT(row.sample.bound, WithinRel(4e-6, 1e-8));
    }
    SECTION("output is identical across worker counts") {
        JobSpec job = preset("figure1b");
        job.range->points = 60;
        const std::string ref = csv_of(run_sweep(job, 1));
        for (unsigned w : {2u, 3u, 8u}) CHECK(csv_of(run_sweep(job, w)) == ref);
        CHECK(sweep_report(run_sweep(job, 1)).dump() == sweep_report(run_sweep(job, 5)).dump());
    }
    SECTION("analyze job refuses to sweep") {
        CHECK_THROWS_AS(run_sweep(parse_job(base_config(), 1e-6)), Error);
    }
}

TEST_CASE("CSV format", "[sweep][csv]") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(-0.5) == "-0.5");
    CHECK(format_number(kNaN).empty());

    std::vector<PointResult> rows(2);
    rows[0].sample.theta = 0.25;
    rows[0].sample.time = kPi;
    rows[0].sample.sqfi = 2.0;
    rows[0].sample.sqfi_flat = 1.0;
    rows[0].sample.cqfi = 3.0;
    rows[0].sample.bound = 4.0;
    rows[0].sample.term_rot = 0.0;
    rows[0].sample.term_cross = -1.0;
    rows[0].sample.k_diag = 0.5;
    rows[0].sample.flags = flag_near_ep | flag_bound_small_t;
    rows[1].sample.theta = -1.0;
    rows[1].sample.time = 1.0;
    rows[1].sample.flags = flag_broken_phase;

    std::ostringstream os;
    write_csv(os, rows, SqfiMode::hermitian);
    CHECK(os.str() == "theta,t,sqfi,cqfi,bound,term_rot,term_cross,k_diag,flags\n"
                      "0.25,3.1415926535897931,2,3,4,0,-1,0.5,NearEP|BoundSmallT\n"
                      "-1,1,,,,,,,BrokenPhase\n");
    std::ostringstream naive;
    write_csv(naive, rows, SqfiMode::naive);
    CHECK_THAT(naive.str(), ContainsSubstring("\n0.25,3.1415926535897931,1,3,"));
}

TEST_CASE("analyze report", "[sweep]") {
    const Json rep = analyze_report(parse_job(base_config(), 1e-6));
    CHECK(rep["rows"].size() == 1);
    CHECK(rep["diagnostics"]["positive_definite"] == true);
    CHECK(rep["diagnostics"]["counterpart_hermiticity"].get<double>() <= 1e-12);
    CHECK(rep["diagnostics"]["pseudo_hermiticity_residual"].get<double>() <= 1e-10);
    CHECK(rep["provenance"]["gauge"] == "closed-form");
    CHECK(rep["spec"]["fd"]["step"] == 1e-6);

    Json broken = base_config();
    broken["theta"] = -1.0;
    try {
        (void)analyze_report(parse_job(broken, 1e-6));
        FAIL("broken phase accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::broken_phase);
    }
}
