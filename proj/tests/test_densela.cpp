#include <catch_amalgamated.hpp>

#include <numbers>

#include "etaqfi/densela.hpp"
#include "test_support.hpp"

using namespace etaqfi;
using namespace etaqfi::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Operator construction validates shape and finiteness", "[densela]") {
    CHECK_THROWS_AS((Operator{{1.0, 2.0}, {3.0}}), Error);
    CHECK_THROWS_AS(Operator(2, {1.0, 2.0, 3.0}), Error);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        Operator bad{{1.0, nan}, {0.0, 1.0}};
        FAIL("NaN entry accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::non_finite);
    }
}

TEST_CASE("eig_general on hand-solved matrices", "[densela]") {
    SECTION("identity") {
        const auto es = eig_general(Operator::identity(2));
        CHECK_THAT(es.values[0].real(), WithinAbs(1.0, 1e-15));
        CHECK_THAT(es.values[1].real(), WithinAbs(1.0, 1e-15));
        CHECK_FALSE(es.near_defective);
        CHECK_THAT(norm(es.right_vectors.column(0)), WithinAbs(1.0, 1e-15));
    }
    SECTION("nonreciprocal coupling: λ² = k1·k2 = 4") {
        const Operator m{{0.0, 4.0}, {1.0, 0.0}};
        const auto es = eig_general(m);
        CHECK_THAT(es.values[0].real(), WithinAbs(2.0, 1e-13));
        CHECK_THAT(es.values[1].real(), WithinAbs(-2.0, 1e-13));
        CHECK_THAT(es.values[0].imag(), WithinAbs(0.0, 1e-13));
        // right eigenvectors ∝ [2, ±1]/√5
        const Ket v0{2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0)};
        const Ket v1{2.0 / std::sqrt(5.0), -1.0 / std::sqrt(5.0)};
        CHECK(distance_up_to_phase(es.right_vectors.column(0), v0) < 1e-13);
        CHECK(distance_up_to_phase(es.right_vectors.column(1), v1) < 1e-13);
    }
    SECTION("Jordan block is flagged, not rejected") {
        const Operator m{{0.0, 1.0}, {0.0, 0.0}};
        const auto es = eig_general(m);
        CHECK_THAT(std::abs(es.values[0]), WithinAbs(0.0, 1e-14));
        CHECK_THAT(std::abs(es.values[1]), WithinAbs(0.0, 1e-14));
        CHECK(es.near_defective);
        CHECK(es.vector_condition > kNearDefectiveCondition);
    }
    SECTION("complex conjugate pair ordering: descending imaginary on equal real part") {
        const Operator m{{0.0, -1.0}, {1.0, 0.0}};
        const auto es = eig_general(m);
        CHECK_THAT(es.values[0].imag(), WithinAbs(1.0, 1e-14));
        CHECK_THAT(es.values[1].imag(), WithinAbs(-1.0, 1e-14));
    }
}

TEST_CASE("eig_general reconstruction on random well-conditioned matrices", "[densela][property]") {
    std::mt19937_64 rng(20240611);
    int tested = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t dim = 1 + trial % 8;
        const Operator m = random_operator(rng, dim);
        const auto es = eig_general(m);
        if (es.vector_condition >= 1e6) continue;
        ++tested;
        const Operator& p = es.right_vectors;
        const Operator rebuilt = p * Operator::diagonal(std::span<const Complex>(es.values)) * inverse(p);
        CHECK(distance(rebuilt, m) <= 1e-9 * norm_fro(m));
        for (std::size_t i = 0; i < dim; ++i) {
            const Ket v = p.column(i);
            CHECK_THAT(norm(v), WithinAbs(1.0, 1e-12));
            CHECK(norm(m * v - es.values[i] * v) <= 1e-10 * norm_fro(m));
        }
        for (std::size_t i = 1; i < dim; ++i) CHECK(es.values[i - 1].real() >= es.values[i].real() - 1e-12);
    }
    CHECK(tested > 150);
}

TEST_CASE("eig_hermitian", "[densela]") {
    SECTION("metric of the PT model at r=1, φ=π/2, s=2") {
        // η = sec α [[1, −i sin α], [i sin α, 1]] with sin α = 1/2
        const double sec = 2.0 / std::sqrt(3.0);
        const Operator eta{{sec, Complex(0, -0.5 * sec)}, {Complex(0, 0.5 * sec), sec}};
        const auto he = eig_hermitian(eta);
        CHECK_THAT(he.values[0], WithinRel(std::sqrt(3.0), 1e-13));
        CHECK_THAT(he.values[1], WithinRel(1.0 / std::sqrt(3.0), 1e-13));
    }
    SECTION("already diagonal") {
        const auto he = eig_hermitian(Operator::diagonal({1.0, 4.0}));
        CHECK(he.values == std::vector<double>{4.0, 1.0});
        CHECK(distance(he.basis, Operator{{0.0, 1.0}, {1.0, 0.0}}) == 0.0);
    }
    SECTION("agrees with eig_general on random Hermitian input") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const Operator m = random_hermitian(rng, 3);
            const auto he = eig_hermitian(m);
            const auto es = eig_general(m);
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK_THAT(he.values[i], WithinAbs(es.values[i].real(), 1e-10));
                CHECK_THAT(es.values[i].imag(), WithinAbs(0.0, 1e-10));
            }
        }
    }
    SECTION("rejects non-Hermitian input") {
        try {
            (void)eig_hermitian(Operator{{0.0, 1.0}, {2.0, 0.0}});
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::not_hermitian);
        }
    }
}

TEST_CASE("eig_hermitian basis is unitary and reconstructs", "[densela][property]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dim = 1 + trial % 10;
        const Operator m = random_hermitian(rng, dim, 2.0);
        const auto he = eig_hermitian(m);
        CHECK(distance(he.basis.adjoint() * he.basis, Operator::identity(dim)) <= 1e-12);
        const Operator rebuilt =
            he.basis * Operator::diagonal(std::span<const double>(he.values)) * he.basis.adjoint();
        CHECK(distance(rebuilt, m) <= 1e-12 * norm_fro(m));
        CHECK(std::is_sorted(he.values.rbegin(), he.values.rend()));
    }
}

TEST_CASE("expm", "[densela]") {
    SECTION("zero and diagonal") {
        CHECK(expm(Operator(3)) == Operator::identity(3));
        const auto e = expm(Operator::diagonal({0.3, -1.7}));
        CHECK_THAT(e(0, 0).real(), WithinRel(std::exp(0.3), 1e-14));
        CHECK_THAT(e(1, 1).real(), WithinRel(std::exp(-1.7), 1e-14));
        CHECK(std::abs(e(0, 1)) == 0.0);
    }
    SECTION("nonreciprocal evolution matches the closed-form cos/sin state") {
        // k1 = 1/δ + θ = 2, k2 = δ + θ = 0.5 at δ = 0.5, θ = 0; √(k1k2) = 1
        const double k1 = 2.0, k2 = 0.5, t = std::numbers::pi;
        const Operator h{{0.0, k1}, {k2, 0.0}};
        const Ket state = expm(-kImag * t * h) * Ket{1.0, 0.0};
        const double g = std::sqrt(k1 * k2);
        const Ket expected{std::cos(g * t), -kImag * std::sqrt(k2 / k1) * std::sin(g * t)};
        CHECK(distance(state, expected) <= 1e-12);
    }
    SECTION("closed form at generic θ and t") {
        for (double theta : {-0.3, 0.2, 0.9})
            for (double t : {0.1, 1.0, 4.0}) {
                const double k1 = 2.0 + theta, k2 = 0.5 + theta;
                const Operator h{{0.0, k1}, {k2, 0.0}};
                const Ket state = expm(-kImag * t * h) * Ket{1.0, 0.0};
                const double g = std::sqrt(k1 * k2);
                const Ket expected{std::cos(g * t), -kImag * std::sqrt(k2 / k1) * std::sin(g * t)};
                CHECK(distance(state, expected) <= 1e-12);
            }
    }
    SECTION("overflow risk flag") {
        bool risk = false;
        (void)expm(Operator::diagonal({1.0, 2.0}), &risk);
        CHECK_FALSE(risk);
        (void)expm(Operator{{0.0, 2000.0}, {-2000.0, 0.0}}, &risk);
        CHECK(risk);
    }
}

TEST_CASE("expm group property and accuracy against eigendecomposition", "[densela][property]") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t dim = 2 + trial % 4;
        Operator m = random_operator(rng, dim);
        m *= Complex(5.0 / norm_fro(m) * (0.2 + 0.8 * (trial % 5) / 4.0));
        const double t1 = 0.37, t2 = 0.81;
        const Operator lhs = expm(m * Complex(t1 + t2));
        const Operator rhs = expm(m * Complex(t1)) * expm(m * Complex(t2));
        CHECK(distance(lhs, rhs) <= 1e-10 * std::max(1.0, norm_fro(lhs)));
    }
    // Hermitian generator: exp(−iHt) = W e^{−iΛt} W†
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t dim = 2 + trial % 5;
        const Operator h = random_hermitian(rng, dim, 2.0);
        const double t = 0.5 + trial * 0.1;
        const auto he = eig_hermitian(h);
        std::vector<Complex> phases;
        for (double l : he.values) phases.push_back(std::exp(-kImag * l * t));
        const Operator oracle = he.basis * Operator::diagonal(std::span<const Complex>(phases)) * he.basis.adjoint();
        CHECK(distance(expm(-kImag * t * h), oracle) <= 1e-12 * std::max(1.0, norm_fro(oracle)));
    }
}

TEST_CASE("solve, inverse and norms", "[densela]") {
    const Operator d = Operator::diagonal({1.0, 2.0});
    CHECK(distance(inverse(d), Operator::diagonal({1.0, 0.5})) == 0.0);
    CHECK(distance(inverse(d) * d, Operator::identity(2)) == 0.0);

    const double sec = 2.0 / std::sqrt(3.0);
    const Operator eta{{sec, Complex(0, -0.5 * sec)}, {Complex(0, 0.5 * sec), sec}};
    CHECK(distance(eta * inverse(eta), Operator::identity(2)) <= 1e-12);

    try {
        (void)inverse(Operator{{1.0, 2.0}, {2.0, 4.0}});
        FAIL("singular matrix inverted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::singular);
    }

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Operator m = random_operator(rng, 1 + trial % 6);
        const double cond = norm_fro(m) * norm_fro(inverse(m));
        CHECK(distance(m * inverse(m), Operator::identity(m.dim())) <= 1e-12 * cond);
        const Ket b = random_ket(rng, m.dim());
        CHECK(norm(m * solve(m, b) - b) <= 1e-12 * cond * norm(b));
    }

    CHECK_THAT(norm_spectral(Operator{{0.0, 1.0}, {2.0, 0.0}}), WithinRel(2.0, 1e-14));
    CHECK_THAT(norm_one(Operator{{1.0, -3.0}, {2.0, 0.5}}), WithinRel(3.5, 1e-15));
}
