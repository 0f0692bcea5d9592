#pragma once

// Seeded random fixtures shared by the verification suite and the tests.

#include <random>
#include <span>
#include <vector>

#include "etaqfi/densela.hpp"

namespace etaqfi {

inline Operator random_operator(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Operator m(dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = Complex(normal(rng), normal(rng));
    return m;
}

inline Operator random_hermitian(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
    return hermitian_part(random_operator(rng, dim, scale));
}

inline Ket random_ket(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Ket k(dim);
    for (auto& z : k) z = Complex(normal(rng), normal(rng));
    return k;
}

/// Random positive-definite Hermitian matrix with spectrum in [lo, hi].
inline Operator random_metric(std::mt19937_64& rng, std::size_t dim, double lo = 0.5, double hi = 3.0) {
    const auto basis = eig_hermitian(random_hermitian(rng, dim)).basis;
    std::uniform_real_distribution<double> uni(lo, hi);
    std::vector<double> lambda(dim);
    for (auto& l : lambda) l = uni(rng);
    return basis * Operator::diagonal(std::span<const double>(lambda)) * basis.adjoint();
}

inline Operator random_unitary(std::mt19937_64& rng, std::size_t dim) {
    return eig_hermitian(random_hermitian(rng, dim)).basis;
}

} // namespace etaqfi
