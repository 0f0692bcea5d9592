#pragma once

// Dense complex linear algebra for small operators (dimension 2-32):
// general and Hermitian eigendecomposition, matrix exponential, LU solves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "etaqfi/error.hpp"

namespace etaqfi {

using Complex = std::complex<double>;

inline constexpr Complex kImag{0.0, 1.0};

/// Column state vector with value semantics.
class Ket {
public:
    Ket() = default;
    explicit Ket(std::size_t dim) : data_(dim, Complex{}) {}
    Ket(std::initializer_list<Complex> values) : data_(values) {}
    explicit Ket(std::vector<Complex> values) : data_(std::move(values)) {}

    static Ket basis(std::size_t dim, std::size_t index) {
        Ket k(dim);
        k[index] = 1.0;
        return k;
    }

    std::size_t size() const noexcept { return data_.size(); }
    Complex& operator[](std::size_t i) { return data_[i]; }
    const Complex& operator[](std::size_t i) const { return data_[i]; }
    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }
    std::span<const Complex> values() const noexcept { return data_; }

    Ket& operator+=(const Ket& other) {
        check_same(other);
        for (std::size_t i = 0; i < size(); ++i) data_[i] += other.data_[i];
        return *this;
    }
    Ket& operator-=(const Ket& other) {
        check_same(other);
        for (std::size_t i = 0; i < size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }
    Ket& operator*=(Complex factor) {
        for (auto& x : data_) x *= factor;
        return *this;
    }
    Ket& operator/=(Complex factor) {
        for (auto& x : data_) x /= factor;
        return *this;
    }

    friend bool operator==(const Ket&, const Ket&) = default;

private:
    void check_same(const Ket& other) const {
        if (other.size() != size()) {
            throw Error(ErrorCode::dimension_mismatch, "ket sizes " + std::to_string(size()) + " and " +
                                                           std::to_string(other.size()));
        }
    }

    std::vector<Complex> data_;
};

inline Ket operator+(Ket a, const Ket& b) { return a += b; }
inline Ket operator-(Ket a, const Ket& b) { return a -= b; }
inline Ket operator-(Ket a) { return a *= -1.0; }
inline Ket operator*(Complex f, Ket a) { return a *= f; }
inline Ket operator*(Ket a, Complex f) { return a *= f; }
inline Ket operator/(Ket a, Complex f) { return a /= f; }

/// ⟨a|b⟩ with the flat inner product.
inline Complex inner(const Ket& a, const Ket& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::dimension_mismatch, "inner product of unequal kets");
    Complex sum{};
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
    return sum;
}

inline double norm_squared(const Ket& a) {
    double sum = 0.0;
    for (const auto& x : a) sum += std::norm(x);
    return sum;
}

inline double norm(const Ket& a) { return std::sqrt(norm_squared(a)); }

/// Square complex matrix, row-major, entries finite on construction.
class Operator {
public:
    Operator() = default;

    explicit Operator(std::size_t dim) : dim_(dim), data_(dim * dim, Complex{}) {}

    Operator(std::size_t dim, std::vector<Complex> row_major) : dim_(dim), data_(std::move(row_major)) {
        if (data_.size() != dim * dim) {
            throw Error(ErrorCode::dimension_mismatch,
                        "expected " + std::to_string(dim * dim) + " entries, got " + std::to_string(data_.size()));
        }
        check_finite();
    }

    Operator(std::initializer_list<std::initializer_list<Complex>> rows) : dim_(rows.size()) {
        data_.reserve(dim_ * dim_);
        for (const auto& row : rows) {
            if (row.size() != dim_) throw Error(ErrorCode::dimension_mismatch, "operator must be square");
            data_.insert(data_.end(), row.begin(), row.end());
        }
        check_finite();
    }

    static Operator identity(std::size_t dim) {
        Operator m(dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    static Operator diagonal(std::span<const Complex> entries) {
        Operator m(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
        m.check_finite();
        return m;
    }

    static Operator diagonal(std::span<const double> entries) {
        Operator m(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
        m.check_finite();
        return m;
    }

    static Operator diagonal(std::initializer_list<Complex> entries) {
        return diagonal(std::span<const Complex>(entries.begin(), entries.size()));
    }

    std::size_t dim() const noexcept { return dim_; }

    Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

    std::span<const Complex> data() const noexcept { return data_; }

    Ket column(std::size_t c) const {
        Ket k(dim_);
        for (std::size_t r = 0; r < dim_; ++r) k[r] = (*this)(r, c);
        return k;
    }

    void set_column(std::size_t c, const Ket& k) {
        if (k.size() != dim_) throw Error(ErrorCode::dimension_mismatch, "column size");
        for (std::size_t r = 0; r < dim_; ++r) (*this)(r, c) = k[r];
    }

    Operator adjoint() const {
        Operator m(dim_);
        for (std::size_t r = 0; r < dim_; ++r)
            for (std::size_t c = 0; c < dim_; ++c) m(c, r) = std::conj((*this)(r, c));
        return m;
    }

    Complex trace() const {
        Complex t{};
        for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
    }

    Operator& operator+=(const Operator& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Operator& operator-=(const Operator& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Operator& operator*=(Complex f) {
        for (auto& x : data_) x *= f;
        return *this;
    }
    Operator& operator/=(Complex f) {
        for (auto& x : data_) x /= f;
        return *this;
    }

    friend bool operator==(const Operator&, const Operator&) = default;

private:
    void check_same(const Operator& o) const {
        if (o.dim_ != dim_) {
            throw Error(ErrorCode::dimension_mismatch,
                        "operator dims " + std::to_string(dim_) + " and " + std::to_string(o.dim_));
        }
    }
    void check_finite() const {
        if (!all_finite()) throw Error(ErrorCode::non_finite, "operator has NaN or Inf entries");
    }

    std::size_t dim_ = 0;
    std::vector<Complex> data_;
};

inline Operator operator+(Operator a, const Operator& b) { return a += b; }
inline Operator operator-(Operator a, const Operator& b) { return a -= b; }
inline Operator operator-(Operator a) { return a *= -1.0; }
inline Operator operator*(Complex f, Operator a) { return a *= f; }
inline Operator operator*(Operator a, Complex f) { return a *= f; }
inline Operator operator/(Operator a, Complex f) { return a /= f; }

inline Operator operator*(const Operator& a, const Operator& b) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::dimension_mismatch, "matmul");
    const std::size_t n = a.dim();
    Operator c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const Complex aik = a(i, k);
            if (aik == Complex{}) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Ket operator*(const Operator& a, const Ket& v) {
    if (a.dim() != v.size()) throw Error(ErrorCode::dimension_mismatch, "matvec");
    Ket out(v.size());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        Complex s{};
        for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

/// |a⟩⟨b|
inline Operator outer(const Ket& a, const Ket& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::dimension_mismatch, "outer product");
    Operator m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
    return m;
}

/// ⟨a|η|b⟩
inline Complex inner(const Ket& a, const Operator& eta, const Ket& b) { return inner(a, eta * b); }

inline double norm_fro(const Operator& m) {
    double s = 0.0;
    for (const auto& z : m.data()) s += std::norm(z);
    return std::sqrt(s);
}

/// Maximum absolute column sum.
inline double norm_one(const Operator& m) {
    double best = 0.0;
    for (std::size_t c = 0; c < m.dim(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < m.dim(); ++r) s += std::abs(m(r, c));
        best = std::max(best, s);
    }
    return best;
}

inline double max_abs(const Operator& m) {
    double best = 0.0;
    for (const auto& z : m.data()) best = std::max(best, std::abs(z));
    return best;
}

/// ‖M − M†‖_F
inline double hermiticity_defect(const Operator& m) { return norm_fro(m - m.adjoint()); }

inline Operator hermitian_part(const Operator& m) { return 0.5 * (m + m.adjoint()); }

inline bool is_hermitian(const Operator& m, double rel_tol) {
    return hermiticity_defect(m) <= rel_tol * std::max(norm_fro(m), std::numeric_limits<double>::min());
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

struct LuFactorization {
    Operator lu;
    std::vector<std::size_t> pivot;
};

/// Throws Singular when a pivot falls below 1e-14·‖M‖_F.
inline LuFactorization lu_factor(const Operator& m) {
    const std::size_t n = m.dim();
    LuFactorization f{m, std::vector<std::size_t>(n)};
    const double threshold = 1e-14 * norm_fro(m);
    auto& a = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(a(r, k)) > best) {
                best = std::abs(a(r, k));
                p = r;
            }
        }
        if (best <= threshold || best == 0.0) {
            throw Error(ErrorCode::singular, "pivot " + std::to_string(best) + " at column " + std::to_string(k));
        }
        f.pivot[k] = p;
        if (p != k)
            for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(p, c));
        for (std::size_t r = k + 1; r < n; ++r) {
            const Complex factor = a(r, k) / a(k, k);
            a(r, k) = factor;
            for (std::size_t c = k + 1; c < n; ++c) a(r, c) -= factor * a(k, c);
        }
    }
    return f;
}

inline Ket lu_solve(const LuFactorization& f, Ket b) {
    const std::size_t n = f.lu.dim();
    if (b.size() != n) throw Error(ErrorCode::dimension_mismatch, "lu_solve rhs");
    for (std::size_t k = 0; k < n; ++k)
        if (f.pivot[k] != k) std::swap(b[k], b[f.pivot[k]]);
    for (std::size_t r = 1; r < n; ++r)
        for (std::size_t c = 0; c < r; ++c) b[r] -= f.lu(r, c) * b[c];
    for (std::size_t r = n; r-- > 0;) {
        for (std::size_t c = r + 1; c < n; ++c) b[r] -= f.lu(r, c) * b[c];
        b[r] /= f.lu(r, r);
    }
    return b;
}

inline Ket solve(const Operator& m, const Ket& b) { return lu_solve(lu_factor(m), b); }

/// Solves M·X = B column by column.
inline Operator solve(const Operator& m, const Operator& rhs) {
    const auto f = lu_factor(m);
    Operator x(m.dim());
    for (std::size_t c = 0; c < m.dim(); ++c) x.set_column(c, lu_solve(f, rhs.column(c)));
    return x;
}

inline Operator inverse(const Operator& m) { return solve(m, Operator::identity(m.dim())); }

// ---------------------------------------------------------------------------
// Eigendecompositions

/// Rotates v so that its largest-magnitude component (first one among near-ties) is real positive.
inline void fix_phase(Ket& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    if (m == 0.0) return;
    for (const auto& z : v) {
        if (std::abs(z) >= m * (1.0 - 1e-10)) {
            const Complex phase = std::conj(z) / std::abs(z);
            v *= phase;
            return;
        }
    }
}

struct EigenSystem {
    std::vector<Complex> values;
    Operator right_vectors;        // unit flat-norm columns
    double vector_condition = 0.0; // ‖P‖_F·‖P⁻¹‖_F, +inf if P is numerically singular
    bool near_defective = false;   // vector_condition > 1e12
};

struct HermitianEigen {
    std::vector<double> values; // descending
    Operator basis;             // unitary, columns are eigenvectors
};

inline constexpr double kNearDefectiveCondition = 1e12;

namespace detail {

struct Givens {
    double c = 1.0;
    Complex s{};
};

// [c s; -conj(s) c]·[a; b] = [r; 0]
inline Givens make_givens(Complex a, Complex b) {
    const double abs_a = std::abs(a);
    const double abs_b = std::abs(b);
    if (abs_b == 0.0) return {1.0, Complex{}};
    if (abs_a == 0.0) return {0.0, std::conj(b) / abs_b};
    const double r = std::hypot(abs_a, abs_b);
    return {abs_a / r, (a / abs_a) * std::conj(b) / r};
}

inline void rotate_rows(Operator& m, const Givens& g, std::size_t k, std::size_t col_begin) {
    for (std::size_t j = col_begin; j < m.dim(); ++j) {
        const Complex x = m(k, j);
        const Complex y = m(k + 1, j);
        m(k, j) = g.c * x + g.s * y;
        m(k + 1, j) = -std::conj(g.s) * x + g.c * y;
    }
}

// M ← M·G† restricted to rows [0, row_end)
inline void rotate_cols(Operator& m, const Givens& g, std::size_t k, std::size_t row_end) {
    for (std::size_t i = 0; i < row_end; ++i) {
        const Complex x = m(i, k);
        const Complex y = m(i, k + 1);
        m(i, k) = g.c * x + std::conj(g.s) * y;
        m(i, k + 1) = -g.s * x + g.c * y;
    }
}

/// Householder reduction to upper Hessenberg form: a ← Q†·a·Q, q accumulates Q.
inline void hessenberg_reduce(Operator& a, Operator& q) {
    const std::size_t n = a.dim();
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double tail = 0.0;
        for (std::size_t i = k + 2; i < n; ++i) tail += std::norm(a(i, k));
        if (tail == 0.0) continue;
        const Complex x0 = a(k + 1, k);
        const double xnorm = std::sqrt(tail + std::norm(x0));
        const Complex phase = (std::abs(x0) == 0.0) ? Complex{1.0} : x0 / std::abs(x0);
        std::vector<Complex> v(n, Complex{});
        v[k + 1] = x0 + phase * xnorm;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm += std::norm(v[i]);
        vnorm = std::sqrt(vnorm);
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vnorm;

        // a ← (I − 2vv†)·a
        for (std::size_t j = 0; j < n; ++j) {
            Complex s{};
            for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * a(i, j);
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= 2.0 * v[i] * s;
        }
        // a ← a·(I − 2vv†), q ← q·(I − 2vv†)
        for (Operator* m : {&a, &q}) {
            for (std::size_t i = 0; i < n; ++i) {
                Complex s{};
                for (std::size_t j = k + 1; j < n; ++j) s += (*m)(i, j) * v[j];
                for (std::size_t j = k + 1; j < n; ++j) (*m)(i, j) -= 2.0 * s * std::conj(v[j]);
            }
        }
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = Complex{};
    }
}

struct SchurForm {
    Operator t; // upper triangular
    Operator z; // unitary, m = z·t·z†
};

/// Complex Schur form by implicit single-shift QR on the Hessenberg matrix.
inline SchurForm schur(const Operator& m) {
    const std::size_t n = m.dim();
    SchurForm f{m, Operator::identity(n)};
    if (n <= 1) return f;
    auto& a = f.t;
    hessenberg_reduce(a, f.z);

    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = std::max(norm_fro(a), std::numeric_limits<double>::min());
    const std::size_t max_total = 100 * n;
    std::size_t total = 0;
    std::size_t iter = 0;
    std::size_t hi = n - 1;
    while (hi > 0) {
        std::size_t l = hi;
        while (l > 0) {
            double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
            if (s == 0.0) s = scale;
            if (std::abs(a(l, l - 1)) <= eps * s) {
                a(l, l - 1) = Complex{};
                break;
            }
            --l;
        }
        if (l == hi) {
            --hi;
            iter = 0;
            continue;
        }
        if (++total > max_total) {
            throw Error(ErrorCode::no_convergence, "QR iteration exceeded " + std::to_string(max_total) + " sweeps");
        }
        ++iter;

        Complex shift;
        if (iter % 11 == 0) {
            shift = a(hi, hi) + 0.75 * std::abs(a(hi, hi - 1));
        } else {
            const Complex p = a(hi - 1, hi - 1);
            const Complex q = a(hi - 1, hi);
            const Complex r = a(hi, hi - 1);
            const Complex d = a(hi, hi);
            const Complex half = 0.5 * (p - d);
            const Complex root = std::sqrt(half * half + q * r);
            const Complex mu1 = 0.5 * (p + d) + root;
            const Complex mu2 = 0.5 * (p + d) - root;
            shift = (std::abs(mu1 - d) < std::abs(mu2 - d)) ? mu1 : mu2;
        }

        for (std::size_t k = l; k < hi; ++k) {
            Givens g;
            if (k == l) {
                g = make_givens(a(l, l) - shift, a(l + 1, l));
                rotate_rows(a, g, k, l);
            } else {
                g = make_givens(a(k, k - 1), a(k + 1, k - 1));
                rotate_rows(a, g, k, k - 1);
                a(k + 1, k - 1) = Complex{};
            }
            // rows above the window are included so t stays the full Schur factor
            rotate_cols(a, g, k, std::min(k + 3, hi + 1));
            rotate_cols(f.z, g, k, n);
        }
    }
    return f;
}

// Deterministic order: descending real part, ties (to rounding) broken by descending imaginary part.
inline std::vector<std::size_t> eigen_order(const std::vector<Complex>& values) {
    double scale = 1.0;
    for (const auto& v : values) scale = std::max(scale, std::abs(v));
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    auto before = [&](const Complex& a, const Complex& b) {
        if (std::abs(a.real() - b.real()) > tol) return a.real() > b.real();
        return a.imag() > b.imag() + tol;
    };
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 1; i < order.size(); ++i) {
        std::size_t j = i;
        while (j > 0 && before(values[order[j]], values[order[j - 1]])) {
            std::swap(order[j], order[j - 1]);
            --j;
        }
    }
    return order;
}

} // namespace detail

inline double vector_condition(const Operator& p) {
    try {
        return norm_fro(p) * norm_fro(inverse(p));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::singular) return std::numeric_limits<double>::infinity();
        throw;
    }
}

/// Eigenvalues and unit right eigenvectors of a general complex matrix.
inline EigenSystem eig_general(const Operator& m) {
    const std::size_t n = m.dim();
    if (n == 0) throw Error(ErrorCode::dimension_mismatch, "eig_general of empty operator");
    if (!m.all_finite()) throw Error(ErrorCode::non_finite, "eig_general input");
    const auto schur = detail::schur(m);
    const auto& t = schur.t;

    std::vector<Complex> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = t(i, i);

    const double tnorm = std::max(norm_fro(t), std::numeric_limits<double>::min());
    const double smin = std::max(std::numeric_limits<double>::epsilon() * tnorm, 1e-290);

    Operator vectors(n);
    for (std::size_t k = 0; k < n; ++k) {
        // back substitution on the triangular factor: (T − λ_k)x = 0 with x_k = 1
        std::vector<Complex> x(n, Complex{});
        x[k] = 1.0;
        for (std::size_t j = k; j-- > 0;) {
            Complex s{};
            for (std::size_t c = j + 1; c <= k; ++c) s += t(j, c) * x[c];
            Complex den = t(j, j) - t(k, k);
            if (std::abs(den) < smin) den = smin;
            x[j] = -s / den;
            if (std::abs(x[j]) > 1e150) {
                for (std::size_t c = j; c <= k; ++c) x[c] *= 1e-150;
            }
        }
        Ket v = schur.z * Ket(std::move(x));
        v /= norm(v);
        fix_phase(v);
        vectors.set_column(k, v);
    }

    const auto order = detail::eigen_order(raw);
    EigenSystem es;
    es.values.resize(n);
    es.right_vectors = Operator(n);
    for (std::size_t i = 0; i < n; ++i) {
        es.values[i] = raw[order[i]];
        es.right_vectors.set_column(i, vectors.column(order[i]));
    }
    es.vector_condition = vector_condition(es.right_vectors);
    es.near_defective = !(es.vector_condition <= kNearDefectiveCondition);
    return es;
}

/// Cyclic complex Jacobi. Input must be Hermitian to 1e-10 relative (Frobenius).
inline HermitianEigen eig_hermitian(const Operator& m) {
    const std::size_t n = m.dim();
    if (n == 0) throw Error(ErrorCode::dimension_mismatch, "eig_hermitian of empty operator");
    if (!m.all_finite()) throw Error(ErrorCode::non_finite, "eig_hermitian input");
    if (!is_hermitian(m, 1e-10)) {
        throw Error(ErrorCode::not_hermitian,
                    "‖M − M†‖ = " + std::to_string(hermiticity_defect(m)) + " exceeds 1e-10·‖M‖");
    }
    Operator a = hermitian_part(m);
    Operator v = Operator::identity(n);
    const double scale = norm_fro(a);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    constexpr int max_sweeps = 100;
    int sweep = 0;
    while (off_norm() > 1e-17 * scale) {
        if (++sweep > max_sweeps) throw Error(ErrorCode::no_convergence, "Jacobi sweeps exhausted");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex g = a(p, q);
                const double abs_g = std::abs(g);
                if (abs_g <= 1e-300) continue;
                const Complex phase = g / abs_g;
                const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * abs_g);
                const double tt = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + tt * tt);
                const double s = tt * c;
                // J = diag-phase · real rotation; columns p, q
                const Complex jpp = c;
                const Complex jpq = s;
                const Complex jqp = -s * std::conj(phase);
                const Complex jqq = c * std::conj(phase);
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex x = a(i, p);
                    const Complex y = a(i, q);
                    a(i, p) = x * jpp + y * jqp;
                    a(i, q) = x * jpq + y * jqq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const Complex x = a(p, j);
                    const Complex y = a(q, j);
                    a(p, j) = std::conj(jpp) * x + std::conj(jqp) * y;
                    a(q, j) = std::conj(jpq) * x + std::conj(jqq) * y;
                }
                a(p, q) = Complex{};
                a(q, p) = Complex{};
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                for (std::size_t i = 0; i < n; ++i) {
                    const Complex x = v(i, p);
                    const Complex y = v(i, q);
                    v(i, p) = x * jpp + y * jqp;
                    v(i, q) = x * jpq + y * jqq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t j = i;
        while (j > 0 && a(order[j], order[j]).real() > a(order[j - 1], order[j - 1]).real()) {
            std::swap(order[j], order[j - 1]);
            --j;
        }
    }
    HermitianEigen he;
    he.values.resize(n);
    he.basis = Operator(n);
    for (std::size_t i = 0; i < n; ++i) {
        he.values[i] = a(order[i], order[i]).real();
        Ket col = v.column(order[i]);
        col /= norm(col);
        fix_phase(col);
        he.basis.set_column(i, col);
    }
    return he;
}

/// Largest singular value.
inline double norm_spectral(const Operator& m) {
    const auto he = eig_hermitian(m.adjoint() * m);
    return std::sqrt(std::max(he.values.front(), 0.0));
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with the [13/13] Padé approximant.

inline constexpr double kExpmTheta13 = 5.371920351148152;
inline constexpr double kExpmOverflowNorm = 1e3;

inline Operator expm(const Operator& m, bool* overflow_risk = nullptr) {
    static constexpr double b[] = {64764752532480000.0,
                                   32382376266240000.0,
                                   7771770303897600.0,
                                   1187353796428800.0,
                                   129060195264000.0,
                                   10559470521600.0,
                                   670442572800.0,
                                   33522128640.0,
                                   1323241920.0,
                                   40840800.0,
                                   960960.0,
                                   16380.0,
                                   182.0,
                                   1.0};
    const std::size_t n = m.dim();
    const double norm1 = norm_one(m);
    if (overflow_risk) *overflow_risk = norm1 > kExpmOverflowNorm;
    if (norm1 == 0.0) return Operator::identity(n);

    int squarings = 0;
    if (norm1 > kExpmTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kExpmTheta13)));
    const Operator a = m / Complex(std::ldexp(1.0, squarings));
    const Operator id = Operator::identity(n);
    const Operator a2 = a * a;
    const Operator a4 = a2 * a2;
    const Operator a6 = a4 * a2;

    const Operator u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Operator u = a * u_inner;
    const Operator v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Operator r = solve(v - u, v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

} // namespace etaqfi
