#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "polyroots.hpp"

namespace ipstab {

// ============================================================================
// Dense real matrices (row-major)
// ============================================================================

struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    [[nodiscard]] bool square() const { return rows == cols; }
};

inline Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) fail(Errc::NonSquare, "matmul: inner dimensions disagree");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Matrix mat_add(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) fail(Errc::NonSquare, "mat_add: shapes disagree");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

inline Matrix mat_scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

inline double vec_norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// ============================================================================
// Symmetric eigenvalues: cyclic Jacobi
// ============================================================================

// Eigenvalues of a symmetric matrix, descending. The caller guarantees
// symmetry; only the given entries are read.
inline std::vector<double> symmetric_eigenvalues(Matrix s) {
    if (!s.square()) fail(Errc::NonSquare, "symmetric_eigenvalues: matrix must be square");
    const std::size_t n = s.rows;
    if (n == 0) return {};
    if (n == 1) return {s(0, 0)};

    double fro0 = 0.0;
    for (double v : s.data) fro0 += v * v;
    fro0 = std::sqrt(fro0);
    const double target = 1e-10 * std::max(fro0, 1e-300);

    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * s(p, q) * s(p, q);
        if (std::sqrt(off) <= target) break;
        if (sweep == max_sweeps - 1)
            fail(Errc::NoConvergence, "symmetric_eigenvalues: Jacobi sweep cap reached");

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = s(p, q);
                if (apq == 0.0) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
                const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double snr = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - snr * skq;
                    s(k, q) = snr * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - snr * sqk;
                    s(q, k) = snr * spk + c * sqk;
                }
            }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = s(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

// Spectral norm: sqrt of the largest eigenvalue of M^T M.
inline double two_norm(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    const Matrix g = matmul(transpose(m), m);
    const double lmax = symmetric_eigenvalues(g).front();
    return std::sqrt(std::max(lmax, 0.0));
}

// Logarithmic norm induced by the Euclidean norm:
// largest eigenvalue of the symmetric part (M + M^T)/2.
inline double log_norm(const Matrix& m) {
    if (!m.square()) fail(Errc::NonSquare, "log_norm: matrix must be square");
    const Matrix sym = mat_scale(mat_add(m, transpose(m)), 0.5);
    return symmetric_eigenvalues(sym).front();
}

// ============================================================================
// General complex eigenvalues: Hessenberg reduction + shifted QR
// ============================================================================

namespace detail {

struct GivensC {
    cdouble c, s; // rows: [c s; -conj(s) conj(c)], unitary
};

inline GivensC make_givens(cdouble a, cdouble b) {
    const double r = std::sqrt(std::norm(a) + std::norm(b));
    if (r == 0.0) return {cdouble{1.0, 0.0}, cdouble{0.0, 0.0}};
    return {std::conj(a) / r, std::conj(b) / r};
}

using CMat = std::vector<std::vector<cdouble>>;

inline void hessenberg(CMat& h) {
    const std::size_t n = h.size();
    if (n < 3) return;
    for (std::size_t k = 0; k + 2 < n; ++k)
        for (std::size_t i = k + 2; i < n; ++i) {
            if (std::abs(h[i][k]) == 0.0) continue;
            const GivensC g = make_givens(h[k + 1][k], h[i][k]);
            for (std::size_t j = k; j < n; ++j) {
                const cdouble x = h[k + 1][j], y = h[i][j];
                h[k + 1][j] = g.c * x + g.s * y;
                h[i][j] = -std::conj(g.s) * x + std::conj(g.c) * y;
            }
            for (std::size_t j = 0; j < n; ++j) {
                const cdouble x = h[j][k + 1], y = h[j][i];
                h[j][k + 1] = std::conj(g.c) * x + std::conj(g.s) * y;
                h[j][i] = -g.s * x + g.c * y;
            }
            h[i][k] = cdouble{0.0, 0.0};
        }
}

// Eigenvalues of [[a, b], [c, d]].
inline std::pair<cdouble, cdouble> eig2(cdouble a, cdouble b, cdouble c, cdouble d) {
    const cdouble tr2 = 0.5 * (a + d);
    const cdouble disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
    return {tr2 + disc, tr2 - disc};
}

} // namespace detail

// All eigenvalues of a real square matrix, as complex numbers.
inline std::vector<cdouble> eigenvalues(const Matrix& m) {
    if (!m.square()) fail(Errc::NonSquare, "eigenvalues: matrix must be square");
    const std::size_t n = m.rows;
    if (n == 0) return {};

    detail::CMat h(n, std::vector<cdouble>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h[i][j] = cdouble{m(i, j), 0.0};
    detail::hessenberg(h);

    std::vector<cdouble> eig;
    eig.reserve(n);
    const double eps = std::numeric_limits<double>::epsilon();
    std::size_t hi = n - 1;
    int since_deflate = 0;
    long total = 0;
    const long cap = 100 * static_cast<long>(n) + 200;

    auto negligible = [&](std::size_t i) {
        const double thresh = eps * (std::abs(h[i - 1][i - 1]) + std::abs(h[i][i]));
        return std::abs(h[i][i - 1]) <= std::max(thresh, 1e-290);
    };

    while (true) {
        // Deflate converged trailing eigenvalues.
        while (true) {
            if (hi == 0) {
                eig.push_back(h[0][0]);
                std::reverse(eig.begin(), eig.end());
                return eig;
            }
            if (negligible(hi)) {
                eig.push_back(h[hi][hi]);
                --hi;
                since_deflate = 0;
                continue;
            }
            if (hi >= 1 && (hi == 1 || negligible(hi - 1))) {
                const auto [l1, l2] =
                    detail::eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
                eig.push_back(l1);
                eig.push_back(l2);
                if (hi == 1) {
                    std::reverse(eig.begin(), eig.end());
                    return eig;
                }
                hi -= 2;
                since_deflate = 0;
                continue;
            }
            break;
        }

        // Active block [lo, hi].
        std::size_t lo = hi;
        while (lo > 0 && !negligible(lo)) --lo;

        if (++total > cap) fail(Errc::NoConvergence, "eigenvalues: QR iteration cap reached");

        cdouble shift{0.0, 0.0};
        if (since_deflate >= 2) {
            const auto [l1, l2] =
                detail::eig2(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
            shift = (std::abs(l1 - h[hi][hi]) <= std::abs(l2 - h[hi][hi])) ? l1 : l2;
        }
        if (since_deflate > 0 && since_deflate % 12 == 0)
            shift = h[hi][hi] + 1.5 * std::abs(h[hi][hi - 1]);
        ++since_deflate;

        for (std::size_t i = lo; i <= hi; ++i) h[i][i] -= shift;
        std::vector<detail::GivensC> gs(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
            const detail::GivensC g = detail::make_givens(h[k][k], h[k + 1][k]);
            gs[k - lo] = g;
            for (std::size_t j = k; j <= hi; ++j) {
                const cdouble x = h[k][j], y = h[k + 1][j];
                h[k][j] = g.c * x + g.s * y;
                h[k + 1][j] = -std::conj(g.s) * x + std::conj(g.c) * y;
            }
            h[k + 1][k] = cdouble{0.0, 0.0};
        }
        for (std::size_t k = lo; k < hi; ++k) {
            const detail::GivensC& g = gs[k - lo];
            const std::size_t top = lo;
            const std::size_t bot = std::min(k + 1, hi);
            for (std::size_t i = top; i <= bot; ++i) {
                const cdouble x = h[i][k], y = h[i][k + 1];
                h[i][k] = std::conj(g.c) * x + std::conj(g.s) * y;
                h[i][k + 1] = -g.s * x + g.c * y;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) h[i][i] += shift;
    }
}

// Largest eigenvalue magnitude.
inline double spectral_radius(const Matrix& m) {
    double r = 0.0;
    for (const auto& l : eigenvalues(m)) r = std::max(r, std::abs(l));
    return r;
}

// ============================================================================
// Companion structure
// ============================================================================

// Companion matrix of the polynomial given leading-first:
//   coeffs[0] z^n + coeffs[1] z^(n-1) + ... + coeffs[n], coeffs[0] != 0.
// Superdiagonal identity block, normalized data in the last row.
inline Matrix companion_matrix(const std::vector<double>& coeffs) {
    if (coeffs.empty()) fail(Errc::EmptyCoefficients, "companion_matrix: empty coefficient list");
    if (coeffs.size() == 1) fail(Errc::DegreeZero, "companion_matrix: degree must be at least 1");
    if (coeffs.front() == 0.0)
        fail(Errc::ZeroLeadingCoefficient, "companion_matrix: leading coefficient must be nonzero");
    const std::size_t n = coeffs.size() - 1;
    Matrix c(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) c(i, i + 1) = 1.0;
    for (std::size_t j = 0; j < n; ++j) c(n - 1, j) = -coeffs[n - j] / coeffs[0];
    return c;
}

namespace detail {

inline bool is_companion(const Matrix& m) {
    if (!m.square() || m.rows == 0) return false;
    const std::size_t n = m.rows;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double expected = (j == i + 1) ? 1.0 : 0.0;
            if (m(i, j) != expected) return false;
        }
    return true;
}

} // namespace detail

// Largest real part over the spectrum. Exact companion structure is routed
// through the polynomial solver; everything else goes through dense QR.
inline double spectral_abscissa(const Matrix& m) {
    if (!m.square()) fail(Errc::NonSquare, "spectral_abscissa: matrix must be square");
    if (m.rows == 0) fail(Errc::InvalidArgument, "spectral_abscissa: empty matrix");
    std::vector<cdouble> eig;
    if (detail::is_companion(m) && m.rows > 1) {
        const std::size_t n = m.rows;
        std::vector<double> coeffs(n + 1);
        coeffs[0] = 1.0;
        for (std::size_t j = 0; j < n; ++j) coeffs[n - j] = -m(n - 1, j);
        eig = poly_roots(coeffs);
    } else {
        eig = eigenvalues(m);
    }
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& l : eig) s = std::max(s, l.real());
    return s;
}

} // namespace ipstab
