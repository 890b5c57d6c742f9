#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace ipstab {

using cdouble = std::complex<double>;

// ============================================================================
// Polynomial helpers. Coefficients are leading-first throughout:
//   p(z) = coeffs[0] z^deg + coeffs[1] z^(deg-1) + ... + coeffs[deg].
// ============================================================================

[[nodiscard]] inline cdouble poly_eval(const std::vector<cdouble>& coeffs, cdouble z) {
    cdouble acc{0.0, 0.0};
    for (const cdouble& c : coeffs) acc = acc * z + c;
    return acc;
}

[[nodiscard]] inline cdouble poly_eval(const std::vector<double>& coeffs, cdouble z) {
    cdouble acc{0.0, 0.0};
    for (double c : coeffs) acc = acc * z + c;
    return acc;
}

[[nodiscard]] inline double poly_eval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (double c : coeffs) acc = acc * x + c;
    return acc;
}

template <typename T>
[[nodiscard]] std::vector<T> poly_derivative(const std::vector<T>& coeffs) {
    std::vector<T> d;
    if (coeffs.size() <= 1) return d;
    const std::size_t deg = coeffs.size() - 1;
    d.resize(deg);
    for (std::size_t k = 0; k < deg; ++k) d[k] = coeffs[k] * static_cast<double>(deg - k);
    return d;
}

namespace detail {

inline double max_coeff_abs(const std::vector<cdouble>& c) {
    double m = 0.0;
    for (const auto& v : c) m = std::max(m, std::abs(v));
    return m;
}

} // namespace detail

// ============================================================================
// All complex roots via the Aberth-Ehrlich simultaneous iteration.
//
// Exact zero constant terms are peeled off as roots at the origin.
// Postcondition: every returned root satisfies
//   |p(root)| <= 1e-8 * max|coeff| * max(1, |root|)^deg.
// ============================================================================

inline std::vector<cdouble> poly_roots(std::vector<cdouble> coeffs) {
    if (coeffs.empty()) fail(Errc::EmptyCoefficients, "poly_roots: empty coefficient list");
    if (coeffs.size() == 1) fail(Errc::DegreeZero, "poly_roots: constant polynomial has no roots");
    if (coeffs.front() == cdouble{0.0, 0.0})
        fail(Errc::ZeroLeadingCoefficient, "poly_roots: leading coefficient must be nonzero");

    std::vector<cdouble> roots;
    // Peel exact roots at the origin.
    while (coeffs.size() > 1 && coeffs.back() == cdouble{0.0, 0.0}) {
        roots.emplace_back(0.0, 0.0);
        coeffs.pop_back();
    }
    const std::size_t deg = coeffs.size() - 1;
    if (deg == 0) return roots;
    if (deg == 1) {
        roots.push_back(-coeffs[1] / coeffs[0]);
        return roots;
    }
    if (deg == 2) {
        const cdouble a = coeffs[0], b = coeffs[1], c = coeffs[2];
        cdouble sq = std::sqrt(b * b - 4.0 * a * c);
        if (std::real(std::conj(b) * sq) < 0.0) sq = -sq;
        const cdouble q = -0.5 * (b + sq);
        if (std::abs(q) > 0.0) {
            roots.push_back(q / a);
            roots.push_back(c / q);
        } else {
            roots.emplace_back(0.0, 0.0);
            roots.emplace_back(0.0, 0.0);
        }
        return roots;
    }

    // Cauchy upper bound on root magnitudes.
    double bound = 0.0;
    for (std::size_t k = 1; k <= deg; ++k) bound = std::max(bound, std::abs(coeffs[k] / coeffs[0]));
    bound += 1.0;

    std::vector<cdouble> z(deg);
    const double two_pi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < deg; ++i) {
        // Perturbed angles break symmetric starting configurations.
        const double ang = two_pi * static_cast<double>(i) / static_cast<double>(deg) + 0.376991;
        z[i] = 0.5 * bound * cdouble{std::cos(ang), std::sin(ang)};
    }

    const auto dcoeffs = poly_derivative(coeffs);
    const int max_iter = 500;
    for (int iter = 0; iter < max_iter; ++iter) {
        double worst = 0.0;
        for (std::size_t i = 0; i < deg; ++i) {
            const cdouble p = poly_eval(coeffs, z[i]);
            const cdouble dp = poly_eval(dcoeffs, z[i]);
            cdouble w;
            if (std::abs(dp) > 0.0) {
                w = p / dp;
            } else {
                w = cdouble{1e-3 * (1.0 + std::abs(z[i])), 0.0};
            }
            cdouble sum{0.0, 0.0};
            for (std::size_t j = 0; j < deg; ++j) {
                if (j == i) continue;
                const cdouble diff = z[i] - z[j];
                if (std::abs(diff) > 0.0) sum += 1.0 / diff;
            }
            const cdouble den = 1.0 - w * sum;
            const cdouble step = (std::abs(den) > 0.0) ? w / den : w;
            z[i] -= step;
            worst = std::max(worst, std::abs(step) / (1.0 + std::abs(z[i])));
        }
        if (worst <= 1e-14) break;
    }

    // Newton polish; skipped where the derivative is too small to trust.
    for (std::size_t i = 0; i < deg; ++i) {
        for (int it = 0; it < 3; ++it) {
            const cdouble p = poly_eval(coeffs, z[i]);
            const cdouble dp = poly_eval(dcoeffs, z[i]);
            if (std::abs(dp) <= 1e-300) break;
            const cdouble step = p / dp;
            if (!(std::abs(step) < 1.0 + std::abs(z[i]))) break;
            z[i] -= step;
        }
    }

    const double cmax = detail::max_coeff_abs(coeffs);
    for (std::size_t i = 0; i < deg; ++i) {
        const double scale = cmax * std::pow(std::max(1.0, std::abs(z[i])), static_cast<double>(deg));
        if (!(std::abs(poly_eval(coeffs, z[i])) <= 1e-8 * scale))
            fail(Errc::NoConvergence, "poly_roots: residual check failed after iteration cap");
        roots.push_back(z[i]);
    }
    return roots;
}

inline std::vector<cdouble> poly_roots(const std::vector<double>& coeffs) {
    std::vector<cdouble> c(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = cdouble{coeffs[i], 0.0};
    return poly_roots(std::move(c));
}

} // namespace ipstab
