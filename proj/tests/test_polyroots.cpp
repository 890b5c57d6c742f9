#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ipstab/polyroots.hpp"

using namespace ipstab;

namespace {

template <typename F>
Errc thrown_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ipstab::Error");
    return Errc::InvalidArgument;
}

// Builds leading-first coefficients of prod (z - r_i).
std::vector<cdouble> from_roots(const std::vector<cdouble>& roots) {
    std::vector<cdouble> c{cdouble{1.0, 0.0}};
    for (const cdouble& r : roots) {
        std::vector<cdouble> next(c.size() + 1, cdouble{0.0, 0.0});
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= c[i] * r;
        }
        c = std::move(next);
    }
    return c;
}

double match_distance(std::vector<cdouble> expected, std::vector<cdouble> got) {
    REQUIRE(expected.size() == got.size());
    double worst = 0.0;
    for (const cdouble& e : expected) {
        auto it = std::min_element(got.begin(), got.end(), [&](cdouble a, cdouble b) {
            return std::abs(a - e) < std::abs(b - e);
        });
        worst = std::max(worst, std::abs(*it - e));
        got.erase(it);
    }
    return worst;
}

} // namespace

TEST_CASE("closed-form degrees") {
    auto r1 = poly_roots(std::vector<double>{1.0, 200.0 / 201.0});
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].real() == Catch::Approx(-200.0 / 201.0).epsilon(1e-14));
    CHECK(r1[0].imag() == 0.0);

    auto r2 = poly_roots(std::vector<double>{1.0, 0.0, -1.0});
    REQUIRE(r2.size() == 2);
    CHECK(match_distance({cdouble{1, 0}, cdouble{-1, 0}}, r2) < 1e-12);

    auto rq = poly_roots(std::vector<double>{1.0, 32.16, 1875.0});
    REQUIRE(rq.size() == 2);
    const double im = std::sqrt(1875.0 - 16.08 * 16.08);
    CHECK(match_distance({cdouble{-16.08, im}, cdouble{-16.08, -im}}, rq) < 1e-10);
}

TEST_CASE("higher degrees recover known roots") {
    const std::vector<cdouble> roots{{1.0, 0.0},  {-2.0, 0.0}, {3.5, 0.0},
                                     {-0.25, 0.0}, {1.5, 2.0},  {1.5, -2.0}};
    const auto coeffs = from_roots(roots);
    CHECK(match_distance(roots, poly_roots(coeffs)) < 1e-8);
}

TEST_CASE("roots at the origin are peeled exactly") {
    // z^2 (z - 1)
    auto r = poly_roots(std::vector<double>{1.0, -1.0, 0.0, 0.0});
    REQUIRE(r.size() == 3);
    const int zeros = static_cast<int>(std::count_if(
        r.begin(), r.end(), [](cdouble z) { return z == cdouble{0.0, 0.0}; }));
    CHECK(zeros == 2);
    CHECK(match_distance({{0, 0}, {0, 0}, {1, 0}}, r) < 1e-12);
}

TEST_CASE("error paths") {
    CHECK(thrown_code([] { poly_roots(std::vector<double>{}); }) == Errc::EmptyCoefficients);
    CHECK(thrown_code([] { poly_roots(std::vector<double>{5.0}); }) == Errc::DegreeZero);
    CHECK(thrown_code([] { poly_roots(std::vector<double>{0.0, 1.0, 2.0}); }) ==
          Errc::ZeroLeadingCoefficient);
}

TEST_CASE("random polynomials satisfy Vieta and the residual bound") {
    std::mt19937_64 rng(20250817u);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int deg = 3 + static_cast<int>(rng() % 6); // 3..8
        std::vector<double> c(static_cast<std::size_t>(deg) + 1);
        c[0] = (rng() % 2 ? 1.0 : -1.0) * (0.5 + std::abs(coeff(rng)));
        for (int i = 1; i <= deg; ++i) c[static_cast<std::size_t>(i)] = coeff(rng);

        const auto roots = poly_roots(c);
        REQUIRE(static_cast<int>(roots.size()) == deg);

        cdouble sum{0.0, 0.0};
        double cmax = 0.0;
        for (double v : c) cmax = std::max(cmax, std::abs(v));
        for (const cdouble& r : roots) {
            sum += r;
            const double scale =
                cmax * std::pow(std::max(1.0, std::abs(r)), static_cast<double>(deg));
            CHECK(std::abs(poly_eval(c, r)) <= 1e-8 * scale);
        }
        const double expected = -c[1] / c[0];
        CHECK(sum.real() == Catch::Approx(expected).margin(1e-6 * std::max(1.0, std::abs(expected))));
        CHECK(std::abs(sum.imag()) < 1e-6);
    }
}

TEST_CASE("polynomial helpers") {
    // 2z^3 - z + 4, leading-first.
    const std::vector<double> c{2.0, 0.0, -1.0, 4.0};
    CHECK(poly_eval(c, 2.0) == Catch::Approx(16.0 - 2.0 + 4.0));
    const auto d = poly_derivative(c);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 6.0);
    CHECK(d[1] == 0.0);
    CHECK(d[2] == -1.0);
}
