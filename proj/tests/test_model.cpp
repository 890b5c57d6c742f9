#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ipstab/model.hpp"

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

} // namespace

TEST_CASE("new_system validates coefficient lists") {
    const LinearSystem sys = new_system({1.0, 32.16, 1875.0}, {65.82, -85.89});
    CHECK(sys.order() == 2);
    CHECK(sys.input_order() == 1);

    CHECK(thrown_code([] { new_system({}, {1.0}); }) == Errc::EmptyCoefficients);
    CHECK(thrown_code([] { new_system({1.0, 2.0}, {}); }) == Errc::EmptyCoefficients);
    CHECK(thrown_code([] { new_system({1.0, 2.0}, {1.0, 1.0}); }) == Errc::NotStrictlyCausal);
    CHECK(thrown_code([] { new_system({1.0}, {1.0, 1.0}); }) == Errc::NotStrictlyCausal);
    CHECK(thrown_code([] { new_system({0.0, 1.0}, {1.0}); }) == Errc::ZeroLeadingCoefficient);
    CHECK(thrown_code([] { new_system({1.0, 1.0}, {0.0}); }) == Errc::ZeroLeadingCoefficient);
}

TEST_CASE("new_controller validates parameters") {
    const IpController c = new_controller(-2.0, 10.0, 0.01);
    CHECK(c.alpha_gain == -2.0);
    CHECK(c.k_gain == 10.0);
    CHECK(c.tau == 0.01);

    CHECK(thrown_code([] { new_controller(0.0, 1.0, 0.1); }) == Errc::InvalidArgument);
    CHECK(thrown_code([] { new_controller(1.0, 1.0, 0.0); }) == Errc::InvalidArgument);
    CHECK(thrown_code([] { new_controller(1.0, 1.0, -0.5); }) == Errc::InvalidArgument);
    CHECK(thrown_code([] { new_controller(1.0, NAN, 0.1); }) == Errc::InvalidArgument);
}

TEST_CASE("exponential signal derivatives") {
    const Signal s = exponential_signal(-3.0, 2.0);
    CHECK(eval_signal(s, 0.0, 0) == Catch::Approx(2.0));
    CHECK(eval_signal(s, 0.5, 0) == Catch::Approx(2.0 * std::exp(-1.5)));
    CHECK(eval_signal(s, 0.5, 1) == Catch::Approx(-6.0 * std::exp(-1.5)));
    CHECK(eval_signal(s, 0.5, 3) == Catch::Approx(-54.0 * std::exp(-1.5)));
    // Rate zero degenerates to a constant, including at order zero.
    const Signal flat = exponential_signal(0.0, 5.0);
    CHECK(eval_signal(flat, 1.0, 0) == Catch::Approx(5.0));
    CHECK(eval_signal(flat, 1.0, 2) == 0.0);
}

TEST_CASE("polynomial signal derivatives") {
    // 2 + 3t + 5t^2
    const Signal s = polynomial_signal({2.0, 3.0, 5.0});
    CHECK(eval_signal(s, 2.0, 0) == Catch::Approx(2.0 + 6.0 + 20.0));
    CHECK(eval_signal(s, 2.0, 1) == Catch::Approx(3.0 + 20.0));
    CHECK(eval_signal(s, 2.0, 2) == Catch::Approx(10.0));
    CHECK(eval_signal(s, 2.0, 3) == 0.0);
    CHECK(thrown_code([] { polynomial_signal({}); }) == Errc::EmptyCoefficients);
}

TEST_CASE("constant signal") {
    const Signal s = constant_signal(7.5);
    CHECK(eval_signal(s, -0.3, 0) == 7.5);
    CHECK(eval_signal(s, -0.3, 1) == 0.0);
}

TEST_CASE("sampled signal interpolation") {
    CHECK(thrown_code([] { sampled_signal({0.0, 1.0}, {1.0}); }) == Errc::InvalidArgument);
    CHECK(thrown_code([] { sampled_signal({0.0}, {1.0}); }) == Errc::InvalidArgument);
    CHECK(thrown_code([] { sampled_signal({0.0, 0.0}, {1.0, 2.0}); }) == Errc::InvalidArgument);

    const Signal s = sampled_signal({-1.0, -0.5, -0.25, 0.0}, {0.0, 1.0, 1.5, 4.0});
    CHECK(eval_signal(s, -1.0, 0) == Catch::Approx(0.0));
    CHECK(eval_signal(s, -0.5, 0) == Catch::Approx(1.0));
    CHECK(eval_signal(s, 0.0, 0) == Catch::Approx(4.0));

    // Monotone data must interpolate monotonically (no overshoot).
    double prev = eval_signal(s, -1.0, 0);
    for (int i = 1; i <= 200; ++i) {
        const double t = -1.0 + static_cast<double>(i) / 200.0;
        const double v = eval_signal(s, t, 0);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }

    // First derivative approximates a finite difference.
    const double h = 1e-6;
    const double fd = (eval_signal(s, -0.4 + h, 0) - eval_signal(s, -0.4 - h, 0)) / (2 * h);
    CHECK(eval_signal(s, -0.4, 1) == Catch::Approx(fd).margin(1e-6));

    CHECK(thrown_code([&] { eval_signal(s, -0.4, 2); }) == Errc::DerivativeUnavailable);
    CHECK(thrown_code([&] { eval_signal(s, 0.5, 0); }) == Errc::OutOfDomain);
    CHECK(thrown_code([&] { eval_signal(s, -1.5, 0); }) == Errc::OutOfDomain);
}

TEST_CASE("history construction and evaluation") {
    const HistorySpec h = default_history(0.5);
    CHECK(h.tau == 0.5);
    CHECK(eval_history(h, 0.0, 0) == Catch::Approx(1.0));
    CHECK(eval_history(h, -0.5, 0) == Catch::Approx(std::exp(-0.5)));
    CHECK(eval_history(h, -0.25, 1) == Catch::Approx(std::exp(-0.25)));
    CHECK(eval_control_history(h, -0.25, 0) == 0.0);

    CHECK(thrown_code([&] { eval_history(h, 0.1, 0); }) == Errc::OutOfDomain);
    CHECK(thrown_code([&] { eval_history(h, -0.6, 0); }) == Errc::OutOfDomain);
    CHECK(thrown_code([] { default_history(0.0); }) == Errc::InvalidArgument);

    // Closed-form signals extend below -tau (no domain check in eval_signal);
    // backward-difference startup stencils rely on this.
    CHECK(eval_signal(h.output, -1.0, 0) == Catch::Approx(std::exp(-1.0)));
}

TEST_CASE("sampled history must span exactly the delay window") {
    const Signal y = sampled_signal({-0.5, -0.2, 0.0}, {1.0, 2.0, 3.0});
    const Signal u = constant_signal(0.0);
    CHECK_NOTHROW(make_history(y, u, 0.5));
    CHECK(thrown_code([&] { make_history(y, u, 0.4); }) == Errc::InvalidArgument);
    CHECK(thrown_code([&] { make_history(y, u, 0.6); }) == Errc::InvalidArgument);
}
