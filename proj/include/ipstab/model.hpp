#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ipstab {

// ============================================================================
// Plant and controller types
// ============================================================================

// SISO plant
//   alpha[0] y^(a) + ... + alpha[a] y = beta[0] u^(b) + ... + beta[b] u
// Coefficients are stored exactly as given, leading-first; no normalization
// happens at construction.
struct LinearSystem {
    std::vector<double> alpha; // a+1 entries, alpha[0] multiplies y^(a)
    std::vector<double> beta;  // b+1 entries, beta[0] multiplies u^(b)

    [[nodiscard]] int order() const { return static_cast<int>(alpha.size()) - 1; }
    [[nodiscard]] int input_order() const { return static_cast<int>(beta.size()) - 1; }
};

// Validated constructor. Requires a > b (strict causality) and nonzero
// leading coefficients on both sides.
inline LinearSystem new_system(std::vector<double> alpha, std::vector<double> beta) {
    if (alpha.empty() || beta.empty())
        fail(Errc::EmptyCoefficients, "plant coefficient lists must be nonempty");
    if (alpha.size() <= beta.size())
        fail(Errc::NotStrictlyCausal,
             "plant must be strictly causal: output order a must exceed input order b (got a=" +
                 std::to_string(alpha.size() - 1) + ", b=" + std::to_string(beta.size() - 1) + ")");
    if (alpha.front() == 0.0 || beta.front() == 0.0)
        fail(Errc::ZeroLeadingCoefficient, "leading coefficients alpha[0] and beta[0] must be nonzero");
    return LinearSystem{std::move(alpha), std::move(beta)};
}

// Proportional controller on the first-order input-output shortcut
//   u(t) = u(t - tau) - (k_gain * y(t) + dy(t)) / alpha_gain.
struct IpController {
    double alpha_gain; // nonzero design parameter
    double k_gain;     // proportional gain
    double tau;        // strictly positive delay (also the measurement delay)
};

inline IpController new_controller(double alpha_gain, double k_gain, double tau) {
    if (alpha_gain == 0.0) fail(Errc::InvalidArgument, "controller alpha_gain must be nonzero");
    if (!(tau > 0.0)) fail(Errc::InvalidArgument, "controller tau must be strictly positive");
    if (!std::isfinite(alpha_gain) || !std::isfinite(k_gain) || !std::isfinite(tau))
        fail(Errc::InvalidArgument, "controller parameters must be finite");
    return IpController{alpha_gain, k_gain, tau};
}

// Derived proportional-derivative gains K_d1..K_d(b+2) equivalent to the
// controller after eliminating u through the plant.
struct PdGains {
    std::vector<double> gains; // length b+2, gains[0] = -beta[0]/alpha_gain
};

// ============================================================================
// Initial history
// ============================================================================

// One signal channel on [-tau, 0]. Closed-form kinds are globally smooth;
// sampled data is interpolated with a monotone cubic (continuous first
// derivative, no overshoot between samples).
struct Signal {
    enum class Kind { Exponential, Polynomial, Constant, Sampled };

    Kind kind = Kind::Constant;
    double rate = 1.0;  // Exponential: value = scale * exp(rate * t)
    double scale = 1.0;
    std::vector<double> coeffs; // Polynomial: value = sum coeffs[k] * t^k
    double value = 0.0;         // Constant
    std::vector<double> times;  // Sampled: strictly increasing grid
    std::vector<double> values;
    std::vector<double> slopes; // Sampled: precomputed monotone-cubic slopes
};

inline Signal exponential_signal(double rate, double scale = 1.0) {
    Signal s;
    s.kind = Signal::Kind::Exponential;
    s.rate = rate;
    s.scale = scale;
    return s;
}

inline Signal polynomial_signal(std::vector<double> coeffs) {
    if (coeffs.empty()) fail(Errc::EmptyCoefficients, "polynomial history needs coefficients");
    Signal s;
    s.kind = Signal::Kind::Polynomial;
    s.coeffs = std::move(coeffs);
    return s;
}

inline Signal constant_signal(double value) {
    Signal s;
    s.kind = Signal::Kind::Constant;
    s.value = value;
    return s;
}

namespace detail {

// Fritsch-Carlson slopes: interpolant is monotone wherever the data is.
inline std::vector<double> monotone_cubic_slopes(const std::vector<double>& x,
                                                 const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
        m[i] = (d[i - 1] * d[i] > 0.0) ? 0.5 * (d[i - 1] + d[i]) : 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0) {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        const double a = m[i] / d[i];
        const double b = m[i + 1] / d[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double t = 3.0 / std::sqrt(s);
            m[i] = t * a * d[i];
            m[i + 1] = t * b * d[i];
        }
    }
    return m;
}

} // namespace detail

inline Signal sampled_signal(std::vector<double> times, std::vector<double> values) {
    if (times.size() != values.size())
        fail(Errc::InvalidArgument, "sampled history: times and values must have equal length");
    if (times.size() < 2) fail(Errc::InvalidArgument, "sampled history needs at least two samples");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            fail(Errc::InvalidArgument, "sampled history grid must be strictly increasing");
    Signal s;
    s.kind = Signal::Kind::Sampled;
    s.slopes = detail::monotone_cubic_slopes(times, values);
    s.times = std::move(times);
    s.values = std::move(values);
    return s;
}

// Evaluates a signal derivative with no domain restriction for closed-form
// kinds. Sampled signals are only defined on their grid span and only up to
// first derivatives.
inline double eval_signal(const Signal& s, double t, int order) {
    if (order < 0) fail(Errc::InvalidArgument, "derivative order must be nonnegative");
    switch (s.kind) {
    case Signal::Kind::Exponential:
        return s.scale * std::pow(s.rate, order) * std::exp(s.rate * t);
    case Signal::Kind::Polynomial: {
        double acc = 0.0;
        double tp = 1.0;
        for (std::size_t k = static_cast<std::size_t>(order); k < s.coeffs.size(); ++k) {
            double factor = 1.0;
            for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - static_cast<std::size_t>(j));
            acc += s.coeffs[k] * factor * tp;
            tp *= t;
        }
        return acc;
    }
    case Signal::Kind::Constant:
        return order == 0 ? s.value : 0.0;
    case Signal::Kind::Sampled: {
        if (order > 1)
            fail(Errc::DerivativeUnavailable,
                 "sampled histories provide derivatives up to first order only");
        const auto& x = s.times;
        const double span = x.back() - x.front();
        const double tol = 1e-12 * std::max(1.0, std::abs(span));
        if (t < x.front() - tol || t > x.back() + tol)
            fail(Errc::OutOfDomain, "sampled history evaluated outside its grid");
        double tc = std::min(std::max(t, x.front()), x.back());
        std::size_t i = 0;
        while (i + 2 < x.size() && tc >= x[i + 1]) ++i;
        const double h = x[i + 1] - x[i];
        const double th = (tc - x[i]) / h;
        const double y0 = s.values[i], y1 = s.values[i + 1];
        const double m0 = s.slopes[i] * h, m1 = s.slopes[i + 1] * h;
        const double t2 = th * th, t3 = t2 * th;
        if (order == 0) {
            return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + th) * m0 +
                   (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
        }
        const double d = (6 * t2 - 6 * th) * y0 + (3 * t2 - 4 * th + 1) * m0 +
                         (-6 * t2 + 6 * th) * y1 + (3 * t2 - 2 * th) * m1;
        return d / h;
    }
    }
    fail(Errc::InvalidArgument, "unknown signal kind");
}

// Output and control histories on [-tau, 0].
struct HistorySpec {
    Signal output;  // y on [-tau, 0]
    Signal control; // u on [-tau, 0]
    double tau = 0.0;
};

inline HistorySpec make_history(Signal output, Signal control, double tau) {
    if (!(tau > 0.0)) fail(Errc::InvalidArgument, "history delay must be strictly positive");
    const double tol = 1e-9 * tau;
    for (const Signal* sig : {&output, &control}) {
        if (sig->kind != Signal::Kind::Sampled) continue;
        if (std::abs(sig->times.front() + tau) > tol || std::abs(sig->times.back()) > tol)
            fail(Errc::InvalidArgument, "sampled history grid must cover exactly [-tau, 0]");
    }
    return HistorySpec{std::move(output), std::move(control), tau};
}

// The default initialization used throughout the worked examples:
// y(t) = e^t and u(t) = 0 on [-tau, 0].
inline HistorySpec default_history(double tau) {
    return make_history(exponential_signal(1.0), constant_signal(0.0), tau);
}

inline void check_history_domain(const HistorySpec& h, double t) {
    const double tol = 1e-9 * h.tau;
    if (t < -h.tau - tol || t > tol) fail(Errc::OutOfDomain, "history evaluated outside [-tau, 0]");
}

// Derivative of the output history at t in [-tau, 0].
inline double eval_history(const HistorySpec& h, double t, int order) {
    check_history_domain(h, t);
    return eval_signal(h.output, t, order);
}

// Derivative of the control history at t in [-tau, 0].
inline double eval_control_history(const HistorySpec& h, double t, int order) {
    check_history_domain(h, t);
    return eval_signal(h.control, t, order);
}

} // namespace ipstab
