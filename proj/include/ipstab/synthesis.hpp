#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace ipstab {

// ============================================================================
// Controller elimination: the loop (plant + delayed proportional law) is an
// exact delay differential equation in y alone.
// ============================================================================

// Equivalent PD gains K_d1..K_d(b+2) obtained by eliminating u.
inline PdGains pd_gains(const LinearSystem& sys, const IpController& ctrl) {
    const int b = sys.input_order();
    const double al = ctrl.alpha_gain;
    const double k = ctrl.k_gain;
    std::vector<double> g(static_cast<std::size_t>(b) + 2);
    g[0] = -sys.beta[0] / al;
    for (int j = 1; j <= b; ++j)
        g[static_cast<std::size_t>(j)] =
            -(sys.beta[static_cast<std::size_t>(j) - 1] * k + sys.beta[static_cast<std::size_t>(j)]) / al;
    g[static_cast<std::size_t>(b) + 1] = -sys.beta[static_cast<std::size_t>(b)] * k / al;
    return PdGains{std::move(g)};
}

// Closed loop in y alone:
//   bar_alpha[0] y^(a) + ... + bar_alpha[a] y
//     = alpha[0] y_tau^(a) + ... + alpha[a] y_tau.
// The non-delayed side decides the kind: Neutral keeps the full order,
// Advanced loses the leading derivative, Undelayed loses the whole side.
struct ClosedLoopForm {
    enum class Kind { Neutral, Advanced, Undelayed };

    Kind kind = Kind::Neutral;
    std::vector<double> bar_alpha; // a+1 entries, leading-first
    std::vector<double> alpha;     // plant coefficients, leading-first
    double tau = 0.0;
    int order = 0; // a
};

inline const char* kind_name(ClosedLoopForm::Kind k) {
    switch (k) {
    case ClosedLoopForm::Kind::Neutral: return "Neutral";
    case ClosedLoopForm::Kind::Advanced: return "Advanced";
    case ClosedLoopForm::Kind::Undelayed: return "Undelayed";
    }
    return "?";
}

// Coefficient subtraction is exact-intent: a value within 1e-12 of the
// cancellation scale is snapped to exactly zero so the kind trichotomy
// survives floating point.
inline ClosedLoopForm closed_loop(const LinearSystem& sys, const IpController& ctrl) {
    const PdGains pd = pd_gains(sys, ctrl);
    const int a = sys.order();
    const int b = sys.input_order();
    const int off = a - b - 1; // gains align to y^(b+1)..y^(0)

    ClosedLoopForm form;
    form.bar_alpha = sys.alpha;
    form.alpha = sys.alpha;
    form.tau = ctrl.tau;
    form.order = a;

    for (int i = off; i <= a; ++i) {
        const double kd = pd.gains[static_cast<std::size_t>(i - off)];
        const double ai = sys.alpha[static_cast<std::size_t>(i)];
        double v = ai - kd;
        if (std::abs(v) <= 1e-12 * std::max({1.0, std::abs(ai), std::abs(kd)})) v = 0.0;
        form.bar_alpha[static_cast<std::size_t>(i)] = v;
    }

    if (form.bar_alpha[0] != 0.0) {
        form.kind = ClosedLoopForm::Kind::Neutral;
    } else {
        const bool any = std::any_of(form.bar_alpha.begin(), form.bar_alpha.end(),
                                     [](double v) { return v != 0.0; });
        form.kind = any ? ClosedLoopForm::Kind::Advanced : ClosedLoopForm::Kind::Undelayed;
    }
    return form;
}

// ============================================================================
// Characteristic function F(z) = P(z) - e^{-tau z} Q(z)
// ============================================================================

// P carries the non-delayed side, Q the delayed side; both leading-first.
// deg Q = a always; P may have leading zeros (Advanced) or vanish (Undelayed).
struct QuasiPolynomial {
    std::vector<double> p;
    std::vector<double> q;
    double tau = 0.0;
};

inline QuasiPolynomial quasi_polynomial(const ClosedLoopForm& form) {
    return QuasiPolynomial{form.bar_alpha, form.alpha, form.tau};
}

} // namespace ipstab
