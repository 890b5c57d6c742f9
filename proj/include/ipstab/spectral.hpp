#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "polyroots.hpp"
#include "synthesis.hpp"

namespace ipstab {

// ============================================================================
// Quasi-polynomial evaluation
// ============================================================================

// value * exp(log_scale); the split keeps the delayed factor representable
// when Re(-tau z) is large.
struct ScaledValue {
    cdouble value{0.0, 0.0};
    double log_scale = 0.0;
};

namespace detail {

inline double qp_coeff_max(const QuasiPolynomial& qp) {
    double m = 0.0;
    for (double c : qp.p) m = std::max(m, std::abs(c));
    for (double c : qp.q) m = std::max(m, std::abs(c));
    return m;
}

// |F| comparison scale at z: max|coeff| * max(1, |z|)^deg.
inline double qp_log_scale_at(const QuasiPolynomial& qp, cdouble z) {
    const double deg = static_cast<double>(qp.q.size() > 0 ? qp.q.size() - 1 : 0);
    return std::log(std::max(qp_coeff_max(qp), 1e-300)) +
           deg * std::log(std::max(1.0, std::abs(z)));
}

} // namespace detail

inline ScaledValue qp_eval_scaled(const QuasiPolynomial& qp, cdouble z) {
    const cdouble s = -qp.tau * z;
    const cdouble pv = poly_eval(qp.p, z);
    const cdouble qv = poly_eval(qp.q, z);
    if (std::real(s) > 700.0) {
        const cdouble rot = std::polar(1.0, std::imag(s));
        return {pv * std::exp(-std::real(s)) - rot * qv, std::real(s)};
    }
    return {pv - std::exp(s) * qv, 0.0};
}

// Plain value; may overflow to inf when the scaled branch was required.
inline cdouble qp_eval(const QuasiPolynomial& qp, cdouble z) {
    const ScaledValue v = qp_eval_scaled(qp, z);
    return v.value * std::exp(v.log_scale);
}

// F'(z) = P'(z) - e^{-tau z} (Q'(z) - tau Q(z)), same scaling branch as F.
inline ScaledValue qp_derivative_scaled(const QuasiPolynomial& qp, cdouble z) {
    const cdouble s = -qp.tau * z;
    const cdouble dpv = poly_eval(poly_derivative(qp.p), z);
    const cdouble part = poly_eval(poly_derivative(qp.q), z) - qp.tau * poly_eval(qp.q, z);
    if (std::real(s) > 700.0) {
        const cdouble rot = std::polar(1.0, std::imag(s));
        return {dpv * std::exp(-std::real(s)) - rot * part, std::real(s)};
    }
    return {dpv - std::exp(s) * part, 0.0};
}

// ============================================================================
// Root refinement: damped Newton on the quasi-polynomial
// ============================================================================

inline cdouble refine_root(const QuasiPolynomial& qp, cdouble seed) {
    if (!std::isfinite(seed.real()) || !std::isfinite(seed.imag()))
        fail(Errc::InvalidArgument, "refine_root: seed must be finite");

    auto log_mag = [&](cdouble z) -> double {
        const ScaledValue v = qp_eval_scaled(qp, z);
        const double a = std::abs(v.value);
        if (a == 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(a) + v.log_scale;
    };
    auto converged = [&](cdouble z) {
        return log_mag(z) <= std::log(1e-10) + detail::qp_log_scale_at(qp, z);
    };
    // Threshold met: a few extra full Newton steps push the residual to the
    // rounding floor, which downstream consumers compare against absolute bounds.
    auto polish = [&](cdouble z) {
        double best = log_mag(z);
        for (int i = 0; i < 3; ++i) {
            const ScaledValue f = qp_eval_scaled(qp, z);
            const ScaledValue df = qp_derivative_scaled(qp, z);
            if (std::abs(f.value) == 0.0 || std::abs(df.value) == 0.0) break;
            const cdouble zn = z - f.value / df.value;
            const double fn = log_mag(zn);
            if (!(fn < best)) break;
            z = zn;
            best = fn;
        }
        return z;
    };

    cdouble z = seed;
    double fm = log_mag(z);
    for (int iter = 0; iter < 100; ++iter) {
        if (converged(z)) return polish(z);
        const ScaledValue f = qp_eval_scaled(qp, z);
        const ScaledValue df = qp_derivative_scaled(qp, z);
        if (std::abs(df.value) == 0.0)
            fail(Errc::NoConvergence, "refine_root: zero derivative");
        const cdouble full = f.value / df.value; // shared log_scale cancels
        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving) {
            const cdouble zn = z - t * full;
            const double fn = log_mag(zn);
            if (fn < fm) {
                if (std::abs(t * full) <= 1e-14 * std::max(1.0, std::abs(zn))) {
                    if (converged(zn)) return polish(zn);
                    fail(Errc::NoConvergence, "refine_root: stalled above residual target");
                }
                z = zn;
                fm = fn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (converged(z)) return polish(z);
            fail(Errc::NoConvergence, "refine_root: no descent direction");
        }
    }
    if (converged(z)) return polish(z);
    fail(Errc::NoConvergence, "refine_root: iteration cap reached");
}

// ============================================================================
// Root counting on a rectangle: argument principle with phase continuation
// ============================================================================

struct Rect {
    double re_min = 0.0, re_max = 0.0;
    double im_min = 0.0, im_max = 0.0;
};

namespace detail {

struct PhaseWalker {
    const QuasiPolynomial& qp;
    long budget;
    long used = 0;
    double total = 0.0;

    double phase_at(cdouble z) {
        if (++used > budget) fail(Errc::BudgetExceeded, "count_roots: sampling budget exhausted");
        const ScaledValue v = qp_eval_scaled(qp, z);
        const double a = std::abs(v.value);
        const double logmag = (a == 0.0) ? -std::numeric_limits<double>::infinity()
                                         : std::log(a) + v.log_scale;
        if (logmag <= std::log(1e-9) + qp_log_scale_at(qp, z))
            fail(Errc::RootOnBoundary, "count_roots: |F| vanishes on the rectangle boundary");
        return std::arg(v.value);
    }

    static double wrap(double dphi) {
        const double two_pi = 6.283185307179586476925286766559;
        while (dphi > 3.141592653589793) dphi -= two_pi;
        while (dphi <= -3.141592653589793) dphi += two_pi;
        return dphi;
    }

    void walk(cdouble z1, double p1, cdouble z2, double p2) {
        const double d = wrap(p2 - p1);
        if (std::abs(d) < 1.5707963267948966) {
            total += d;
            return;
        }
        if (std::abs(z2 - z1) <= 1e-13 * (1.0 + std::abs(z1)))
            fail(Errc::RootOnBoundary,
                 "count_roots: unresolved phase jump on the boundary (root too close)");
        const cdouble zm = 0.5 * (z1 + z2);
        const double pm = phase_at(zm);
        walk(z1, p1, zm, pm);
        walk(zm, pm, z2, p2);
    }
};

} // namespace detail

// Number of quasi-polynomial zeros strictly inside the rectangle, by the
// winding number of F along the positively oriented boundary.
// min_samples raises the initial per-edge sampling density (refinement is
// adaptive either way).
inline int count_roots(const QuasiPolynomial& qp, const Rect& rect, int min_samples = 0) {
    if (!(rect.re_min < rect.re_max) || !(rect.im_min < rect.im_max))
        fail(Errc::InvalidArgument, "count_roots: rectangle must have positive area");

    const cdouble corners[5] = {
        {rect.re_min, rect.im_min}, {rect.re_max, rect.im_min},
        {rect.re_max, rect.im_max}, {rect.re_min, rect.im_max},
        {rect.re_min, rect.im_min}};

    detail::PhaseWalker walker{qp, 2'000'000, 0, 0.0};
    for (int e = 0; e < 4; ++e) {
        const cdouble za = corners[e], zb = corners[e + 1];
        const double len = std::abs(zb - za);
        // The delayed factor sweeps phase at rate tau along the edge; start
        // with enough samples that it cannot alias between neighbours.
        int n0 = std::max(33, static_cast<int>(std::ceil(qp.tau * len / 0.7853981633974483)) + 1);
        n0 = std::max(n0, min_samples);
        cdouble zp = za;
        double pp = walker.phase_at(zp);
        for (int i = 1; i <= n0; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n0);
            const cdouble zn = za + t * (zb - za);
            const double pn = walker.phase_at(zn);
            walker.walk(zp, pp, zn, pn);
            zp = zn;
            pp = pn;
        }
    }

    const double two_pi = 6.283185307179586476925286766559;
    const double w = walker.total / two_pi;
    const long rounded = std::lround(w);
    if (std::abs(w - static_cast<double>(rounded)) > 0.25)
        fail(Errc::NoConvergence, "count_roots: winding number failed to close to an integer");
    return static_cast<int>(rounded);
}

// ============================================================================
// Asymptotic root chains of neutral quasi-polynomials
// ============================================================================

struct RootChainEstimate {
    double ratio_mag = 0.0; // |q_leading / p_leading|
    double ratio_arg = 0.0; // principal argument of the ratio
    int k = 0;
    cdouble z_k{0.0, 0.0};
    std::optional<cdouble> refined;
    double residual = std::numeric_limits<double>::quiet_NaN(); // |F(refined)|
};

// Estimates z_k = (1/tau)(log ratio_mag + i(ratio_arg + 2 k pi)) for
// k in [k_min, k_max]; each estimate optionally polished by refine_root.
inline std::vector<RootChainEstimate> chain_estimates(const QuasiPolynomial& qp, int k_min,
                                                      int k_max, bool refine = false) {
    if (qp.p.size() != qp.q.size() || qp.p.empty() || qp.p[0] == 0.0 || qp.q[0] == 0.0)
        fail(Errc::NotNeutral, "chain_estimates: leading coefficients of both sides must be nonzero");

    std::vector<RootChainEstimate> out;
    if (k_min > k_max) return out;

    const double ratio = qp.q[0] / qp.p[0];
    const double mag = std::abs(ratio);
    const double arg = (ratio >= 0.0) ? 0.0 : 3.141592653589793;
    const double two_pi = 6.283185307179586476925286766559;

    out.reserve(static_cast<std::size_t>(k_max - k_min + 1));
    for (int k = k_min; k <= k_max; ++k) {
        RootChainEstimate est;
        est.ratio_mag = mag;
        est.ratio_arg = arg;
        est.k = k;
        est.z_k = cdouble{std::log(mag) / qp.tau, (arg + two_pi * k) / qp.tau};
        if (refine) {
            try {
                const cdouble r = refine_root(qp, est.z_k);
                est.refined = r;
                est.residual = std::abs(qp_eval(qp, r));
            } catch (const Error& e) {
                if (e.code() != Errc::NoConvergence) throw;
            }
        }
        out.push_back(est);
    }
    return out;
}

// ============================================================================
// Neutral state-space form
// ============================================================================

// Y = (y, y', ..., y^(a-1)); Y'(t) = D Y'(t-tau) + A Y(t) + B Y(t-tau).
struct StateSpace {
    Matrix d_mat, a_mat, b_mat, a_hat;
    std::vector<double> a_coeffs; // A_i = (alpha_i - bar_alpha_i)/bar_alpha_1, i = 2..a+1
};

inline StateSpace state_space(const ClosedLoopForm& form) {
    if (form.kind != ClosedLoopForm::Kind::Neutral || form.bar_alpha[0] == 0.0)
        fail(Errc::NotNeutral, "state_space: requires a neutral closed-loop form");
    const std::size_t a = static_cast<std::size_t>(form.order);
    const double lead = form.bar_alpha[0];

    StateSpace ss;
    ss.d_mat = Matrix(a, a);
    ss.d_mat(a - 1, a - 1) = form.alpha[0] / lead;

    ss.a_mat = Matrix(a, a);
    ss.b_mat = Matrix(a, a);
    for (std::size_t i = 0; i + 1 < a; ++i) ss.a_mat(i, i + 1) = 1.0;
    for (std::size_t j = 0; j < a; ++j) {
        ss.a_mat(a - 1, j) = -form.bar_alpha[a - j] / lead;
        ss.b_mat(a - 1, j) = form.alpha[a - j] / lead;
    }
    ss.a_hat = mat_add(ss.a_mat, ss.b_mat);

    ss.a_coeffs.resize(a);
    for (std::size_t k = 0; k < a; ++k)
        ss.a_coeffs[k] = (form.alpha[k + 1] - form.bar_alpha[k + 1]) / lead;
    return ss;
}

// ============================================================================
// Stability verdict
// ============================================================================

enum class Status { Unstable, NotExponentiallyStable, ExponentiallyStable, Inconclusive,
                    UndelayedReduced };

enum class Reason { OrderGap, AdvancedType, PlantAutonomous, NeutralRatioAboveOne,
                    NeutralRatioEqualOne, SufficientConditionsHold, SufficientConditionsFailed };

inline const char* status_name(Status s) {
    switch (s) {
    case Status::Unstable: return "Unstable";
    case Status::NotExponentiallyStable: return "NotExponentiallyStable";
    case Status::ExponentiallyStable: return "ExponentiallyStable";
    case Status::Inconclusive: return "Inconclusive";
    case Status::UndelayedReduced: return "UndelayedReduced";
    }
    return "?";
}

inline const char* reason_name(Reason r) {
    switch (r) {
    case Reason::OrderGap: return "OrderGap";
    case Reason::AdvancedType: return "AdvancedType";
    case Reason::PlantAutonomous: return "PlantAutonomous";
    case Reason::NeutralRatioAboveOne: return "NeutralRatioAboveOne";
    case Reason::NeutralRatioEqualOne: return "NeutralRatioEqualOne";
    case Reason::SufficientConditionsHold: return "SufficientConditionsHold";
    case Reason::SufficientConditionsFailed: return "SufficientConditionsFailed";
    }
    return "?";
}

// Every quantity the decision touched; NaN marks "not computed on this path".
struct Certificate {
    double r = std::numeric_limits<double>::quiet_NaN();           // |alpha_1 / bar_alpha_1|
    double s_hat = std::numeric_limits<double>::quiet_NaN();       // spectral abscissa of A_hat
    double mu_hat = std::numeric_limits<double>::quiet_NaN();      // log norm of A_hat
    double d_norm = std::numeric_limits<double>::quiet_NaN();      // ||D||
    double b_norm = std::numeric_limits<double>::quiet_NaN();      // ||B||
    double contraction = std::numeric_limits<double>::quiet_NaN(); // tau ||B|| + ||D||
    double cond3_lhs = std::numeric_limits<double>::quiet_NaN();
    double cond3_rhs = std::numeric_limits<double>::quiet_NaN();
    double cond4_lhs = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> failed_conditions;     // subset of {2, 3, 4}
    std::vector<cdouble> plant_eigenvalues; // UndelayedReduced path only
};

struct StabilityVerdict {
    Status status = Status::Inconclusive;
    Reason reason = Reason::SufficientConditionsFailed;
    Certificate certificate;
};

// Decision procedure:
//   (i)  a > b+1: exponential stability is unattainable for any gains
//        (root chains approach the imaginary axis from the right);
//   (ii) a = b+1 with the non-delayed side degenerate: Advanced forms are
//        unstable; fully cancelled forms reduce to the autonomous plant,
//        whose eigenvalues are reported without a stability label;
//   (iii) neutral with a = b+1: the leading ratio r decides instability
//        (r > 1) and non-exponential stability (r = 1); for r < 1 the three
//        sufficient certificate conditions decide ExponentiallyStable vs
//        Inconclusive.
inline StabilityVerdict verdict(const LinearSystem& sys, const IpController& ctrl) {
    const ClosedLoopForm form = closed_loop(sys, ctrl);
    const int a = sys.order();
    const int b = sys.input_order();

    StabilityVerdict v;

    if (a > b + 1) {
        v.status = Status::NotExponentiallyStable;
        v.reason = Reason::OrderGap;
        v.certificate.r = std::abs(form.alpha[0] / form.bar_alpha[0]); // = 1 exactly
        return v;
    }

    if (form.kind == ClosedLoopForm::Kind::Advanced) {
        v.status = Status::Unstable;
        v.reason = Reason::AdvancedType;
        return v;
    }
    if (form.kind == ClosedLoopForm::Kind::Undelayed) {
        v.status = Status::UndelayedReduced;
        v.reason = Reason::PlantAutonomous;
        v.certificate.plant_eigenvalues = poly_roots(sys.alpha);
        return v;
    }

    // Neutral, a = b+1.
    Certificate& c = v.certificate;
    const double lead_bar = std::abs(form.bar_alpha[0]);
    c.r = std::abs(form.alpha[0]) / lead_bar;

    const StateSpace ss = state_space(form);
    c.s_hat = spectral_abscissa(ss.a_hat);
    c.mu_hat = log_norm(ss.a_hat);
    c.d_norm = two_norm(ss.d_mat);
    c.b_norm = two_norm(ss.b_mat);
    c.contraction = form.tau * c.b_norm + c.d_norm;

    const std::vector<double> tail(form.alpha.begin() + 1, form.alpha.end());
    const double tail_norm = vec_norm2(tail);
    c.cond3_lhs = form.tau * tail_norm + std::abs(form.alpha[0]);
    c.cond3_rhs = lead_bar;
    c.cond4_lhs = vec_norm2(ss.a_coeffs) * (std::abs(form.alpha[0]) + form.tau * tail_norm) +
                  lead_bar * c.mu_hat;

    if (std::abs(c.r - 1.0) <= 1e-9) {
        v.status = Status::NotExponentiallyStable;
        v.reason = Reason::NeutralRatioEqualOne;
        return v;
    }
    if (c.r > 1.0) {
        v.status = Status::Unstable;
        v.reason = Reason::NeutralRatioAboveOne;
        return v;
    }

    if (!(c.s_hat < 0.0)) c.failed_conditions.push_back(2);
    if (!(c.cond3_lhs < c.cond3_rhs)) c.failed_conditions.push_back(3);
    if (!(c.cond4_lhs < 0.0)) c.failed_conditions.push_back(4);

    if (c.failed_conditions.empty()) {
        v.status = Status::ExponentiallyStable;
        v.reason = Reason::SufficientConditionsHold;
    } else {
        v.status = Status::Inconclusive;
        v.reason = Reason::SufficientConditionsFailed;
    }
    return v;
}

} // namespace ipstab
