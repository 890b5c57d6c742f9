#pragma once
// Time-domain integrators for the closed loop in its several forms, plus a
// decay-envelope fitter used to classify trajectories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "synthesis.hpp"

namespace ipstab {

struct Trajectory {
    std::vector<double> t;
    // Channel-major: y_derivs[m][i] is the m-th output derivative at t[i].
    // Channel count equals the plant order.
    std::vector<std::vector<double>> y_derivs;
    std::vector<double> u;
    std::vector<double> f_true; // ydot - alpha*u
    std::vector<double> f_hat;  // ydot - alpha*u(t - tau)
    struct Meta {
        std::string integrator;
        double step = 0.0;
        bool overflow = false;
        bool divergence = false;
    } meta;

    [[nodiscard]] const std::vector<double>& y() const { return y_derivs.at(0); }
};

namespace detail {

constexpr double overflow_limit = 1e12;

inline double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Observable companion realization: xdot_k = x_{k+1} - d_k x_1 + n_k u, y = x_1.
struct CompanionForm {
    std::size_t a = 0;
    std::size_t b = 0;
    std::vector<double> d; // d[i] = alpha_{i+2}/alpha_1
    std::vector<double> n; // nonzero tail carries beta/alpha_1
};

inline CompanionForm companion_form(const LinearSystem& sys) {
    CompanionForm cf;
    cf.a = sys.order();
    cf.b = sys.input_order();
    cf.d.resize(cf.a);
    cf.n.assign(cf.a, 0.0);
    for (std::size_t i = 0; i < cf.a; ++i) cf.d[i] = sys.alpha[i + 1] / sys.alpha[0];
    for (std::size_t j = cf.a - cf.b; j <= cf.a; ++j)
        cf.n[j - 1] = sys.beta[j - (cf.a - cf.b)] / sys.alpha[0];
    return cf;
}

inline void companion_deriv(const CompanionForm& cf, const std::vector<double>& x,
                            double u, std::vector<double>& dx) {
    for (std::size_t k = 0; k < cf.a; ++k)
        dx[k] = (k + 1 < cf.a ? x[k + 1] : 0.0) - cf.d[k] * x[0] + cf.n[k] * u;
}

// Output-derivative chain read off the state: level m peels one integrator and
// needs input derivatives up to order m - (a - b).
inline void output_cascade(const CompanionForm& cf, const std::vector<double>& x,
                           const std::vector<double>& u_der, std::vector<double>& y_der) {
    y_der[0] = x[0];
    for (std::size_t m = 1; m < cf.a; ++m) {
        double v = x[m];
        for (std::size_t j = 1; j <= m; ++j) v -= cf.d[j - 1] * y_der[m - j];
        for (std::size_t j = std::max<std::size_t>(cf.a - cf.b, 1); j <= m; ++j)
            v += cf.n[j - 1] * u_der[m - j];
        y_der[m] = v;
    }
}

// Control value at an integration stage: the algebraic loop in u is solved in
// closed form; denom = 1 + n_1/alpha_gain must be checked by the caller.
inline double stage_control(const CompanionForm& cf, double k_gain, double alpha_gain,
                            double denom, const std::vector<double>& x, double u_tau) {
    const double row = (cf.a >= 2 ? x[1] : 0.0) - cf.d[0] * x[0];
    return (u_tau - (k_gain * x[0] + row) / alpha_gain) / denom;
}

// Differentiated control law: every derivative order of u satisfies the same
// algebraic relation as u itself, with the chain residue G_m in place of row.
// y_der must have size a, u_der and ud_tau size max(b, 1).
inline void control_cascade(const CompanionForm& cf, double k_gain, double alpha_gain,
                            double denom, const std::vector<double>& x,
                            const std::vector<double>& ud_tau, std::vector<double>& y_der,
                            std::vector<double>& u_der) {
    const std::size_t nu = u_der.size();
    y_der[0] = x[0];
    for (std::size_t m = 0; m < cf.a; ++m) {
        if (m >= 1) {
            double v = x[m];
            for (std::size_t j = 1; j <= m; ++j) v -= cf.d[j - 1] * y_der[m - j];
            for (std::size_t j = std::max<std::size_t>(cf.a - cf.b, 1); j <= m; ++j)
                v += cf.n[j - 1] * u_der[m - j];
            y_der[m] = v;
        }
        if (m < nu) {
            double g = (m + 1 < cf.a ? x[m + 1] : 0.0);
            for (std::size_t j = 1; j <= m + 1; ++j) g -= cf.d[j - 1] * y_der[m + 1 - j];
            for (std::size_t j = std::max<std::size_t>(cf.a - cf.b, 2); j <= m + 1; ++j)
                g += cf.n[j - 1] * u_der[m + 1 - j];
            u_der[m] = (ud_tau[m] - (k_gain * y_der[m] + g) / alpha_gain) / denom;
        }
    }
}

inline std::int64_t delay_steps(double tau, double step) {
    if (!(step > 0.0) || !std::isfinite(step))
        fail(Errc::InvalidArgument, "step must be positive");
    const std::int64_t n = std::llround(tau / step);
    if (n < 1 || std::abs(static_cast<double>(n) * step - tau) > 1e-9 * tau)
        fail(Errc::InvalidArgument, "step must evenly divide the delay");
    return n;
}

inline std::int64_t horizon_steps(double horizon, double h) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        fail(Errc::InvalidArgument, "horizon must be positive");
    const std::int64_t m = std::llround(horizon / h);
    if (m < 1) fail(Errc::InvalidArgument, "horizon shorter than one step");
    return m;
}

} // namespace detail

// ============================================================================
// Loop-level integrator: plant in companion form, controller solved pointwise
// ============================================================================

inline Trajectory simulate_loop(const LinearSystem& sys, const IpController& ctrl,
                                const HistorySpec& hist, double horizon, double step) {
    const auto cf = detail::companion_form(sys);
    const std::size_t a = cf.a;
    const std::size_t b = cf.b;
    const double tau = ctrl.tau;
    if (std::abs(hist.tau - tau) > 1e-9 * tau)
        fail(Errc::InvalidArgument, "history window does not match the controller delay");

    const double denom = 1.0 + cf.n[0] / ctrl.alpha_gain;
    if (std::abs(denom) <= 1e-12)
        fail(Errc::AlgebraicLoopSingular,
             "control law has no pointwise solution (leading closed-loop coefficient cancels)");

    const std::int64_t N = detail::delay_steps(tau, step);
    if (N < 4) fail(Errc::InvalidArgument, "step must be at most a quarter of the delay");
    const double h = tau / static_cast<double>(N);
    const std::int64_t M = detail::horizon_steps(horizon, h);

    const std::size_t nu = std::max<std::size_t>(b, 1);

    // Node values of the control and its derivatives. uL carries the limit
    // from the left, uR from the right; they differ only at multiples of tau,
    // where the control law jumps.
    std::vector<std::vector<double>> uL(nu), uR(nu);
    for (auto& v : uL) v.assign(static_cast<std::size_t>(M) + 1, 0.0);
    for (auto& v : uR) v.assign(static_cast<std::size_t>(M) + 1, 0.0);

    std::vector<double> x(a, 0.0);
    {
        std::vector<double> yh(a, 0.0), uh(nu, 0.0);
        for (std::size_t m = 0; m < a; ++m) yh[m] = eval_history(hist, 0.0, static_cast<int>(m));
        for (std::size_t q = 0; q < b; ++q)
            uh[q] = eval_control_history(hist, 0.0, static_cast<int>(q));
        for (std::size_t m = 0; m < a; ++m) {
            double v = yh[m];
            for (std::size_t j = 1; j <= m; ++j) v += cf.d[j - 1] * yh[m - j];
            for (std::size_t j = a - b; j <= m; ++j) v -= cf.n[j - 1] * uh[m - j];
            x[m] = v;
        }
    }

    auto node_uR = [&](std::int64_t idx, std::size_t q) -> double {
        if (idx < 0)
            return eval_control_history(hist, static_cast<double>(idx) * h, static_cast<int>(q));
        return uR[q][static_cast<std::size_t>(idx)];
    };
    auto node_uL = [&](std::int64_t idx, std::size_t q) -> double {
        if (idx < 0)
            return eval_control_history(hist, static_cast<double>(idx) * h, static_cast<int>(q));
        return uL[q][static_cast<std::size_t>(idx)];
    };
    // Delayed control at a segment midpoint: 4-point Lagrange confined to one
    // delay period, so the stencil never straddles a jump.
    auto mid_u = [&](std::int64_t p) -> double {
        if (p < 0) return eval_control_history(hist, (static_cast<double>(p) + 0.5) * h, 0);
        const std::int64_t j = p / N;
        const std::int64_t s = std::clamp(p - 1, j * N, (j + 1) * N - 3);
        const double xi = static_cast<double>(p - s) + 0.5;
        double acc = 0.0;
        for (std::int64_t i = 0; i < 4; ++i) {
            double w = 1.0;
            for (std::int64_t q = 0; q < 4; ++q)
                if (q != i) w *= (xi - static_cast<double>(q)) / static_cast<double>(i - q);
            const std::int64_t node = s + i;
            const double val = (node == (j + 1) * N ? uL[0][static_cast<std::size_t>(node)]
                                                    : uR[0][static_cast<std::size_t>(node)]);
            acc += w * val;
        }
        return acc;
    };

    Trajectory traj;
    traj.meta.integrator = "loop";
    traj.meta.step = h;
    traj.y_derivs.assign(a, {});
    std::vector<double> y_der(a, 0.0), u_der(nu, 0.0), ud(nu, 0.0);

    auto record = [&](double tn, std::int64_t delayed_idx) -> bool {
        const double yv = y_der[0];
        if (!std::isfinite(yv)) return false;
        traj.t.push_back(tn);
        for (std::size_t m = 0; m < a; ++m) traj.y_derivs[m].push_back(y_der[m]);
        const double uv = u_der[0];
        const double dy = (a >= 2 ? y_der[1] : -cf.d[0] * x[0] + cf.n[0] * uv);
        traj.u.push_back(uv);
        traj.f_true.push_back(dy - ctrl.alpha_gain * uv);
        traj.f_hat.push_back(dy - ctrl.alpha_gain * node_uR(delayed_idx, 0));
        return std::abs(yv) <= detail::overflow_limit;
    };

    // Node 0: left limits come straight from history, right limits from the
    // control law fed with history data at -tau.
    for (std::size_t q = 0; q < nu; ++q) {
        uL[q][0] = eval_control_history(hist, 0.0, static_cast<int>(q));
        ud[q] = eval_control_history(hist, -tau, static_cast<int>(q));
    }
    detail::control_cascade(cf, ctrl.k_gain, ctrl.alpha_gain, denom, x, ud, y_der, u_der);
    for (std::size_t q = 0; q < nu; ++q) uR[q][0] = u_der[q];
    bool alive = record(0.0, -N);

    std::vector<double> k1(a), k2(a), k3(a), k4(a), xs(a);
    for (std::int64_t n = 0; n < M && alive; ++n) {
        const std::int64_t p = n - N;
        const double u1 = node_uR(p, 0);
        const double um = mid_u(p);
        const double u4 = node_uL(p + 1, 0);

        detail::companion_deriv(
            cf, x, detail::stage_control(cf, ctrl.k_gain, ctrl.alpha_gain, denom, x, u1), k1);
        for (std::size_t i = 0; i < a; ++i) xs[i] = x[i] + 0.5 * h * k1[i];
        detail::companion_deriv(
            cf, xs, detail::stage_control(cf, ctrl.k_gain, ctrl.alpha_gain, denom, xs, um), k2);
        for (std::size_t i = 0; i < a; ++i) xs[i] = x[i] + 0.5 * h * k2[i];
        detail::companion_deriv(
            cf, xs, detail::stage_control(cf, ctrl.k_gain, ctrl.alpha_gain, denom, xs, um), k3);
        for (std::size_t i = 0; i < a; ++i) xs[i] = x[i] + h * k3[i];
        detail::companion_deriv(
            cf, xs, detail::stage_control(cf, ctrl.k_gain, ctrl.alpha_gain, denom, xs, u4), k4);
        for (std::size_t i = 0; i < a; ++i)
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        const std::int64_t n1 = n + 1;
        for (std::size_t q = 0; q < nu; ++q) ud[q] = node_uL(n1 - N, q);
        detail::control_cascade(cf, ctrl.k_gain, ctrl.alpha_gain, denom, x, ud, y_der, u_der);
        for (std::size_t q = 0; q < nu; ++q) uL[q][static_cast<std::size_t>(n1)] = u_der[q];
        for (std::size_t q = 0; q < nu; ++q) ud[q] = node_uR(n1 - N, q);
        detail::control_cascade(cf, ctrl.k_gain, ctrl.alpha_gain, denom, x, ud, y_der, u_der);
        for (std::size_t q = 0; q < nu; ++q) uR[q][static_cast<std::size_t>(n1)] = u_der[q];

        alive = record(static_cast<double>(n1) * h, n1 - N);
    }
    if (!alive) {
        traj.meta.overflow = true;
        traj.meta.divergence = true;
    }
    return traj;
}

// ============================================================================
// Method of steps for the synthesized neutral form
// ============================================================================

inline Trajectory simulate_neutral(const ClosedLoopForm& form, const HistorySpec& hist,
                                   double horizon, double step) {
    if (form.kind != ClosedLoopForm::Kind::Neutral)
        fail(Errc::NotNeutral, "integrator requires a neutral closed loop");
    const double tau = form.tau;
    if (std::abs(hist.tau - tau) > 1e-9 * tau)
        fail(Errc::InvalidArgument, "history window does not match the loop delay");
    const std::int64_t N = detail::delay_steps(tau, step);
    const double h = tau / static_cast<double>(N);
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        fail(Errc::InvalidArgument, "horizon must be positive");
    const auto intervals =
        static_cast<std::int64_t>(std::ceil(horizon / tau - 1e-9));
    if (intervals < 1) fail(Errc::InvalidArgument, "horizon shorter than one delay interval");

    const std::size_t a = form.order;
    const auto& bar = form.bar_alpha;
    const auto& al = form.alpha;

    // Ydot = where the top a-1 rows shift and the last row divides by bar1;
    // the delayed derivative enters only through its last component.
    auto rhs = [&](const std::vector<double>& y, const std::vector<double>& ytau,
                   double dtau_last, std::vector<double>& dy) {
        for (std::size_t k = 0; k + 1 < a; ++k) dy[k] = y[k + 1];
        double acc = al[0] * dtau_last;
        for (std::size_t i = 2; i <= a + 1; ++i)
            acc += -bar[i - 1] * y[a + 1 - i] + al[i - 1] * ytau[a + 1 - i];
        dy[a - 1] = acc / bar[0];
    };

    std::vector<std::vector<double>> ys(static_cast<std::size_t>(N) + 1,
                                        std::vector<double>(a, 0.0));
    std::vector<std::vector<double>> ds = ys, prev_ys = ys, prev_ds = ys;

    Trajectory traj;
    traj.meta.integrator = "neutral";
    traj.meta.step = h;
    traj.y_derivs.assign(a, {});

    auto record = [&](double tn, const std::vector<double>& y) -> bool {
        if (!std::isfinite(y[0])) return false;
        traj.t.push_back(tn);
        for (std::size_t m = 0; m < a; ++m) traj.y_derivs[m].push_back(y[m]);
        traj.u.push_back(detail::quiet_nan());
        traj.f_true.push_back(detail::quiet_nan());
        traj.f_hat.push_back(detail::quiet_nan());
        return std::abs(y[0]) <= detail::overflow_limit;
    };

    bool alive = true;
    std::vector<double> ytau(a), dy(a), k1(a), k2(a), k3(a), k4(a), st(a);
    for (std::int64_t m = 0; m < intervals && alive; ++m) {
        const double t0 = static_cast<double>(m) * tau;
        const double t0_prev = t0 - tau;

        // Delayed state and last delayed-derivative component at time s - tau.
        auto delayed = [&](double s, std::vector<double>& out) -> double {
            const double sd = s - tau;
            if (m == 0) {
                for (std::size_t k = 0; k < a; ++k)
                    out[k] = eval_history(hist, sd, static_cast<int>(k));
                return eval_history(hist, sd, static_cast<int>(a));
            }
            const double rel = (sd - t0_prev) / h;
            const auto seg = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor(rel)), 0, N - 1);
            const double th = rel - static_cast<double>(seg);
            const auto& yl = prev_ys[static_cast<std::size_t>(seg)];
            const auto& yr = prev_ys[static_cast<std::size_t>(seg) + 1];
            const auto& dl = prev_ds[static_cast<std::size_t>(seg)];
            const auto& dr = prev_ds[static_cast<std::size_t>(seg) + 1];
            const double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
            const double h10 = th * (1.0 - th) * (1.0 - th);
            const double h01 = th * th * (3.0 - 2.0 * th);
            const double h11 = th * th * (th - 1.0);
            for (std::size_t k = 0; k < a; ++k)
                out[k] = h00 * yl[k] + h * h10 * dl[k] + h01 * yr[k] + h * h11 * dr[k];
            const double g00 = 6.0 * th * (th - 1.0) / h;
            const double g10 = (3.0 * th - 1.0) * (th - 1.0);
            const double g01 = -g00;
            const double g11 = th * (3.0 * th - 2.0);
            const std::size_t last = a - 1;
            return g00 * yl[last] + g10 * dl[last] + g01 * yr[last] + g11 * dr[last];
        };

        if (m == 0) {
            for (std::size_t k = 0; k < a; ++k)
                ys[0][k] = eval_history(hist, 0.0, static_cast<int>(k));
        } else {
            ys[0] = prev_ys[static_cast<std::size_t>(N)];
        }
        // Right-limit derivative at the interval start uses this interval's
        // delayed data, not the previous interval's left limit.
        double dt_last = delayed(t0, ytau);
        rhs(ys[0], ytau, dt_last, ds[0]);
        if (m == 0) alive = record(t0, ys[0]);

        for (std::int64_t i = 0; i < N && alive; ++i) {
            const double s = t0 + static_cast<double>(i) * h;
            const auto& yc = ys[static_cast<std::size_t>(i)];
            dt_last = delayed(s, ytau);
            rhs(yc, ytau, dt_last, k1);
            dt_last = delayed(s + 0.5 * h, ytau);
            for (std::size_t k = 0; k < a; ++k) st[k] = yc[k] + 0.5 * h * k1[k];
            rhs(st, ytau, dt_last, k2);
            for (std::size_t k = 0; k < a; ++k) st[k] = yc[k] + 0.5 * h * k2[k];
            rhs(st, ytau, dt_last, k3);
            dt_last = delayed(s + h, ytau);
            for (std::size_t k = 0; k < a; ++k) st[k] = yc[k] + h * k3[k];
            rhs(st, ytau, dt_last, k4);

            auto& yn = ys[static_cast<std::size_t>(i) + 1];
            for (std::size_t k = 0; k < a; ++k)
                yn[k] = yc[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            dt_last = delayed(s + h, ytau);
            rhs(yn, ytau, dt_last, ds[static_cast<std::size_t>(i) + 1]);

            const double tn = t0 + static_cast<double>(i + 1) * h;
            if (tn <= horizon + 0.5 * h) alive = record(tn, yn);
        }
        prev_ys.swap(ys);
        prev_ds.swap(ds);
    }
    if (!alive) {
        traj.meta.overflow = true;
        traj.meta.divergence = true;
    }
    return traj;
}

// ============================================================================
// Backward-difference marching for the advanced form
// ============================================================================

inline Trajectory simulate_advanced(const ClosedLoopForm& form, const HistorySpec& hist,
                                    double horizon, double step) {
    if (form.kind != ClosedLoopForm::Kind::Advanced)
        fail(Errc::NotAdvanced, "integrator requires an advanced closed loop");
    const double tau = form.tau;
    if (std::abs(hist.tau - tau) > 1e-9 * tau)
        fail(Errc::InvalidArgument, "history window does not match the loop delay");
    const std::int64_t N = detail::delay_steps(tau, step);
    const double h = tau / static_cast<double>(N);
    const std::int64_t M = detail::horizon_steps(horizon, h);

    const std::size_t a = form.order;
    const auto& bar = form.bar_alpha;
    const auto& al = form.alpha;

    // Backward-difference stencils on the delayed channel reach a-1 nodes
    // below -tau; the history signal must extend there in closed form.
    const std::int64_t off = N + static_cast<std::int64_t>(a) - 1;
    std::vector<double> yg(static_cast<std::size_t>(off + M) + 1, 0.0);
    for (std::int64_t idx = -off; idx <= 0; ++idx)
        yg[static_cast<std::size_t>(idx + off)] =
            eval_signal(hist.output, static_cast<double>(idx) * h, 0);

    std::vector<std::vector<double>> binom(a + 1);
    for (std::size_t j = 0; j <= a; ++j) {
        binom[j].assign(j + 1, 1.0);
        for (std::size_t l = 1; l < j; ++l) binom[j][l] = binom[j - 1][l - 1] + binom[j - 1][l];
    }
    std::vector<double> hpow(a + 1, 1.0);
    for (std::size_t j = 1; j <= a; ++j) hpow[j] = hpow[j - 1] / h;

    auto bd = [&](std::size_t j, std::int64_t idx) -> double {
        double acc = 0.0;
        double sign = 1.0;
        for (std::size_t l = 0; l <= j; ++l, sign = -sign)
            acc += sign * binom[j][l] * yg[static_cast<std::size_t>(idx - static_cast<std::int64_t>(l) + off)];
        return acc * hpow[j];
    };

    // Coefficient of the newest sample in the left-hand stencil sum.
    double coef = 0.0, coef_mag = 0.0;
    for (std::size_t i = 2; i <= a + 1; ++i) {
        coef += bar[i - 1] * hpow[a + 1 - i];
        coef_mag += std::abs(bar[i - 1]) * hpow[a + 1 - i];
    }
    if (std::abs(coef) <= 1e-12 * coef_mag)
        fail(Errc::SingularUpdate, "update coefficient vanishes at this step size");

    Trajectory traj;
    traj.meta.integrator = "advanced";
    traj.meta.step = h;
    traj.y_derivs.assign(a, {});

    auto record = [&](std::int64_t nidx) -> bool {
        const double yv = yg[static_cast<std::size_t>(nidx + off)];
        if (!std::isfinite(yv)) return false;
        traj.t.push_back(static_cast<double>(nidx) * h);
        traj.y_derivs[0].push_back(yv);
        for (std::size_t m = 1; m < a; ++m) traj.y_derivs[m].push_back(bd(m, nidx));
        traj.u.push_back(detail::quiet_nan());
        traj.f_true.push_back(detail::quiet_nan());
        traj.f_hat.push_back(detail::quiet_nan());
        return std::abs(yv) <= detail::overflow_limit;
    };

    bool alive = record(0);
    for (std::int64_t n1 = 1; n1 <= M && alive; ++n1) {
        double rest = 0.0;
        for (std::size_t i = 2; i <= a + 1; ++i) {
            const std::size_t j = a + 1 - i;
            double acc = 0.0;
            double sign = -1.0;
            for (std::size_t l = 1; l <= j; ++l, sign = -sign)
                acc += sign * binom[j][l] *
                       yg[static_cast<std::size_t>(n1 - static_cast<std::int64_t>(l) + off)];
            rest += bar[i - 1] * hpow[j] * acc;
        }
        double rhs = 0.0;
        for (std::size_t i = 1; i <= a + 1; ++i) rhs += al[i - 1] * bd(a + 1 - i, n1 - N);
        yg[static_cast<std::size_t>(n1 + off)] = (rhs - rest) / coef;
        alive = record(n1);
    }
    if (!alive) {
        traj.meta.overflow = true;
        traj.meta.divergence = true;
    }
    return traj;
}

// ============================================================================
// Sampled controller with zero-order hold between measurements
// ============================================================================

inline Trajectory simulate_sampled(const LinearSystem& sys, const IpController& ctrl,
                                   const Signal& reference, double horizon,
                                   double step = 0.0) {
    const auto cf = detail::companion_form(sys);
    const std::size_t a = cf.a;
    const double tau = ctrl.tau;
    if (!(horizon >= tau))
        fail(Errc::InvalidArgument, "horizon must cover at least one sampling period");
    std::int64_t substeps = 20;
    if (step > 0.0) substeps = std::max<std::int64_t>(20, std::llround(tau / step));
    const double h = tau / static_cast<double>(substeps);
    const auto periods = static_cast<std::int64_t>(std::ceil(horizon / tau - 1e-9));

    Trajectory traj;
    traj.meta.integrator = "sampled";
    traj.meta.step = h;
    traj.y_derivs.assign(a, {});

    std::vector<double> x(a, 0.0), out_der(a, 0.0);
    std::vector<double> u_der(std::max<std::size_t>(cf.b, 1), 0.0);
    std::vector<double> k1(a), k2(a), k3(a), k4(a), xs(a);
    double u_hold = 0.0, u_prev = 0.0, y_prev = 0.0;

    auto record = [&](double tn, double ref_held, double u_delayed) -> bool {
        if (!std::isfinite(x[0])) return false;
        u_der[0] = u_hold;
        detail::output_cascade(cf, x, u_der, out_der);
        const double dy = (a >= 2 ? out_der[1] : -cf.d[0] * x[0] + cf.n[0] * u_hold);
        traj.t.push_back(tn);
        traj.y_derivs[0].push_back(x[0] - ref_held);
        for (std::size_t m = 1; m < a; ++m) traj.y_derivs[m].push_back(out_der[m]);
        traj.u.push_back(u_hold);
        traj.f_true.push_back(dy - ctrl.alpha_gain * u_hold);
        traj.f_hat.push_back(dy - ctrl.alpha_gain * u_delayed);
        return std::abs(x[0] - ref_held) <= detail::overflow_limit;
    };

    bool alive = true;
    double ref_held = 0.0;
    for (std::int64_t k = 0; k < periods && alive; ++k) {
        const double tk = static_cast<double>(k) * tau;
        ref_held = eval_signal(reference, tk, 0);
        const double yk = x[0] - ref_held;
        const double uk =
            u_prev + (1.0 / (ctrl.alpha_gain * tau)) * (-(ctrl.k_gain * tau + 1.0) * yk + y_prev);
        const double u_delayed = u_prev;
        u_hold = uk;
        alive = record(tk, ref_held, u_delayed);

        for (std::int64_t i = 0; i < substeps && alive; ++i) {
            detail::companion_deriv(cf, x, u_hold, k1);
            for (std::size_t q = 0; q < a; ++q) xs[q] = x[q] + 0.5 * h * k1[q];
            detail::companion_deriv(cf, xs, u_hold, k2);
            for (std::size_t q = 0; q < a; ++q) xs[q] = x[q] + 0.5 * h * k2[q];
            detail::companion_deriv(cf, xs, u_hold, k3);
            for (std::size_t q = 0; q < a; ++q) xs[q] = x[q] + h * k3[q];
            detail::companion_deriv(cf, xs, u_hold, k4);
            for (std::size_t q = 0; q < a; ++q)
                x[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            const double tn = tk + static_cast<double>(i + 1) * h;
            if (i + 1 < substeps || k + 1 == periods) alive = record(tn, ref_held, u_delayed);
        }
        u_prev = uk;
        y_prev = yk;
    }
    if (!alive) {
        traj.meta.overflow = true;
        traj.meta.divergence = true;
    }
    return traj;
}

// ============================================================================
// Decay-envelope fitting
// ============================================================================

enum class Decay { Decaying, Bounded, Diverging };

inline const char* decay_name(Decay d) {
    switch (d) {
        case Decay::Decaying: return "Decaying";
        case Decay::Bounded: return "Bounded";
        case Decay::Diverging: return "Diverging";
    }
    return "?";
}

struct DecayFit {
    double kappa = 0.0;
    double sigma = 0.0;
    double quality = 0.0;
    Decay classification = Decay::Bounded;
};

// Least-squares line on the log of the |y| peak envelope. sup_history, when
// positive, normalizes kappa the way the stability bound is stated.
inline DecayFit fit_decay(const Trajectory& traj, double skip, double sup_history = 0.0) {
    if (!(skip >= 0.0 && skip < 1.0))
        fail(Errc::InvalidArgument, "skip fraction must lie in [0, 1)");
    const auto& t = traj.t;
    const auto& y = traj.y_derivs.at(0);
    const std::size_t n = t.size();
    if (n < 2) fail(Errc::TooShort, "trajectory has too few samples");
    const double cut = t.front() + skip * (t.back() - t.front());
    std::size_t lo = 0;
    while (lo < n && t[lo] < cut) ++lo;
    if (n - lo < 50) fail(Errc::TooShort, "fewer than 50 samples after skip");

    std::vector<std::size_t> peaks;
    for (std::size_t i = std::max<std::size_t>(lo, 1); i + 1 < n; ++i) {
        const double c = std::abs(y[i]);
        if (c > 0.0 && c >= std::abs(y[i - 1]) && c >= std::abs(y[i + 1])) peaks.push_back(i);
    }
    if (peaks.size() < 5) {
        // Too few oscillation peaks: take per-bucket maxima instead.
        peaks.clear();
        const double range = t[n - 1] - t[lo];
        constexpr int buckets = 10;
        for (int bkt = 0; bkt < buckets; ++bkt) {
            std::size_t best = n;
            double best_val = 0.0;
            for (std::size_t i = lo; i < n; ++i) {
                const int bi = std::min(
                    buckets - 1,
                    static_cast<int>(std::floor((t[i] - t[lo]) / range * buckets)));
                if (bi != bkt) continue;
                if (std::abs(y[i]) > best_val) {
                    best_val = std::abs(y[i]);
                    best = i;
                }
            }
            if (best < n && best_val > 0.0) peaks.push_back(best);
        }
    }

    std::vector<double> ts, ls;
    for (std::size_t i : peaks) {
        const double ay = std::abs(y[i]);
        if (ay < 1e-280 || !std::isfinite(ay)) continue;
        ts.push_back(t[i]);
        ls.push_back(std::log(ay));
    }

    DecayFit fit;
    if (ts.size() < 2) {
        fit.classification = traj.meta.overflow ? Decay::Diverging : Decay::Bounded;
        return fit;
    }

    const auto m = static_cast<double>(ts.size());
    double mt = 0.0, ml = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        ml += ls[i];
    }
    mt /= m;
    ml /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxx += (ts[i] - mt) * (ts[i] - mt);
        sxy += (ts[i] - mt) * (ls[i] - ml);
    }
    const double slope = (sxx > 0.0 ? sxy / sxx : 0.0);
    const double intercept = ml - slope * mt;
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double p = intercept + slope * ts[i];
        ss_tot += (ls[i] - ml) * (ls[i] - ml);
        ss_res += (ls[i] - p) * (ls[i] - p);
    }

    fit.sigma = -slope;
    fit.kappa = std::exp(intercept) / (sup_history > 0.0 ? sup_history : 1.0);
    fit.quality = (ss_tot < 1e-20 ? 0.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0));
    if (traj.meta.overflow)
        fit.classification = Decay::Diverging;
    else if (fit.sigma > 0.0 && fit.quality >= 0.9)
        fit.classification = Decay::Decaying;
    else if (fit.sigma < 0.0 && fit.quality >= 0.9)
        fit.classification = Decay::Diverging;
    else
        fit.classification = Decay::Bounded;
    return fit;
}

} // namespace ipstab
