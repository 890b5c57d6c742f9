#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipstab/config.hpp"
#include "ipstab/simulate.hpp"

namespace ipstab {

using ojson = nlohmann::ordered_json; // insertion-ordered keys, deterministic dumps

namespace detail {

// Identifies the producing tool. Static on purpose: reports must be
// byte-identical across runs, so no timestamps or host data belong here.
inline ojson report_meta() { return ojson{{"tool", "ipstab"}, {"version", "0.1.0"}}; }

inline void put_finite(ojson& j, const char* key, double v) {
    if (std::isfinite(v)) j[key] = v;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

// ============================================================================
// Analysis report
// ============================================================================

inline ojson report_analyze(const RunConfig& cfg) {
    const StabilityVerdict v = verdict(cfg.sys, cfg.ctrl);
    const ClosedLoopForm form = closed_loop(cfg.sys, cfg.ctrl);

    ojson cert = ojson::object();
    detail::put_finite(cert, "r", v.certificate.r);
    detail::put_finite(cert, "s_hat", v.certificate.s_hat);
    detail::put_finite(cert, "mu_hat", v.certificate.mu_hat);
    detail::put_finite(cert, "d_norm", v.certificate.d_norm);
    detail::put_finite(cert, "b_norm", v.certificate.b_norm);
    detail::put_finite(cert, "contraction", v.certificate.contraction);
    detail::put_finite(cert, "cond3_lhs", v.certificate.cond3_lhs);
    detail::put_finite(cert, "cond3_rhs", v.certificate.cond3_rhs);
    detail::put_finite(cert, "cond4_lhs", v.certificate.cond4_lhs);
    if (!v.certificate.failed_conditions.empty())
        cert["failed_conditions"] = v.certificate.failed_conditions;
    if (!v.certificate.plant_eigenvalues.empty()) {
        ojson eigs = ojson::array();
        for (const cdouble& z : v.certificate.plant_eigenvalues)
            eigs.push_back(ojson{{"re", z.real()}, {"im", z.imag()}});
        cert["plant_eigenvalues"] = std::move(eigs);
    }

    ojson doc;
    doc["meta"] = detail::report_meta();
    doc["status"] = status_name(v.status);
    doc["reason"] = reason_name(v.reason);
    doc["certificate"] = std::move(cert);
    doc["closed_loop"] = ojson{{"kind", kind_name(form.kind)},
                               {"bar_alpha", form.bar_alpha},
                               {"alpha", form.alpha},
                               {"tau", form.tau}};
    if (form.kind == ClosedLoopForm::Kind::Neutral) {
        const auto est = chain_estimates(quasi_polynomial(form), 0, 0, false);
        doc["chain"] = ojson{{"ratio", est[0].ratio_mag}, {"real_limit", est[0].z_k.real()}};
    }
    return doc;
}

// ============================================================================
// Simulation dispatch and report
// ============================================================================

/// Runs the integrator selected in the config; "auto" picks by closed-loop
/// classification (the delay-free degenerate form fails inside the loop
/// integrator with AlgebraicLoopSingular, which is the honest answer).
inline Trajectory run_simulation(const RunConfig& cfg) {
    const SimulationOptions& sim = cfg.simulation;
    if (sim.integrator == "sampled")
        return simulate_sampled(cfg.sys, cfg.ctrl, sim.reference, sim.horizon, sim.step);

    const ClosedLoopForm form = closed_loop(cfg.sys, cfg.ctrl);
    if (sim.integrator == "neutral")
        return simulate_neutral(form, cfg.history, sim.horizon, sim.step);
    if (sim.integrator == "advanced")
        return simulate_advanced(form, cfg.history, sim.horizon, sim.step);
    if (sim.integrator == "loop")
        return simulate_loop(cfg.sys, cfg.ctrl, cfg.history, sim.horizon, sim.step);

    if (form.kind == ClosedLoopForm::Kind::Advanced)
        return simulate_advanced(form, cfg.history, sim.horizon, sim.step);
    return simulate_loop(cfg.sys, cfg.ctrl, cfg.history, sim.horizon, sim.step);
}

inline ojson report_simulate(const RunConfig& cfg, const Trajectory& traj) {
    const DecayFit fit = fit_decay(traj, cfg.simulation.skip);
    ojson doc;
    doc["meta"] = detail::report_meta();
    doc["integrator"] = traj.meta.integrator;
    doc["step"] = traj.meta.step;
    doc["horizon"] = cfg.simulation.horizon;
    doc["samples"] = traj.t.size();
    doc["overflow"] = traj.meta.overflow;
    doc["divergence"] = traj.meta.divergence;
    doc["fit"] = ojson{{"kappa", fit.kappa},
                       {"sigma", fit.sigma},
                       {"quality", fit.quality},
                       {"classification", decay_name(fit.classification)}};
    return doc;
}

/// Header t,y,dy,...,u,F,Fhat; shortest round-trip number formatting; NaN
/// cells (undefined channels of a given integrator) render as "nan".
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string csv = "t";
    for (std::size_t m = 0; m < traj.y_derivs.size(); ++m) {
        if (m == 0)
            csv += ",y";
        else if (m == 1)
            csv += ",dy";
        else
            csv += ",d" + std::to_string(m) + "y";
    }
    csv += ",u,F,Fhat\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        csv += detail::format_double(traj.t[i]);
        for (const auto& channel : traj.y_derivs) {
            csv += ',';
            csv += detail::format_double(channel[i]);
        }
        csv += ',';
        csv += detail::format_double(traj.u[i]);
        csv += ',';
        csv += detail::format_double(traj.f_true[i]);
        csv += ',';
        csv += detail::format_double(traj.f_hat[i]);
        csv += '\n';
    }
    return csv;
}

// ============================================================================
// Root chain report
// ============================================================================

struct RootsReport {
    ojson doc;
    std::string chains_csv;
};

inline RootsReport report_roots(const RunConfig& cfg) {
    const ClosedLoopForm form = closed_loop(cfg.sys, cfg.ctrl);
    const QuasiPolynomial qp = quasi_polynomial(form);
    const auto chain =
        chain_estimates(qp, cfg.analysis.k_min, cfg.analysis.k_max, /*refine=*/true);

    ojson doc;
    doc["meta"] = detail::report_meta();
    if (!chain.empty()) {
        doc["ratio"] = chain.front().ratio_mag;
        doc["ratio_arg"] = chain.front().ratio_arg;
        doc["real_limit"] = std::log(chain.front().ratio_mag) / form.tau;
    }
    doc["k_range"] = ojson::array({cfg.analysis.k_min, cfg.analysis.k_max});
    doc["rows"] = chain.size();
    if (cfg.analysis.rect) {
        const Rect& rect = *cfg.analysis.rect;
        int inside = 0;
        for (const auto& est : chain) {
            const cdouble z = est.refined.value_or(est.z_k);
            if (z.real() >= rect.re_min && z.real() <= rect.re_max &&
                z.imag() >= rect.im_min && z.imag() <= rect.im_max)
                ++inside;
        }
        doc["count"] = ojson{{"rect", ojson{{"re_min", rect.re_min},
                                            {"re_max", rect.re_max},
                                            {"im_min", rect.im_min},
                                            {"im_max", rect.im_max}}},
                             {"roots", count_roots(qp, rect, cfg.analysis.min_samples)},
                             {"estimates_inside", inside}};
    }

    std::string csv = "k,estimate_re,estimate_im,refined_re,refined_im,residual\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& est : chain) {
        csv += std::to_string(est.k);
        csv += ',';
        csv += detail::format_double(est.z_k.real());
        csv += ',';
        csv += detail::format_double(est.z_k.imag());
        csv += ',';
        csv += detail::format_double(est.refined ? est.refined->real() : nan);
        csv += ',';
        csv += detail::format_double(est.refined ? est.refined->imag() : nan);
        csv += ',';
        csv += detail::format_double(est.residual);
        csv += '\n';
    }
    return RootsReport{std::move(doc), std::move(csv)};
}

// ============================================================================
// Tuning report
// ============================================================================

inline ojson report_tune(const RunConfig& cfg) {
    if (!cfg.tuning)
        fail(Errc::InvalidArgument, "config: the tune command requires a \"tune\" section");
    TuneRequest req{cfg.sys, cfg.ctrl.tau, cfg.tuning->theta_grid, cfg.tuning->k_grid,
                    cfg.tuning->objective};
    const TuneResult result = tune(req);

    ojson pts = ojson::array();
    for (const auto& pt : result.points) {
        ojson p;
        p["theta"] = pt.theta;
        p["alpha"] = pt.alpha_gain;
        p["k"] = pt.k_gain;
        p["status"] = status_name(pt.verdict.status);
        p["reason"] = reason_name(pt.verdict.reason);
        p["feasible"] = pt.feasible();
        if (!pt.verdict.certificate.failed_conditions.empty())
            p["failed_conditions"] = pt.verdict.certificate.failed_conditions;
        ojson cert = ojson::object();
        detail::put_finite(cert, "r", pt.verdict.certificate.r);
        detail::put_finite(cert, "s_hat", pt.verdict.certificate.s_hat);
        detail::put_finite(cert, "mu_hat", pt.verdict.certificate.mu_hat);
        detail::put_finite(cert, "cond3_lhs", pt.verdict.certificate.cond3_lhs);
        detail::put_finite(cert, "cond3_rhs", pt.verdict.certificate.cond3_rhs);
        detail::put_finite(cert, "cond4_lhs", pt.verdict.certificate.cond4_lhs);
        p["certificate"] = std::move(cert);
        pts.push_back(std::move(p));
    }

    ojson doc;
    doc["meta"] = detail::report_meta();
    doc["objective"] = objective_name(cfg.tuning->objective);
    doc["points"] = std::move(pts);
    doc["feasible_count"] = result.feasible.size();
    if (result.best) {
        const auto& bp = result.points[*result.best];
        doc["best"] = ojson{{"index", *result.best},
                            {"theta", bp.theta},
                            {"alpha", bp.alpha_gain},
                            {"k", bp.k_gain}};
    } else {
        doc["best"] = nullptr;
    }
    return doc;
}

// ============================================================================
// Atomic file output
// ============================================================================

/// Writes via a sibling temp file plus rename, so readers never observe a
/// partially written report.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(Errc::InvalidArgument, "cannot write \"" + tmp.string() + "\"");
        out << text;
        out.flush();
        if (!out) fail(Errc::InvalidArgument, "short write to \"" + tmp.string() + "\"");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace ipstab
