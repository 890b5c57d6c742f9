#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipstab/model.hpp"
#include "ipstab/spectral.hpp"
#include "ipstab/tuner.hpp"

namespace ipstab {

// ============================================================================
// Run configuration
// ============================================================================

struct SimulationOptions {
    double horizon = 0.0; // defaults to 10 tau when absent
    double step = 0.0;    // defaults to tau / 64 when absent
    std::string integrator = "auto"; // auto | loop | neutral | advanced | sampled
    Signal reference = constant_signal(0.0); // sampled integrator only
    double skip = 0.2;                       // initial fraction ignored by the decay fit
};

struct AnalysisOptions {
    int k_min = -10;
    int k_max = 10;
    std::optional<Rect> rect; // root-count window; counting skipped when absent
    int min_samples = 0;      // boundary sampling floor for the count
};

struct TuneOptions {
    std::vector<double> theta_grid;
    std::vector<double> k_grid;
    TuneObjective objective = TuneObjective::MaxSigmaProxy;
};

/// Fully validated run description. Every numeric field has passed the model
/// constructors, so downstream code never re-checks basic invariants.
struct RunConfig {
    LinearSystem sys;
    IpController ctrl;
    HistorySpec history;
    SimulationOptions simulation;
    AnalysisOptions analysis;
    std::optional<TuneOptions> tuning; // required by the tune command only
    std::string out_dir;               // empty: current directory
};

// ============================================================================
// JSON parsing (fail closed)
// ============================================================================

namespace detail {

using nlohmann::json;

[[noreturn]] inline void bad_config(const std::string& what) {
    fail(Errc::InvalidArgument, "config: " + what);
}

inline void reject_unknown_keys(const json& j, const char* where,
                                std::initializer_list<const char*> known) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) bad_config(std::string(where) + ": unknown key \"" + key + "\"");
    }
}

inline const json& require_object(const json& j, const char* key) {
    if (!j.contains(key)) bad_config(std::string("missing section \"") + key + "\"");
    if (!j.at(key).is_object()) bad_config(std::string("\"") + key + "\" must be an object");
    return j.at(key);
}

inline double require_number(const json& j, const char* where, const char* key) {
    if (!j.contains(key)) bad_config(std::string(where) + ": missing \"" + key + "\"");
    if (!j.at(key).is_number()) bad_config(std::string(where) + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline double number_or(const json& j, const char* where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) bad_config(std::string(where) + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline int int_or(const json& j, const char* where, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        bad_config(std::string(where) + ": \"" + key + "\" must be an integer");
    return j.at(key).get<int>();
}

inline std::vector<double> require_number_list(const json& j, const char* where, const char* key) {
    if (!j.contains(key)) bad_config(std::string(where) + ": missing \"" + key + "\"");
    const json& arr = j.at(key);
    if (!arr.is_array() || arr.empty())
        bad_config(std::string(where) + ": \"" + key + "\" must be a nonempty array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) bad_config(std::string(where) + ": \"" + key + "\" must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline Signal parse_signal(const json& j, const char* where) {
    if (!j.is_object()) bad_config(std::string(where) + " must be an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        bad_config(std::string(where) + ": missing \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        reject_unknown_keys(j, where, {"kind", "value"});
        return constant_signal(number_or(j, where, "value", 0.0));
    }
    if (kind == "exponential") {
        reject_unknown_keys(j, where, {"kind", "rate", "scale"});
        return exponential_signal(require_number(j, where, "rate"),
                                  number_or(j, where, "scale", 1.0));
    }
    if (kind == "polynomial") {
        reject_unknown_keys(j, where, {"kind", "coeffs"});
        return polynomial_signal(require_number_list(j, where, "coeffs"));
    }
    if (kind == "sampled") {
        reject_unknown_keys(j, where, {"kind", "times", "values"});
        return sampled_signal(require_number_list(j, where, "times"),
                              require_number_list(j, where, "values"));
    }
    bad_config(std::string(where) + ": unknown signal kind \"" + kind + "\"");
}

} // namespace detail

/// Parses and validates a configuration document. Unknown keys, inconsistent
/// redundant fields, and model-level violations all raise InvalidArgument;
/// nothing is silently defaulted except documented optional sections.
inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::bad_config;
    using detail::json;

    if (!j.is_object()) bad_config("top level must be an object");
    detail::reject_unknown_keys(
        j, "top level",
        {"plant", "controller", "history", "simulation", "analysis", "tune", "output"});

    // --- plant ---
    const json& plant = detail::require_object(j, "plant");
    detail::reject_unknown_keys(plant, "plant", {"alpha", "beta", "order"});
    auto alpha = detail::require_number_list(plant, "plant", "alpha");
    auto beta = detail::require_number_list(plant, "plant", "beta");
    if (plant.contains("order")) {
        if (!plant.at("order").is_number_integer()) bad_config("plant: \"order\" must be an integer");
        const auto declared = plant.at("order").get<long long>();
        if (declared != static_cast<long long>(alpha.size()) - 1)
            bad_config("plant: declared order " + std::to_string(declared) +
                       " contradicts " + std::to_string(alpha.size()) + " alpha coefficients");
    }
    LinearSystem sys = new_system(std::move(alpha), std::move(beta));

    // --- controller ---
    const json& ctrl_j = detail::require_object(j, "controller");
    detail::reject_unknown_keys(ctrl_j, "controller", {"alpha", "k", "tau"});
    IpController ctrl = new_controller(detail::require_number(ctrl_j, "controller", "alpha"),
                                       detail::require_number(ctrl_j, "controller", "k"),
                                       detail::require_number(ctrl_j, "controller", "tau"));

    // --- history (optional; defaults to y = e^t, u = 0) ---
    HistorySpec history = default_history(ctrl.tau);
    if (j.contains("history")) {
        const json& h = j.at("history");
        if (!h.is_object()) bad_config("\"history\" must be an object");
        detail::reject_unknown_keys(h, "history", {"output", "control"});
        Signal out = h.contains("output") ? detail::parse_signal(h.at("output"), "history.output")
                                          : exponential_signal(1.0);
        Signal in = h.contains("control") ? detail::parse_signal(h.at("control"), "history.control")
                                          : constant_signal(0.0);
        history = make_history(std::move(out), std::move(in), ctrl.tau);
    }

    // --- simulation (optional) ---
    SimulationOptions sim;
    sim.horizon = 10.0 * ctrl.tau;
    sim.step = ctrl.tau / 64.0;
    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        if (!s.is_object()) bad_config("\"simulation\" must be an object");
        detail::reject_unknown_keys(s, "simulation",
                                    {"horizon", "step", "integrator", "reference", "skip"});
        sim.horizon = detail::number_or(s, "simulation", "horizon", sim.horizon);
        sim.step = detail::number_or(s, "simulation", "step", sim.step);
        if (s.contains("integrator")) {
            if (!s.at("integrator").is_string()) bad_config("simulation: \"integrator\" must be a string");
            sim.integrator = s.at("integrator").get<std::string>();
            if (sim.integrator != "auto" && sim.integrator != "loop" &&
                sim.integrator != "neutral" && sim.integrator != "advanced" &&
                sim.integrator != "sampled")
                bad_config("simulation: unknown integrator \"" + sim.integrator + "\"");
        }
        if (s.contains("reference")) sim.reference = detail::parse_signal(s.at("reference"), "simulation.reference");
        sim.skip = detail::number_or(s, "simulation", "skip", sim.skip);
        if (!(sim.skip >= 0.0 && sim.skip < 1.0)) bad_config("simulation: \"skip\" must lie in [0, 1)");
    }
    if (!(sim.horizon > 0.0)) bad_config("simulation: \"horizon\" must be positive");
    if (!(sim.step > 0.0)) bad_config("simulation: \"step\" must be positive");

    // --- analysis (optional) ---
    AnalysisOptions an;
    if (j.contains("analysis")) {
        const json& a = j.at("analysis");
        if (!a.is_object()) bad_config("\"analysis\" must be an object");
        detail::reject_unknown_keys(a, "analysis", {"k_min", "k_max", "rect", "min_samples"});
        an.k_min = detail::int_or(a, "analysis", "k_min", an.k_min);
        an.k_max = detail::int_or(a, "analysis", "k_max", an.k_max);
        an.min_samples = detail::int_or(a, "analysis", "min_samples", an.min_samples);
        if (a.contains("rect")) {
            const json& r = a.at("rect");
            if (!r.is_object()) bad_config("analysis: \"rect\" must be an object");
            detail::reject_unknown_keys(r, "analysis.rect", {"re_min", "re_max", "im_min", "im_max"});
            Rect rect;
            rect.re_min = detail::require_number(r, "analysis.rect", "re_min");
            rect.re_max = detail::require_number(r, "analysis.rect", "re_max");
            rect.im_min = detail::require_number(r, "analysis.rect", "im_min");
            rect.im_max = detail::require_number(r, "analysis.rect", "im_max");
            if (!(rect.re_min < rect.re_max) || !(rect.im_min < rect.im_max))
                bad_config("analysis: \"rect\" must have positive extent");
            an.rect = rect;
        }
    }

    // --- tune (optional section; needed by the tune command) ---
    std::optional<TuneOptions> tuning;
    if (j.contains("tune")) {
        const json& t = j.at("tune");
        if (!t.is_object()) bad_config("\"tune\" must be an object");
        detail::reject_unknown_keys(t, "tune", {"theta_grid", "k_grid", "objective"});
        TuneOptions opt;
        opt.theta_grid = detail::require_number_list(t, "tune", "theta_grid");
        opt.k_grid = detail::require_number_list(t, "tune", "k_grid");
        if (t.contains("objective")) {
            if (!t.at("objective").is_string()) bad_config("tune: \"objective\" must be a string");
            const std::string name = t.at("objective").get<std::string>();
            if (name == "max-sigma-proxy")
                opt.objective = TuneObjective::MaxSigmaProxy;
            else if (name == "first-feasible")
                opt.objective = TuneObjective::FirstFeasible;
            else
                bad_config("tune: unknown objective \"" + name + "\"");
        }
        for (double th : opt.theta_grid)
            if (!(th > 0.0)) bad_config("tune: \"theta_grid\" entries must be positive");
        tuning = std::move(opt);
    }

    // --- output (optional) ---
    std::string out_dir;
    if (j.contains("output")) {
        const json& o = j.at("output");
        if (!o.is_object()) bad_config("\"output\" must be an object");
        detail::reject_unknown_keys(o, "output", {"dir"});
        if (o.contains("dir")) {
            if (!o.at("dir").is_string()) bad_config("output: \"dir\" must be a string");
            out_dir = o.at("dir").get<std::string>();
        }
    }

    return RunConfig{std::move(sys),    std::move(ctrl), std::move(history), std::move(sim),
                     std::move(an),     std::move(tuning), std::move(out_dir)};
}

/// Loads a configuration file. I/O problems and JSON syntax errors surface as
/// InvalidArgument so the caller maps every config failure to one exit path.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::bad_config("cannot open \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        detail::bad_config("JSON parse failure in \"" + path + "\": " + e.what());
    }
    return parse_config(j);
}

} // namespace ipstab
