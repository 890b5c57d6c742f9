#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ipstab/spectral.hpp"

namespace ipstab {

// ============================================================================
// Requests and results
// ============================================================================

enum class TuneObjective {
    MaxSigmaProxy, // pick the feasible point with the most negative damping bound
    FirstFeasible, // pick the first feasible point in grid order
};

inline const char* objective_name(TuneObjective o) {
    switch (o) {
    case TuneObjective::MaxSigmaProxy: return "max-sigma-proxy";
    case TuneObjective::FirstFeasible: return "first-feasible";
    }
    return "?";
}

/// Grid search request. The controller gain is derived from each grid theta
/// as alpha = theta * sign(beta_1); K is taken from the grid directly.
struct TuneRequest {
    LinearSystem sys;
    double tau = 0.0;
    std::vector<double> theta_grid; // all strictly positive
    std::vector<double> k_grid;
    TuneObjective objective = TuneObjective::MaxSigmaProxy;
};

/// One evaluated grid point. The verdict carries the full certificate; for
/// infeasible points certificate.failed_conditions says which inequality broke.
struct TunePoint {
    double theta = 0.0;
    double alpha_gain = 0.0;
    double k_gain = 0.0;
    StabilityVerdict verdict;

    [[nodiscard]] bool feasible() const {
        return verdict.status == Status::ExponentiallyStable;
    }
};

/// Exhaustive evaluation of the grid, theta-major. An empty feasible set is a
/// valid outcome (best is then unset), not an error.
struct TuneResult {
    std::vector<TunePoint> points;
    std::vector<std::size_t> feasible; // indices into points, grid order
    std::optional<std::size_t> best;   // index into points
};

// ============================================================================
// Grid search
// ============================================================================

/// Evaluates the stability verdict at every (theta, K) grid point and ranks
/// the certified ones. Requires a = b+1: for any larger order gap no gain
/// choice achieves exponential stability, so tuning is refused up front.
[[nodiscard]] inline TuneResult tune(const TuneRequest& req) {
    const int a = req.sys.order();
    const int b = req.sys.input_order();
    if (a > b + 1)
        throw Error(Errc::OrderGap,
                    "tune: plant order exceeds the input order by more than one; "
                    "exponential stability is unattainable for any gains");
    if (req.theta_grid.empty() || req.k_grid.empty())
        throw Error(Errc::InvalidArgument, "tune: empty parameter grid");
    for (double theta : req.theta_grid)
        if (!(theta > 0.0))
            throw Error(Errc::InvalidArgument, "tune: theta grid must be positive");

    const double sign_b1 = req.sys.beta[0] > 0.0 ? 1.0 : -1.0;

    TuneResult result;
    result.points.reserve(req.theta_grid.size() * req.k_grid.size());
    for (double theta : req.theta_grid) {
        for (double k : req.k_grid) {
            TunePoint pt;
            pt.theta = theta;
            pt.alpha_gain = theta * sign_b1;
            pt.k_gain = k;
            pt.verdict = verdict(req.sys, new_controller(pt.alpha_gain, k, req.tau));
            if (pt.feasible()) result.feasible.push_back(result.points.size());
            result.points.push_back(std::move(pt));
        }
    }

    if (!result.feasible.empty()) {
        if (req.objective == TuneObjective::FirstFeasible) {
            result.best = result.feasible.front();
        } else {
            // Heuristic ranking only: a smaller condition-(4) left side means a
            // larger certified contraction margin, not a proven decay rate.
            std::size_t arg = result.feasible.front();
            for (std::size_t idx : result.feasible) {
                if (result.points[idx].verdict.certificate.cond4_lhs <
                    result.points[arg].verdict.certificate.cond4_lhs)
                    arg = idx;
            }
            result.best = arg;
        }
    }
    return result;
}

} // namespace ipstab
