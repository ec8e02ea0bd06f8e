#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "driftgof/expression.hpp"

namespace driftgof {

class ModelError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Drift/diffusion pair for dX = S(X) dt + sigma(X) dW, with the numeric
/// bounds recorded by the growth screen. sigma is the diffusion coefficient
/// itself; sigma^2 is what enters the generator.
struct DiffusionModel {
    FunctionExpr drift;      // S
    FunctionExpr diffusion;  // sigma, must be strictly positive
    double sigma_sq_bound = std::numeric_limits<double>::quiet_NaN();
    double growth_constant = std::numeric_limits<double>::quiet_NaN();

    static DiffusionModel from_sources(const std::string& drift_src,
                                       const std::string& sigma_src) {
        return DiffusionModel{FunctionExpr::parse(drift_src), FunctionExpr::parse(sigma_src)};
    }
};

/// Result of the linear-growth screen: a finite-grid check that sigma^2 is
/// positive and bounded and that x*S(x) + sigma(x)^2 <= A (1 + x^2) holds,
/// reporting the smallest such A seen on the grid. The check cannot prove
/// the bound on all of R; `boundary_growth` flags a ratio still increasing
/// at the edge of the grid.
struct GrowthScreenReport {
    bool ok = false;
    double witness_a = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> violation_x;
    bool boundary_growth = false;
    double sigma_sq_sup = std::numeric_limits<double>::quiet_NaN();
    std::string diagnostic;
};

inline GrowthScreenReport check_growth_bound(const DiffusionModel& m,
                                             double grid_half_width = 20.0,
                                             int grid_points = 4001) {
    if (!(grid_half_width > 0.0)) throw ModelError("grid_half_width must be positive");
    if (grid_points < 3) throw ModelError("grid_points must be at least 3");

    GrowthScreenReport report;
    const int mid = (grid_points - 1) / 2;
    const double h = grid_half_width / mid;

    double max_ratio = -std::numeric_limits<double>::infinity();
    double max_sigma_sq = 0.0;
    double ratio_first = 0.0, ratio_second = 0.0;
    double ratio_last = 0.0, ratio_prev = 0.0;

    for (int i = 0; i < grid_points; ++i) {
        const double x = (i - mid) * h;
        const double s = m.drift(x);
        const double sig = m.diffusion(x);
        const double sig_sq = sig * sig;
        if (!std::isfinite(s) || !std::isfinite(sig)) {
            report.violation_x = x;
            report.diagnostic = "non-finite drift or diffusion value";
            return report;
        }
        if (!(sig_sq > 0.0)) {
            report.violation_x = x;
            report.diagnostic = "diffusion coefficient not strictly positive";
            return report;
        }
        const double ratio = (x * s + sig_sq) / (1.0 + x * x);
        max_ratio = std::fmax(max_ratio, ratio);
        max_sigma_sq = std::fmax(max_sigma_sq, sig_sq);
        if (i == 0) ratio_first = ratio;
        if (i == 1) ratio_second = ratio;
        if (i == grid_points - 2) ratio_prev = ratio;
        if (i == grid_points - 1) ratio_last = ratio;
    }

    report.ok = true;
    report.witness_a = std::fmax(0.0, max_ratio);
    report.sigma_sq_sup = max_sigma_sq;
    report.boundary_growth = (ratio_last > ratio_prev) || (ratio_first > ratio_second);
    if (report.boundary_growth)
        report.diagnostic = "growth ratio still increasing at the grid boundary";
    return report;
}

/// Runs the growth screen and stores its bounds on the model. Throws when
/// the screen fails outright.
inline GrowthScreenReport screen_model(DiffusionModel& m, double grid_half_width = 20.0,
                                       int grid_points = 4001) {
    GrowthScreenReport report = check_growth_bound(m, grid_half_width, grid_points);
    if (report.ok) {
        m.sigma_sq_bound = report.sigma_sq_sup;
        m.growth_constant = report.witness_a;
    }
    return report;
}

}  // namespace driftgof
