#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "driftgof/nulldist.hpp"
#include "driftgof/simulate.hpp"
#include "driftgof/stationary.hpp"
#include "driftgof/step_process.hpp"

namespace driftgof {

class GofError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TestResult {
    double statistic = 0.0;   // sup_x |V_T(x)|
    double g_inf = 0.0;       // g_{S0}(inf), from the hypothesized null model
    double normalized = 0.0;  // statistic / g_inf
    double eps = 0.0;
    double critical = 0.0;    // c_eps
    bool reject = false;
    double arg_sup = 0.0;     // state where the sup is attained (diagnostic)
    std::size_t n_steps = 0;
    double T = 0.0;
};

/// Decision function: reject H0: S = S0 when sup|V_T| / g_{S0}(inf) exceeds
/// the exact critical value of sup_{[0,1]}|B|. The normalization comes from
/// the hypothesized null model, never from the observed path.
inline TestResult run_test(const Path& p, const StationaryEngine& null_engine, double eps) {
    if (!(eps > 0.0) || !(eps < 1.0)) throw GofError("eps must lie in (0,1)");
    if (!null_engine.screens_ok()) {
        const std::string why = !null_engine.growth_report().ok
                                    ? null_engine.growth_report().diagnostic
                                    : null_engine.recurrence_report().diagnostic;
        throw GofError("null model not ergodic-screenable: " + why);
    }
    const double g_inf_sq = null_engine.g_inf_sq();
    const double g_inf = std::sqrt(g_inf_sq);
    if (!(g_inf > 1e-12)) throw GofError("degenerate normalization: g(inf) <= 1e-12");

    const StepProcess v = score_process(p, null_engine.model().drift);
    TestResult r;
    r.statistic = sup_statistic(v);
    r.g_inf = g_inf;
    r.normalized = r.statistic / g_inf;
    r.eps = eps;
    r.critical = sup_abs_bm_critical_value(eps);
    r.reject = r.normalized > r.critical;
    r.arg_sup = v.arg_sup();
    r.n_steps = p.n_steps();
    r.T = p.horizon();
    return r;
}

/// Process-wide engine cache keyed by (drift source, sigma source, options).
/// Engines are immutable, so sharing read-only across threads is safe.
inline std::shared_ptr<const StationaryEngine> shared_engine(const FunctionExpr& drift,
                                                             const FunctionExpr& sigma,
                                                             const StationaryOptions& opt = {}) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const StationaryEngine>> cache;

    char params[128];
    std::snprintf(params, sizeof params, "%.17g|%.17g|%d|%.17g|%.17g", opt.trunc_half_width,
                  opt.abs_tol, opt.grid_nodes, opt.boundary_decay, opt.max_half_width);
    const std::string key = drift.source() + '\x1f' + sigma.source() + '\x1f' + params;

    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto engine = std::make_shared<const StationaryEngine>(
        DiffusionModel{drift, sigma}, opt);
    cache.emplace(key, engine);
    return engine;
}

/// Convenience overload building (and caching) the null engine from sources.
inline TestResult run_test(const Path& p, const FunctionExpr& null_drift,
                           const FunctionExpr& sigma, double eps,
                           const StationaryOptions& opt = {}) {
    return run_test(p, *shared_engine(null_drift, sigma, opt), eps);
}

}  // namespace driftgof
