#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "driftgof/expression.hpp"
#include "driftgof/quadrature.hpp"
#include "driftgof/simulate.hpp"
#include "driftgof/stationary.hpp"

namespace driftgof {

class StatisticError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Piecewise-constant process x -> value, jumping at the sorted points in
/// `jump_points`; `left_limit` is the value left of the first jump.
struct StepProcess {
    std::vector<double> jump_points;  // strictly increasing
    std::vector<double> values;       // values[k] = process at jump_points[k]
    double left_limit = 0.0;

    double at(double x) const noexcept {
        const auto it = std::upper_bound(jump_points.begin(), jump_points.end(), x);
        if (it == jump_points.begin()) return left_limit;
        return values[static_cast<std::size_t>(it - jump_points.begin()) - 1];
    }

    double sup_abs() const noexcept {
        double best = std::fabs(left_limit);
        for (double v : values) best = std::fmax(best, std::fabs(v));
        return best;
    }

    /// Jump point where |value| attains its maximum (the left limit never
    /// exceeds a jump value for processes built here, where it is 0).
    double arg_sup() const noexcept {
        double best = -1.0;
        double arg = jump_points.empty() ? 0.0 : jump_points.front();
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double a = std::fabs(values[k]);
            if (a > best) { best = a; arg = jump_points[k]; }
        }
        return arg;
    }
};

namespace detail {

/// Shared prefix-sum core: sorts (state, mark) pairs by state, merges exact
/// ties into one jump point, and emits scaled compensated prefix sums.
inline StepProcess marked_prefix_process(std::vector<std::pair<double, double>>&& marked,
                                         double scale) {
    std::sort(marked.begin(), marked.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    StepProcess out;
    out.jump_points.reserve(marked.size());
    out.values.reserve(marked.size());
    KahanSum prefix;
    std::size_t i = 0;
    while (i < marked.size()) {
        const double state = marked[i].first;
        do {
            prefix.add(marked[i].second);
            ++i;
        } while (i < marked.size() && marked[i].first == state);
        out.jump_points.push_back(state);
        out.values.push_back(prefix.value() * scale);
    }
    return out;
}

template <class MarkFn>
StepProcess path_marked_process(const Path& p, double scale, MarkFn&& mark) {
    const std::size_t n = p.n_steps();
    if (n < 1) throw StatisticError("path must have at least two nodes");
    std::vector<std::pair<double, double>> marked;
    marked.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        marked.emplace_back(p.values[i], mark(p.values[i], p.values[i + 1]));
    return marked_prefix_process(std::move(marked), scale);
}

}  // namespace detail

/// Discretized score marked empirical process
///   V_T(x) = T^{-1/2} sum_i 1{X_i <= x} (X_{i+1} - X_i - S0(X_i) dt),
/// computed in O(n log n) by sorting states and prefix-summing the marks.
/// Exactly equal states merge into a single jump carrying the summed mark.
inline StepProcess score_process(const Path& p, const FunctionExpr& null_drift) {
    const double T = p.horizon();
    const double dt = p.dt;
    const double sqrt_T = std::sqrt(T);
    return detail::path_marked_process(p, 1.0 / sqrt_T, [&](double state, double next) {
        const double drift = null_drift(state);
        if (!std::isfinite(drift))
            throw StatisticError("null drift evaluates non-finite at observed state " +
                                 std::to_string(state));
        return next - state - drift * dt;
    });
}

/// sup_x |v(x)|; exact for the step process (the sup sits on a jump point).
inline double sup_statistic(const StepProcess& v) noexcept { return v.sup_abs(); }

/// Drift-gap process A_T(x) = T^{-1} sum_i 1{X_i <= x}(S0(X_i) - S1(X_i)) dt;
/// its a.s. uniform limit separates the hypotheses under the alternative.
inline StepProcess drift_gap_process(const Path& p, const FunctionExpr& null_drift,
                                     const FunctionExpr& alt_drift) {
    const double T = p.horizon();
    const double dt = p.dt;
    return detail::path_marked_process(p, 1.0 / T, [&](double state, double) {
        const double s0 = null_drift(state);
        const double s1 = alt_drift(state);
        if (!std::isfinite(s0) || !std::isfinite(s1))
            throw StatisticError("drift evaluates non-finite at observed state " +
                                 std::to_string(state));
        return (s0 - s1) * dt;
    });
}

/// A(x) = int_{-inf}^{x} (S0(y) - S1(y)) f_{S1}(y) dy, with S1 and f_{S1}
/// taken from `alt_engine`. A nonzero value for some x is the separation
/// property that makes the test consistent against S1.
inline double drift_separation_value(const StationaryEngine& alt_engine,
                                     const FunctionExpr& null_drift, double x) {
    const double lo = -alt_engine.half_width();
    const double hi = std::fmin(x, alt_engine.half_width());
    if (hi <= lo) return 0.0;
    const FunctionExpr& alt_drift = alt_engine.model().drift;
    return integrate(
        [&](double y) {
            return (null_drift(y) - alt_drift(y)) * alt_engine.invariant_density(y);
        },
        lo, hi, alt_engine.options().abs_tol);
}

}  // namespace driftgof
