#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "driftgof/rng.hpp"

namespace driftgof {

/// P(sup_{0<=t<=1} |B(t)| <= c) for a standard Brownian motion B, by the
/// alternating theta series
///   (4/pi) sum_{k>=0} (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 c^2)),
/// truncated once a term falls below `tol`. Below c = 0.2 the value is under
/// 1e-16 and the series converges slowly, so 0 is returned directly.
inline double sup_abs_bm_cdf(double c, double tol = 1e-10) {
    if (!(c > 0.2)) return 0.0;
    constexpr double kPi = 3.14159265358979323846;
    const double base = kPi * kPi / (8.0 * c * c);
    double sum = 0.0;
    for (int k = 0; k < 4096; ++k) {
        const double odd = 2.0 * k + 1.0;
        const double term = ((k % 2 == 0) ? 1.0 : -1.0) / odd * std::exp(-odd * odd * base);
        sum += term;
        if (std::fabs(term) < tol) break;
    }
    return std::clamp(4.0 / kPi * sum, 0.0, 1.0);
}

/// Critical value c_eps with P(sup|B| > c_eps) = eps, by bisection; the CDF is
/// continuous and strictly increasing so the root is unique.
inline double sup_abs_bm_critical_value(double eps, double cdf_tol = 1e-10) {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw std::invalid_argument("critical value: eps must lie in (0,1)");
    const double target = 1.0 - eps;
    double lo = 1e-6, hi = 100.0;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (sup_abs_bm_cdf(mid, cdf_tol) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Monte Carlo cross-check: the empirical (1-eps)-quantile of
/// max_i |W_{i/n_steps}| over `n_paths` discretized Brownian paths.
/// Per-path seeds are derived from the master seed by index, so the result
/// is deterministic in (eps, n_paths, n_steps, seed) regardless of workers.
inline double sup_abs_bm_mc_quantile(double eps, int n_paths, int n_steps, std::uint64_t seed,
                                     int workers = 1) {
    if (n_paths < 1 || n_steps < 1)
        throw std::invalid_argument("mc quantile: n_paths and n_steps must be >= 1");
    const auto seeds = derive_seeds(seed, static_cast<std::size_t>(n_paths));
    std::vector<double> maxima(static_cast<std::size_t>(n_paths));
    const double root_dt = std::sqrt(1.0 / n_steps);

    const auto run_block = [&](int begin, int end) {
        for (int j = begin; j < end; ++j) {
            SplitMix64 rng(seeds[static_cast<std::size_t>(j)]);
            double w = 0.0, peak = 0.0;
            for (int i = 0; i < n_steps; ++i) {
                w += root_dt * rng.next_normal();
                peak = std::fmax(peak, std::fabs(w));
            }
            maxima[static_cast<std::size_t>(j)] = peak;
        }
    };

    workers = std::max(1, workers);
    if (workers == 1) {
        run_block(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n_paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n_paths, begin + chunk);
            if (begin < end) pool.emplace_back(run_block, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    std::sort(maxima.begin(), maxima.end());
    // nearest-rank quantile
    const double level = 1.0 - eps;
    auto rank = static_cast<std::size_t>(std::ceil(level * n_paths));
    rank = std::clamp<std::size_t>(rank, 1, static_cast<std::size_t>(n_paths));
    return maxima[rank - 1];
}

}  // namespace driftgof
