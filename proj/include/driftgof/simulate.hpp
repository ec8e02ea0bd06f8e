#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftgof/model.hpp"
#include "driftgof/rng.hpp"
#include "driftgof/stationary.hpp"

namespace driftgof {

class SimulationError : public std::runtime_error {
public:
    SimulationError(std::size_t step, double last_value)
        : std::runtime_error("explosion under discretization at step " + std::to_string(step) +
                             " (last finite value " + std::to_string(last_value) + ")"),
          step_(step),
          last_value_(last_value) {}
    std::size_t step() const noexcept { return step_; }
    double last_value() const noexcept { return last_value_; }

private:
    std::size_t step_;
    double last_value_;
};

/// Uniformly discretized trajectory; values[i] is the state at time i*dt.
struct Path {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string model_tag;

    std::size_t n_steps() const noexcept { return values.empty() ? 0 : values.size() - 1; }
    double horizon() const noexcept { return dt * static_cast<double>(n_steps()); }
};

/// Appends n Euler-Maruyama steps to `values` (which must already hold the
/// current state at its back), consuming one normal draw per step from `rng`.
/// Splitting a horizon into consecutive calls with the same generator yields
/// the identical trajectory as a single call.
inline void extend_path(const DiffusionModel& m, std::vector<double>& values, std::size_t n,
                        double dt, SplitMix64& rng) {
    if (values.empty()) throw std::invalid_argument("extend_path: empty state vector");
    const double sqrt_dt = std::sqrt(dt);
    double x = values.back();
    values.reserve(values.size() + n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        x += m.drift(x) * dt + m.diffusion(x) * sqrt_dt * z;
        if (!std::isfinite(x)) throw SimulationError(values.size(), values.back());
        values.push_back(x);
    }
}

/// Simulates dX = S(X) dt + sigma(X) dW on [0,T] from x0 with uniform step dt.
/// The number of steps is round(T/dt); identical (model, T, dt, x0, seed)
/// reproduce the path bit for bit.
inline Path simulate_path(const DiffusionModel& m, double T, double dt, double x0,
                          std::uint64_t seed) {
    if (!(T > 0.0) || !(dt > 0.0) || dt > T)
        throw std::invalid_argument("simulate_path: need 0 < dt <= T");
    const auto n = static_cast<std::size_t>(std::llround(T / dt));
    Path p;
    p.dt = dt;
    p.seed = seed;
    p.model_tag = m.drift.source() + " | " + m.diffusion.source();
    p.values.push_back(x0);
    SplitMix64 rng(seed);
    extend_path(m, p.values, n, dt, rng);
    return p;
}

/// One draw from the invariant density (warm start).
inline double sample_stationary_start(const StationaryEngine& engine, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return engine.sample_stationary(rng);
}

}  // namespace driftgof
