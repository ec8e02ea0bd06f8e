#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftgof/model.hpp"
#include "driftgof/quadrature.hpp"
#include "driftgof/rng.hpp"

namespace driftgof {

class EngineError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StationaryOptions {
    double trunc_half_width = 20.0;  // initial truncation; doubles until tails decay
    double abs_tol = 1e-8;           // adaptive quadrature tolerance
    int grid_nodes = 8001;           // node count at the initial half-width
    double boundary_decay = 1e-12;   // speed density must fall below this at +-L
    double max_half_width = 320.0;
    double exp_clamp = 700.0;        // |exponent| cap before exp()
};

namespace detail {

/// Uniform grid carrying E(y) = 2 int_{y_ref}^{y} S/sigma^2 dv and its exact
/// derivative 2 S/sigma^2 at the nodes; evaluated between nodes by cubic
/// Hermite interpolation (exact node derivatives make the cell error O(h^4)),
/// linear continuation outside.
struct ExponentGrid {
    double y0 = 0.0;
    double h = 0.0;
    std::vector<double> value;  // E at nodes
    std::vector<double> slope;  // E' at nodes

    double y_at(std::size_t i) const { return y0 + static_cast<double>(i) * h; }
    double y_last() const { return y_at(value.size() - 1); }

    double operator()(double y) const {
        const std::size_t n = value.size();
        if (y <= y0) return value.front() + slope.front() * (y - y0);
        const double yl = y_last();
        if (y >= yl) return value.back() + slope.back() * (y - yl);
        std::size_t k = static_cast<std::size_t>((y - y0) / h);
        if (k > n - 2) k = n - 2;
        const double t = (y - y_at(k)) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        const double h10 = t3 - 2.0 * t2 + t;
        const double h01 = -2.0 * t3 + 3.0 * t2;
        const double h11 = t3 - t2;
        return h00 * value[k] + h * (h10 * slope[k] + h11 * slope[k + 1]) + h01 * value[k + 1];
    }
};

}  // namespace detail

struct RecurrenceScreenReport {
    bool ok = false;
    double p_left = std::numeric_limits<double>::quiet_NaN();   // p(-L)
    double p_right = std::numeric_limits<double>::quiet_NaN();  // p(+L)
    double p_left_2x = std::numeric_limits<double>::quiet_NaN();
    double p_right_2x = std::numeric_limits<double>::quiet_NaN();
    double m_total = std::numeric_limits<double>::quiet_NaN();
    bool m_converged = false;
    std::string diagnostic;
};

/// Quadrature engine for the stationary characteristics of a diffusion model:
/// scale density p', scale function p, invariant density f, the variance
/// time-change g^2, and warm-start sampling from f. All quantities derive
/// from the exponent E(y) = 2 int_0^y S/sigma^2, precomputed once on a grid;
/// the object is immutable afterwards and safe to share across threads.
class StationaryEngine {
public:
    explicit StationaryEngine(DiffusionModel model, StationaryOptions opt = {})
        : model_(std::move(model)), opt_(opt) {
        growth_ = screen_model(model_);
        if (!growth_.ok) {
            diagnostic_ = "growth screen failed: " + growth_.diagnostic;
            return;
        }
        build();
        if (grid_ok_) recurrence_ = run_recurrence_screen();
    }

    StationaryEngine(const StationaryEngine&) = delete;
    StationaryEngine& operator=(const StationaryEngine&) = delete;

    // ---- screening ----
    const GrowthScreenReport& growth_report() const noexcept { return growth_; }
    const RecurrenceScreenReport& recurrence_report() const noexcept { return recurrence_; }
    bool screens_ok() const noexcept { return growth_.ok && recurrence_.ok; }
    const std::string& diagnostic() const noexcept { return diagnostic_; }

    // ---- cached totals ----
    double m_total() const { require_usable(); return m_total_; }
    double g_inf_sq() const { require_usable(); return g_inf_sq_; }
    bool tail_converged() const noexcept { return tail_converged_; }
    double half_width() const noexcept { return half_width_; }
    bool clamp_observed() const noexcept { return clamp_hit_.load(std::memory_order_relaxed); }
    const DiffusionModel& model() const noexcept { return model_; }
    const StationaryOptions& options() const noexcept { return opt_; }

    /// p'(x) = exp{-2 int_0^x S/sigma^2}.
    double scale_density(double x) const {
        require_grid();
        return clamped_exp(-grid_(x));
    }

    /// p(x) = int_0^x p'(y) dy; overflow past DBL_MAX comes back as +-inf.
    double scale_function(double x) const {
        require_grid();
        return integrate([this](double y) { return clamped_exp(-grid_(y)); }, 0.0, x,
                         opt_.abs_tol, 1e-10);
    }

    /// Invariant density f(y) = exp{2 int_0^y S/sigma^2} / (m_total sigma(y)^2).
    double invariant_density(double y) const {
        require_usable();
        const double sig = model_.diffusion(y);
        return clamped_exp(grid_(y)) / (m_total_ * sig * sig);
    }

    /// g^2(z) = int_{-inf}^{z} sigma^2 f = (1/m_total) int_{-L}^{z} e^{E}.
    double g_squared(double z) const {
        require_usable();
        if (std::isnan(z)) return z;
        if (z == std::numeric_limits<double>::infinity()) return g_inf_sq_;
        if (z == -std::numeric_limits<double>::infinity()) return 0.0;
        return partial(exp_cum_, z, /*with_sigma=*/false) / m_total_;
    }

    /// Stationary CDF F(y) = m((-inf, y]) / m_total.
    double cdf(double y) const {
        require_usable();
        if (std::isnan(y)) return y;
        if (y == std::numeric_limits<double>::infinity()) return 1.0;
        if (y == -std::numeric_limits<double>::infinity()) return 0.0;
        return std::clamp(partial(speed_cum_, y, /*with_sigma=*/true) / m_total_, 0.0, 1.0);
    }

    /// One draw from f by inverting the cached CDF grid (linear within cells).
    double sample_stationary(SplitMix64& rng) const {
        require_usable();
        const double target = rng.next_double() * m_total_;
        const auto it = std::upper_bound(speed_cum_.begin(), speed_cum_.end(), target);
        if (it == speed_cum_.begin()) return grid_.y0;
        if (it == speed_cum_.end()) return grid_.y_last();
        const std::size_t k = static_cast<std::size_t>(it - speed_cum_.begin()) - 1;
        const double lo = speed_cum_[k], hi = speed_cum_[k + 1];
        const double frac = (hi > lo) ? (target - lo) / (hi - lo) : 0.0;
        return grid_.y_at(k) + frac * grid_.h;
    }

private:
    DiffusionModel model_;
    StationaryOptions opt_;
    GrowthScreenReport growth_;
    RecurrenceScreenReport recurrence_;

    detail::ExponentGrid grid_;
    std::vector<double> speed_cum_;  // int_{-L}^{y_i} e^E / sigma^2
    std::vector<double> exp_cum_;    // int_{-L}^{y_i} e^E
    double m_total_ = std::numeric_limits<double>::quiet_NaN();
    double g_inf_sq_ = std::numeric_limits<double>::quiet_NaN();
    double half_width_ = 0.0;
    bool grid_ok_ = false;
    bool tail_converged_ = false;
    std::string diagnostic_;
    mutable std::atomic<bool> clamp_hit_{false};

    void require_grid() const {
        if (!grid_ok_) throw EngineError("scale integrand diverges: " + diagnostic_);
    }
    void require_usable() const {
        require_grid();
        if (!tail_converged_)
            throw EngineError("speed measure quadrature did not converge: " + diagnostic_);
    }

    double clamped_exp(double e) const {
        if (e > opt_.exp_clamp || e < -opt_.exp_clamp) {
            clamp_hit_.store(true, std::memory_order_relaxed);
            e = std::clamp(e, -opt_.exp_clamp, opt_.exp_clamp);
        }
        return std::exp(e);
    }

    double exponent_slope(double y) const {
        const double sig = model_.diffusion(y);
        return 2.0 * model_.drift(y) / (sig * sig);
    }

    // Marches E across [lo, hi] starting from E(anchor) = anchor_value, where
    // anchor is lo or hi. n_cells uniform cells, gauss5 per cell.
    bool march_exponent(double lo, double hi, std::size_t n_cells, double anchor_value,
                        bool anchor_at_lo, detail::ExponentGrid& out) const {
        out.y0 = lo;
        out.h = (hi - lo) / static_cast<double>(n_cells);
        out.value.assign(n_cells + 1, 0.0);
        out.slope.assign(n_cells + 1, 0.0);
        for (std::size_t i = 0; i <= n_cells; ++i) {
            out.slope[i] = exponent_slope(out.y_at(i));
            if (!std::isfinite(out.slope[i])) return false;
        }
        std::vector<double> cell(n_cells);
        for (std::size_t i = 0; i < n_cells; ++i) {
            cell[i] = gauss5([this](double v) { return exponent_slope(v); }, out.y_at(i),
                             out.y_at(i + 1));
            if (!std::isfinite(cell[i])) return false;
        }
        if (anchor_at_lo) {
            out.value[0] = anchor_value;
            for (std::size_t i = 0; i < n_cells; ++i) out.value[i + 1] = out.value[i] + cell[i];
        } else {
            out.value[n_cells] = anchor_value;
            for (std::size_t i = n_cells; i-- > 0;) out.value[i] = out.value[i + 1] - cell[i];
        }
        return true;
    }

    void build() {
        const double cells_per_unit =
            static_cast<double>(opt_.grid_nodes - 1) / (2.0 * opt_.trunc_half_width);
        double half = opt_.trunc_half_width;
        for (;;) {
            half_width_ = half;
            if (!build_grid_at(half, cells_per_unit)) {
                grid_ok_ = false;
                return;
            }
            const double b_lo = boundary_speed_density(grid_.y0);
            const double b_hi = boundary_speed_density(grid_.y_last());
            if (std::fmax(b_lo, b_hi) <= opt_.boundary_decay) {
                tail_converged_ = true;
                break;
            }
            if (2.0 * half > opt_.max_half_width) {
                tail_converged_ = false;
                diagnostic_ = "speed measure tail does not decay (boundary integrand " +
                              std::to_string(std::fmax(b_lo, b_hi)) + " at half-width " +
                              std::to_string(half) + ")";
                break;
            }
            half *= 2.0;
        }
        grid_ok_ = true;
        build_cumulatives();
        if (!std::isfinite(m_total_) || !(m_total_ > 0.0)) {
            grid_ok_ = false;
            diagnostic_ = "speed measure quadrature produced a non-finite total";
        }
    }

    bool build_grid_at(double half, double cells_per_unit) {
        std::size_t n_side = static_cast<std::size_t>(std::llround(half * cells_per_unit));
        n_side = std::clamp<std::size_t>(n_side, 8, 1000000);
        // Two half-grids anchored at E(0) = 0 keep a node exactly at zero.
        detail::ExponentGrid right, left;
        if (!march_exponent(0.0, half, n_side, 0.0, /*anchor_at_lo=*/true, right) ||
            !march_exponent(-half, 0.0, n_side, 0.0, /*anchor_at_lo=*/false, left)) {
            diagnostic_ = "non-finite drift/sigma^2 ratio inside the truncation window";
            return false;
        }
        grid_.y0 = -half;
        grid_.h = half / static_cast<double>(n_side);
        grid_.value = std::move(left.value);
        grid_.slope = std::move(left.slope);
        grid_.value.insert(grid_.value.end(), right.value.begin() + 1, right.value.end());
        grid_.slope.insert(grid_.slope.end(), right.slope.begin() + 1, right.slope.end());
        return true;
    }

    double boundary_speed_density(double y) const {
        const double sig = model_.diffusion(y);
        return clamped_exp(grid_(y)) / (sig * sig);
    }

    void build_cumulatives() {
        const std::size_t n = grid_.value.size();
        speed_cum_.assign(n, 0.0);
        exp_cum_.assign(n, 0.0);
        KahanSum speed, expo;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double a = grid_.y_at(i), b = grid_.y_at(i + 1);
            expo.add(gauss5([&](double y) { return clamped_exp(grid_(y)); }, a, b));
            speed.add(gauss5(
                [&](double y) {
                    const double sig = model_.diffusion(y);
                    return clamped_exp(grid_(y)) / (sig * sig);
                },
                a, b));
            exp_cum_[i + 1] = expo.value();
            speed_cum_[i + 1] = speed.value();
        }
        m_total_ = speed_cum_.back();
        g_inf_sq_ = exp_cum_.back() / m_total_;
    }

    // Cumulative value of one of the cached arrays at an off-node point.
    double partial(const std::vector<double>& cum, double z, bool with_sigma) const {
        if (z <= grid_.y0) return 0.0;
        if (z >= grid_.y_last()) return cum.back();
        std::size_t k = static_cast<std::size_t>((z - grid_.y0) / grid_.h);
        if (k > cum.size() - 2) k = cum.size() - 2;
        const double yk = grid_.y_at(k);
        const double tail = gauss5(
            [&](double y) {
                const double e = clamped_exp(grid_(y));
                if (!with_sigma) return e;
                const double sig = model_.diffusion(y);
                return e / (sig * sig);
            },
            yk, z);
        return cum[k] + tail;
    }

    RecurrenceScreenReport run_recurrence_screen() const {
        RecurrenceScreenReport r;
        r.m_total = tail_converged_ ? m_total_ : std::numeric_limits<double>::quiet_NaN();
        r.m_converged = tail_converged_;

        const double half = half_width_;
        r.p_left = scale_function(-half);
        r.p_right = scale_function(half);

        // Extend E beyond the grid by marching, then integrate p' over the
        // extension; this probes p at twice the truncation level.
        const std::size_t n_side = (grid_.value.size() - 1) / 2;
        detail::ExponentGrid ext_r, ext_l;
        const bool right_ok =
            march_exponent(half, 2.0 * half, n_side, grid_.value.back(), true, ext_r);
        const bool left_ok =
            march_exponent(-2.0 * half, -half, n_side, grid_.value.front(), false, ext_l);
        if (right_ok)
            r.p_right_2x = r.p_right + integrate([&](double y) { return clamped_exp(-ext_r(y)); },
                                                 half, 2.0 * half, opt_.abs_tol, 1e-10);
        if (left_ok)
            r.p_left_2x = r.p_left - integrate([&](double y) { return clamped_exp(-ext_l(y)); },
                                               -2.0 * half, -half, opt_.abs_tol, 1e-10);

        constexpr double kDivergenceThreshold = 1e6;
        const auto diverges = [&](double at_l, double at_2l) {
            if (std::isinf(at_l)) return true;  // overflow sentinel: clearly divergent
            return std::fabs(at_l) > kDivergenceThreshold && std::fabs(at_2l) > std::fabs(at_l);
        };
        const bool left_div = diverges(r.p_left, r.p_left_2x);
        const bool right_div = diverges(r.p_right, r.p_right_2x);
        r.ok = r.m_converged && left_div && right_div;
        if (!r.m_converged)
            r.diagnostic = diagnostic_.empty() ? "speed measure did not converge" : diagnostic_;
        else if (!left_div || !right_div)
            r.diagnostic = "scale function does not diverge at the truncation boundary";
        return r;
    }
};

/// Numeric screen for positive recurrence: p(+-inf) = +-inf (heuristically,
/// |p| beyond 1e6 at the truncation boundary and still growing at twice it)
/// and a finite speed measure (tail integrand decays below the engine's
/// boundary threshold). The engine computes the report at construction; the
/// model argument only cross-checks that the engine belongs to it.
inline RecurrenceScreenReport check_positive_recurrence(const DiffusionModel& m,
                                                        const StationaryEngine& engine) {
    if (m.drift.source() != engine.model().drift.source() ||
        m.diffusion.source() != engine.model().diffusion.source())
        throw ModelError("engine was built for a different model");
    return engine.recurrence_report();
}

}  // namespace driftgof
