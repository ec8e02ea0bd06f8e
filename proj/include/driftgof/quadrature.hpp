#pragma once

#include <cmath>
#include <utility>

namespace driftgof {

/// Compensated (Kahan) accumulator for long mixed-sign sums.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) noexcept {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const noexcept { return sum; }
};

namespace detail {

template <class F>
double adaptive_simpson_step(F& f, double a, double b, double fa, double fm, double fb,
                             double whole, double tol, int depth) {
    const double m  = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left  = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a,b].
/// The acceptance test per interval is |S_fine - S_coarse| <= 15 * tol with the
/// usual Richardson correction; tol halves on each split. The effective
/// tolerance is max(abs_tol, rel_tol * |first estimate|).
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-8, double rel_tol = 0.0,
                 int max_depth = 48) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) { std::swap(a, b); sign = -1.0; }
    const double fa = f(a);
    const double fb = f(b);
    const double m  = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double tol = abs_tol;
    if (rel_tol > 0.0) tol = std::fmax(tol, rel_tol * std::fabs(whole));
    return sign * detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// 5-point Gauss-Legendre rule on [a,b]; exact for polynomials of degree 9.
/// Used for the short cells of precomputed grids, where adaptivity is overkill.
template <class F>
double gauss5(F&& f, double a, double b) {
    static constexpr double kNodes[2] = {0.53846931010568309104, 0.90617984593866399280};
    static constexpr double kWeights[3] = {0.56888888888888888889, 0.47862867049936646804,
                                           0.23692688505618908751};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double acc = kWeights[0] * f(c);
    acc += kWeights[1] * (f(c - h * kNodes[0]) + f(c + h * kNodes[0]));
    acc += kWeights[2] * (f(c - h * kNodes[1]) + f(c + h * kNodes[1]));
    return acc * h;
}

}  // namespace driftgof
