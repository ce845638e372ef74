#ifndef TANGENCYLAB_QUADRATIC_HPP_
#define TANGENCYLAB_QUADRATIC_HPP_

// Fixed points and sink windows of y -> y^2 + muh.

#include "core.hpp"

#include <optional>
#include <vector>

namespace tangencylab::quad
{

struct QuadAnalysis
{
    double mu_hat = 0.0;
    /// Ascending; empty above 1/4, a double root at 1/4.
    std::vector<double> fixed_points;
    /// 2 y_- for the lower fixed point, when it exists.
    std::optional<double> sink_multiplier;

    bool is_sink() const { return sink_multiplier && std::abs(*sink_multiplier) < 1.0; }
};

inline QuadAnalysis analyze(double mu_hat)
{
    QuadAnalysis q;
    q.mu_hat = mu_hat;
    const double disc = 1.0 - 4.0 * mu_hat;
    if (disc < 0.0)
        return q;
    const double s = std::sqrt(disc);
    // 2 y_- = 1 - s; the lower root itself via the product of roots when
    // that avoids cancellation.
    const double upper = 0.5 * (1.0 + s);
    const double lower = s < 0.5 ? 0.5 * (1.0 - s) : mu_hat / upper;
    if (disc == 0.0)
        q.fixed_points = {lower};
    else
        q.fixed_points = {lower, upper};
    q.sink_multiplier = 2.0 * lower;
    return q;
}

/// Parameters for which the lower fixed point attracts.
inline constexpr Interval sink_window() { return {-0.75, 0.25}; }

/// The halved window in which finite-n charts still carry a sink.
inline constexpr Interval proposition_window() { return {-0.375, 0.125}; }

/// (2k-(rho), 2k+(rho)): parameters with |multiplier| < rho.
inline Interval eigenvalue_window(double rho)
{
    if (!(rho > 0.0 && rho < 1.0))
        throw ValidationError("rho must lie in (0, 1)");
    return {(1.0 - (1.0 + rho) * (1.0 + rho)) / 4.0, (1.0 - (1.0 - rho) * (1.0 - rho)) / 4.0};
}

inline double k_minus(double rho) { return eigenvalue_window(rho).lo / 2.0; }
inline double k_plus(double rho) { return eigenvalue_window(rho).hi / 2.0; }

/// Fraction of `samples` evenly spaced starting points in (-1/4, 1/4) whose
/// orbits reach the sink within 1e-9 in at most 10^4 steps.
inline double basin_check(double mu_hat, int samples, int max_steps = 10000, double tol = 1e-9)
{
    const auto q = analyze(mu_hat);
    if (!q.is_sink())
        throw PreconditionError("basin_check requires muh inside the sink window");
    const double target = q.fixed_points.front();
    int hit = 0;
    for (int i = 0; i < samples; ++i) {
        double y = -0.25 + 0.5 * (i + 1.0) / (samples + 1.0);
        for (int k = 0; k <= max_steps; ++k) {
            if (std::abs(y - target) <= tol) {
                ++hit;
                break;
            }
            y = y * y + mu_hat;
        }
    }
    return samples > 0 ? static_cast<double>(hit) / samples : 1.0;
}

/// Single-orbit variant used for spot checks.
inline bool converges_from(double mu_hat, double y0, int max_steps = 10000, double tol = 1e-9)
{
    const auto q = analyze(mu_hat);
    if (!q.is_sink())
        return false;
    double y = y0;
    for (int k = 0; k <= max_steps; ++k) {
        if (std::abs(y - q.fixed_points.front()) <= tol)
            return true;
        y = y * y + mu_hat;
    }
    return false;
}

} // namespace tangencylab::quad

#endif // TANGENCYLAB_QUADRATIC_HPP_
