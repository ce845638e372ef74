#ifndef TANGENCYLAB_ORBITS_HPP_
#define TANGENCYLAB_ORBITS_HPP_

// Periodic orbits of the return maps: Newton location, classification by
// multipliers, and natural-parameter continuation with bifurcation detection.

#include "model.hpp"

#include <functional>
#include <vector>

namespace tangencylab
{

enum class OrbitClass
{
    Sink,
    Saddle,
    Source,
    Nonhyperbolic,
};

inline const char* to_string(OrbitClass c)
{
    switch (c) {
    case OrbitClass::Sink:
        return "sink";
    case OrbitClass::Saddle:
        return "saddle";
    case OrbitClass::Source:
        return "source";
    case OrbitClass::Nonhyperbolic:
        return "nonhyperbolic";
    }
    return "nonhyperbolic";
}

struct Classification
{
    OrbitClass cls = OrbitClass::Nonhyperbolic;
    /// Eigenvalues ordered by decreasing modulus and their moduli.
    std::array<std::complex<double>, 2> eigenvalues{};
    std::array<double, 2> moduli{};
};

inline constexpr double kHyperbolicityTol = 1e-9;

inline Classification classify(const Mat2& J)
{
    Classification c;
    c.eigenvalues = eigenvalues(J);
    c.moduli = {std::abs(c.eigenvalues[0]), std::abs(c.eigenvalues[1])};
    const double lo = 1.0 - kHyperbolicityTol, hi = 1.0 + kHyperbolicityTol;
    const auto below = [&](double v) { return v < lo; };
    const auto above = [&](double v) { return v > hi; };
    if (below(c.moduli[0]) && below(c.moduli[1]))
        c.cls = OrbitClass::Sink;
    else if (above(c.moduli[0]) && above(c.moduli[1]))
        c.cls = OrbitClass::Source;
    else if (above(c.moduli[0]) && below(c.moduli[1]))
        c.cls = OrbitClass::Saddle;
    else
        c.cls = OrbitClass::Nonhyperbolic;
    return c;
}

struct PeriodicOrbit
{
    Vec2 point;
    Word word;
    std::size_t period = 0; ///< n + N
    std::array<double, 2> multipliers{};
    std::array<std::complex<double>, 2> eigenvalues{};
    OrbitClass cls = OrbitClass::Nonhyperbolic;
    double residual = 0.0;
    int iterations = 0;
    /// Set when the 1e-10 residual target sat below the rounding floor of
    /// the composed map and the solve stopped at that floor instead.
    bool at_precision_floor = false;

    bool is_sink() const { return cls == OrbitClass::Sink; }
    double spectral_radius() const { return multipliers[0]; }
};

struct NewtonOptions
{
    int max_iterations = 50;
    double tolerance = 1e-10;
};

namespace detail
{
/// Rounding floor of the residual: the return map amplifies the spacing of
/// doubles near the point by its Jacobian.
inline double residual_floor(const Mat2& J, Vec2 p)
{
    double jn = 1.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            jn = std::max(jn, std::abs(J(r, c)));
    const double eps = std::numeric_limits<double>::epsilon();
    return 8.0 * eps * jn * std::max({1.0, std::abs(p.x), std::abs(p.y)});
}
} // namespace detail

/// Damped Newton on return_map(p) - p. Throws DomainError when the seed
/// itself breaks the itinerary and NumericalError when Newton fails.
inline PeriodicOrbit find_periodic(const ModelMap& m, const Word& word, Vec2 seed,
                                   const NewtonOptions& opt = {})
{
    PeriodicOrbit orb;
    orb.word = word;
    orb.period = word.size() + static_cast<std::size_t>(m.fold.N);
    Vec2 p = seed;
    Vec2 F = return_map(m, word, p) - p;
    double res = max_norm(F);
    int it = 0;
    double floor = 0.0;
    int stalled = 0;
    while (res > opt.tolerance) {
        if (it >= opt.max_iterations)
            break;
        ++it;
        const Mat2 J = return_jacobian(m, word, p);
        floor = detail::residual_floor(J, p);
        const Vec2 dp = (J - Mat2::identity()).solve(Vec2{-F.x, -F.y});
        double damp = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k) {
            const Vec2 q = p + damp * dp;
            try {
                const Vec2 Fq = return_map(m, word, q) - q;
                const double rq = max_norm(Fq);
                if (rq < res || rq <= opt.tolerance) {
                    p = q;
                    F = Fq;
                    res = rq;
                    accepted = true;
                    break;
                }
                if (rq <= floor && res <= floor) {
                    // Both at the rounding floor: no further progress possible.
                    break;
                }
            } catch (const DomainError&) {
            }
            damp *= 0.5;
        }
        if (!accepted) {
            ++stalled;
            if (res <= floor || stalled > 2)
                break;
        }
    }
    if (res > opt.tolerance) {
        if (res <= floor) {
            orb.at_precision_floor = true;
        } else {
            throw NumericalError("periodic orbit search failed: residual " + std::to_string(res) +
                                 " after " + std::to_string(it) + " Newton steps");
        }
    }
    const auto c = classify(return_jacobian(m, word, p));
    orb.point = p;
    orb.residual = res;
    orb.iterations = it;
    orb.cls = c.cls;
    orb.eigenvalues = c.eigenvalues;
    orb.multipliers = c.moduli;
    return orb;
}

struct SinkCheck
{
    bool contracted = false;
    double initial_distance = 0.0; ///< in chart-normalised units
    double final_distance = 0.0;
    std::size_t iterations = 0;
};

/// Re-verifies a sink by iterating the global piecewise map from a nearby
/// point. Distances are normalised by the orbit's expansion scale S (x
/// offsets times S, y offsets times S^2) so that the test is meaningful for
/// long periods.
inline SinkCheck verify_sink_by_iteration(const ModelMap& m, const PeriodicOrbit& orb,
                                          std::size_t iterations = 10000, double offset = 0.05)
{
    SinkCheck chk;
    const Mat2 J = return_jacobian(m, orb.word, orb.point);
    const double S = std::max(1.0, std::abs(J(0, 1)));
    auto norm_dist = [&](Vec2 q) {
        return std::max(std::abs(q.x - orb.point.x) * S, std::abs(q.y - orb.point.y) * S * S);
    };
    Vec2 q{orb.point.x + offset / S, orb.point.y + offset / (S * S)};
    chk.initial_distance = norm_dist(q);
    const std::size_t period = std::max<std::size_t>(orb.period, 1);
    const std::size_t steps = (iterations + period - 1) / period * period;
    try {
        for (std::size_t i = 0; i < steps; ++i)
            q = step(m, q);
    } catch (const DomainError&) {
        chk.final_distance = std::numeric_limits<double>::infinity();
        chk.iterations = steps;
        return chk;
    }
    chk.iterations = steps;
    chk.final_distance = norm_dist(q);
    chk.contracted = chk.final_distance <= 0.5 * chk.initial_distance;
    return chk;
}

enum class EndReason
{
    RangeExhausted,
    MultiplierCrossedOne,
    NewtonFailed,
};

inline const char* to_string(EndReason r)
{
    switch (r) {
    case EndReason::RangeExhausted:
        return "range-exhausted";
    case EndReason::MultiplierCrossedOne:
        return "multiplier-crossed-one";
    case EndReason::NewtonFailed:
        return "newton-failed";
    }
    return "newton-failed";
}

enum class Bifurcation
{
    None,
    SaddleNode,
    PeriodDoubling,
};

inline const char* to_string(Bifurcation b)
{
    switch (b) {
    case Bifurcation::None:
        return "none";
    case Bifurcation::SaddleNode:
        return "saddle-node";
    case Bifurcation::PeriodDoubling:
        return "period-doubling";
    }
    return "none";
}

struct ContinuationSample
{
    double t = 0.0;
    PeriodicOrbit orbit;
};

struct ContinuationPath
{
    std::vector<ContinuationSample> samples;
    EndReason end_reason = EndReason::RangeExhausted;
    Bifurcation bifurcation = Bifurcation::None;
    /// Parameter at which the sink was lost (bisection-localised), when it was.
    double t_exit = std::numeric_limits<double>::quiet_NaN();
};

using Family = std::function<ModelMap(double)>;

/// The primary family: t -> m with that unfolding parameter.
inline Family primary_family(const ModelMap& m)
{
    return [m](double t) { return m.with_t(t); };
}

struct ContinuationOptions
{
    double initial_step = 0.0; ///< 0 picks range / 50
    NewtonOptions newton;
    /// Bisection tolerance in t; 0 picks min(1e-10, 1e-6 * |range|).
    double bisection_tol = 0.0;
};

/// Natural-parameter continuation of a sink from t_from to t_to. Stops at
/// the first loss of stability, localised by bisection.
inline ContinuationPath continue_orbit(const Family& family, const PeriodicOrbit& start, double t_from,
                                       double t_to, ContinuationOptions opt = {})
{
    ContinuationPath path;
    path.samples.push_back({t_from, start});
    const double range = std::abs(t_to - t_from);
    if (range == 0.0)
        return path;
    const double dir = t_to > t_from ? 1.0 : -1.0;
    double h = opt.initial_step > 0.0 ? opt.initial_step : range / 50.0;
    const double ulp_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(t_from), std::abs(t_to));
    const double h_floor = std::max(1e-12 * range, ulp_floor);
    const double tol = opt.bisection_tol > 0.0 ? opt.bisection_tol
                                               : std::max(std::min(1e-10, 1e-6 * range), ulp_floor);

    auto attempt = [&](double t, const PeriodicOrbit& seed) -> std::optional<PeriodicOrbit> {
        try {
            auto o = find_periodic(family(t), seed.word, seed.point, opt.newton);
            return o;
        } catch (const NumericalError&) {
            return std::nullopt;
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };

    auto kind_of = [](const PeriodicOrbit& o) {
        return o.eigenvalues[0].real() < 0.0 ? Bifurcation::PeriodDoubling : Bifurcation::SaddleNode;
    };

    // Bisection between a good sink at ta and a failure at tb.
    auto localise = [&](double ta, PeriodicOrbit good, double tb) {
        while (std::abs(tb - ta) > tol) {
            const double tm = 0.5 * (ta + tb);
            if (tm == ta || tm == tb)
                break;
            auto o = attempt(tm, good);
            if (o && o->is_sink()) {
                ta = tm;
                good = *o;
            } else {
                tb = tm;
            }
        }
        path.samples.push_back({ta, good});
        path.end_reason = EndReason::MultiplierCrossedOne;
        path.bifurcation = kind_of(good);
        path.t_exit = 0.5 * (ta + tb);
    };

    double t = t_from;
    PeriodicOrbit cur = start;
    while (dir * (t_to - t) > 0.0) {
        const double hh = std::min(h, std::abs(t_to - t));
        const double tn = dir * (t_to - t) <= hh ? t_to : t + dir * hh;
        auto o = attempt(tn, cur);
        if (o && o->is_sink()) {
            t = tn;
            cur = *o;
            path.samples.push_back({t, cur});
            h = std::min(1.5 * h, range);
            continue;
        }
        if (o && cur.is_sink()) {
            // Converged to a non-sink: a multiplier crossed the unit circle.
            localise(t, cur, tn);
            return path;
        }
        if (cur.is_sink() && cur.multipliers[0] > 0.99 && cur.eigenvalues[0].real() > 0.0) {
            // Newton lost the orbit right after a multiplier near +1: fold.
            localise(t, cur, tn);
            return path;
        }
        h *= 0.5;
        if (h < h_floor) {
            path.end_reason = EndReason::NewtonFailed;
            return path;
        }
    }
    path.end_reason = EndReason::RangeExhausted;
    return path;
}

} // namespace tangencylab

#endif // TANGENCYLAB_ORBITS_HPP_
