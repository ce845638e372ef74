#ifndef TANGENCYLAB_RENORM_HPP_
#define TANGENCYLAB_RENORM_HPP_

// Renormalisation of the (n + N)-th return near the tangency. In chart
// coordinates (xh, yh) and parameter muh the return map is close to the
// Henon-like limit (yh, yh^2 + muh).
//
// Charts are attached to a branch word w of length n. The word fixes
//   y_w  the ordinate that lands on the stable leaf y = 0 after w,
//   X_w  the image of x = 0 after w (the unstable leaf met by the orbit),
// and the chart parameter is the relative height mu of the parabola vertex
// over leaf X_w, measured from y_w. For the primary word 0^n both are 0.

#include "model.hpp"

#include <vector>

namespace tangencylab
{

struct RenormChart
{
    std::size_t n = 0;
    Word word;
    SaddleSpec saddle;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double a = 0.5;
    double b = 0.5;
    double c = 0.0;
    double dist = 0.5;
    double y_word = 0.0;
    double x_word = 0.0;
    /// Rates evaluated along the orbit of (b, y_reference).
    double sigma_n = 1.0;
    double lambda_n = 1.0;
    double y_reference = 0.0;
};

struct RenormPoint
{
    double xh = 0.0;
    double yh = 0.0;
    double muh = 0.0;
};

struct ChartPoint
{
    double x = 0.0;
    double y = 0.0;
    double mu = 0.0;
};

namespace detail
{
/// Orbit products along the word and their derivatives in the starting
/// coordinate. Throws DomainError if the orbit leaves the word's strips.
struct OrbitRates
{
    double S = 1.0;
    double dS = 0.0;
    double L = 1.0;
    double dL = 0.0;
};

inline OrbitRates orbit_rates(const SaddleSpec& s, const Word& word, double x, double y)
{
    OrbitRates r;
    double dlogS = 0.0, dlogL = 0.0;
    double dy = 1.0, dx = 1.0;
    for (std::size_t j = 0; j < word.size(); ++j) {
        if (s.branch_of({x, y}) != word[j])
            throw DomainError("chart orbit leaves strip " + std::to_string(word[j]) +
                                  " at iterate " + std::to_string(j),
                              j);
        const double d = branch_datum(word[j]);
        const double sg = s.sigma_at(y);
        const double lm = s.lambda_at(x);
        r.S *= sg;
        r.L *= lm;
        dlogS += s.dsigma(y) / sg * dy;
        dlogL += s.dlambda(x) / lm * dx;
        dy *= sg + s.dsigma(y) * (y - d);
        dx *= lm + s.dlambda(x) * (x - d);
        x = d + lm * (x - d);
        y = d + sg * (y - d);
    }
    r.dS = r.S * dlogS;
    r.dL = r.L * dlogL;
    return r;
}

inline double ulp(double v) { return std::nextafter(std::abs(v), INFINITY) - std::abs(v); }

/// Preimage of `target` under the y-part of one branch.
inline double branch_preimage_y(const SaddleSpec& s, int branch, double target)
{
    const double d = branch_datum(branch);
    if (s.nonlinearity.sigma_amp == 0.0)
        return d + (target - d) / s.sigma;
    double lo = branch == 0 ? 0.0 : s.strip1_bottom();
    double hi = branch == 0 ? s.strip0_top() : 1.0;
    auto f = [&](double y) { return d + s.sigma_at(y) * (y - d) - target; };
    double flo = f(lo);
    if (flo == 0.0)
        return lo;
    if (f(hi) == 0.0)
        return hi;
    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

/// Ordinate y_w landing on y = 0 after the word.
inline double word_level(const SaddleSpec& s, const Word& word)
{
    double y = kSaddleY;
    for (std::size_t j = word.size(); j-- > 0;)
        y = detail::branch_preimage_y(s, word[j], y);
    return y;
}

/// Image X_w of x = 0 after the word.
inline double word_leaf(const SaddleSpec& s, const Word& word)
{
    double x = kSaddleX;
    for (auto br : word) {
        const double d = branch_datum(br);
        x = d + s.lambda_at(x) * (x - d);
    }
    return x;
}

/// Smallest n for which the affine estimates put the chart in its
/// invertible regime: the x-coupling gamma*alpha*(lambda*sigma)^n is at most
/// 1/8 and the unit chart box fits inside the fold domain.
inline std::size_t chart_min_n(const ModelMap& m)
{
    const auto co = chart_coefficients(m);
    const double ls = m.saddle.max_lambda() * m.saddle.max_sigma();
    const double smin = m.saddle.min_sigma();
    for (std::size_t n = 1; n < 200; ++n) {
        const double coupling = std::abs(co.gamma * co.alpha) * std::pow(ls, static_cast<double>(n));
        const double reach = 2.0 * std::pow(smin, -static_cast<double>(n)) / std::abs(co.beta);
        if (coupling <= 0.125 && reach <= m.fold.domain_radius)
            return n;
    }
    return 200;
}

/// Builds the chart for word `word` (length n); the empty word means 0^n.
inline RenormChart make_chart(const ModelMap& m, std::size_t n, Word word = {})
{
    if (word.empty())
        word = zero_word(n);
    if (word.size() != n)
        throw ValidationError("branch word length must equal n");
    const auto co = chart_coefficients(m);
    RenormChart ch;
    ch.n = n;
    ch.word = word;
    ch.saddle = m.saddle;
    ch.alpha = co.alpha;
    ch.beta = co.beta;
    ch.gamma = co.gamma;
    ch.a = m.fold.a;
    ch.b = m.fold.b;
    ch.c = m.fold.c;
    ch.dist = m.fold.stable_arc_length();
    ch.y_word = word_level(m.saddle, word);
    ch.x_word = word_leaf(m.saddle, word);
    // Reference ordinate: the one landing on r after the word, found by
    // iterating y = y_w + (a - y_P) / S(y).
    double y = ch.y_word + (ch.a - kSaddleY) * std::pow(m.saddle.sigma, -static_cast<double>(n));
    for (int it = 0; it < 100; ++it) {
        const auto r = detail::orbit_rates(m.saddle, word, ch.b, y);
        const double next = ch.y_word + (ch.a - kSaddleY) / r.S;
        if (std::abs(next - y) <= 1e-16) {
            y = next;
            break;
        }
        y = next;
    }
    const auto r = detail::orbit_rates(m.saddle, word, ch.b, y);
    ch.y_reference = y;
    ch.sigma_n = r.S;
    ch.lambda_n = r.L;
    return ch;
}

/// Relative height of the parabola vertex over leaf X_w above y_w.
inline double relative_height(const ModelMap& m, const RenormChart& ch)
{
    return vertex_height(m, ch.x_word) - ch.y_word;
}

/// Shifts t so that the relative height of `m` in chart `ch` equals `mu`.
inline ModelMap with_relative_height(const ModelMap& m, const RenormChart& ch, double mu)
{
    ModelMap out = m;
    for (int it = 0; it < 4; ++it) {
        const double err = relative_height(out, ch) - mu;
        if (err == 0.0)
            break;
        out.t -= err;
    }
    return out;
}

/// Forward change of variables (x, y, mu) -> (xh, yh, muh). The rates are
/// taken along the actual orbit of (x, y).
inline RenormPoint to_renorm(const RenormChart& ch, ChartPoint p)
{
    const auto r = detail::orbit_rates(ch.saddle, ch.word, p.x, p.y);
    const double S = r.S;
    RenormPoint out;
    out.xh = (p.x - ch.b) * S * ch.beta / ch.alpha;
    out.yh = ((p.y - ch.y_word) * S * S - (ch.a - kSaddleY) * S) * ch.beta;
    out.muh = (p.mu * S * S + ch.dist * ch.gamma * r.L * S * S - (ch.a - kSaddleY) * S) * ch.beta;
    return out;
}

/// Spatial part of the forward chart and its Jacobian in (x, y).
inline std::pair<Vec2, Mat2> chart_spatial(const RenormChart& ch, Vec2 p)
{
    const auto r = detail::orbit_rates(ch.saddle, ch.word, p.x, p.y);
    const double S = r.S, dS = r.dS;
    const double A = ch.a - kSaddleY;
    const Vec2 v{(p.x - ch.b) * S * ch.beta / ch.alpha, ((p.y - ch.y_word) * S * S - A * S) * ch.beta};
    const Mat2 J = Mat2::from(S * ch.beta / ch.alpha, (p.x - ch.b) * dS * ch.beta / ch.alpha, 0.0,
                              ch.beta * (S * S + 2.0 * (p.y - ch.y_word) * S * dS - A * dS));
    return {v, J};
}

/// Ordinate of the point with chart ordinate yh (x-independent when the
/// y-rates do not depend on x, which holds for the model's branches).
inline double chart_ordinate(const RenormChart& ch, double yh, double x)
{
    const double A = ch.a - kSaddleY;
    if (ch.saddle.nonlinearity.sigma_amp == 0.0) {
        const double S = ch.sigma_n;
        return ch.y_word + A / S + yh / (ch.beta * S * S);
    }
    double y = ch.y_reference + yh / (ch.beta * ch.sigma_n * ch.sigma_n);
    for (int it = 0; it < 100; ++it) {
        const auto r = detail::orbit_rates(ch.saddle, ch.word, x, y);
        const double S = r.S, dS = r.dS;
        const double g = y - ch.y_word - A / S - yh / (ch.beta * S * S);
        const double dg = 1.0 + A * dS / (S * S) + 2.0 * yh * dS / (ch.beta * S * S * S);
        const double step = g / dg;
        y -= step;
        // Stop at the chart tolerance or at the float grid, whichever is coarser.
        if (std::abs(step) <= std::max(1e-14 / std::abs(ch.beta * S * S), 4.0 * detail::ulp(y)))
            return y;
    }
    throw NumericalError("inverse chart: implicit ordinate equation did not converge");
}

/// Inverse change of variables.
inline ChartPoint from_renorm(const RenormChart& ch, RenormPoint q)
{
    const double A = ch.a - kSaddleY;
    ChartPoint p;
    // x does not enter S, so solve for y first at a provisional x.
    p.y = chart_ordinate(ch, q.yh, ch.b);
    auto r = detail::orbit_rates(ch.saddle, ch.word, ch.b, p.y);
    p.x = ch.b + ch.alpha * q.xh / (ch.beta * r.S);
    r = detail::orbit_rates(ch.saddle, ch.word, p.x, p.y);
    p.mu = q.muh / (ch.beta * r.S * r.S) - ch.dist * ch.gamma * r.L + A / r.S;
    return p;
}

/// The limit map (xh, yh) -> (yh, yh^2 + muh).
inline Vec2 limit_map(Vec2 p, double muh) { return {p.y, p.y * p.y + muh}; }

inline Mat2 limit_jacobian(Vec2 p) { return Mat2::from(0.0, 1.0, 0.0, 2.0 * p.y); }

/// Return map conjugated by the chart's spatial part at the model's current
/// height parameter.
inline Vec2 renormalized_return(const ModelMap& m, const RenormChart& ch, Vec2 ph)
{
    const double y = chart_ordinate(ch, ph.y, ch.b);
    const auto r = detail::orbit_rates(ch.saddle, ch.word, ch.b, y);
    const Vec2 p{ch.b + ch.alpha * ph.x / (ch.beta * r.S), y};
    const Vec2 img = return_map(m, ch.word, p);
    return chart_spatial(ch, img).first;
}

/// Derivative of renormalized_return by the chain rule.
inline Mat2 renormalized_jacobian(const ModelMap& m, const RenormChart& ch, Vec2 ph)
{
    const double y = chart_ordinate(ch, ph.y, ch.b);
    const auto r = detail::orbit_rates(ch.saddle, ch.word, ch.b, y);
    const Vec2 p{ch.b + ch.alpha * ph.x / (ch.beta * r.S), y};
    const Mat2 J = return_jacobian(m, ch.word, p);
    const Vec2 img = return_map(m, ch.word, p);
    const Mat2 Din = chart_spatial(ch, p).second;
    const Mat2 Dout = chart_spatial(ch, img).second;
    // D(in)^-1 by explicit inverse.
    const double d = Din.det();
    const Mat2 inv = Mat2::from(Din(1, 1) / d, -Din(0, 1) / d, -Din(1, 0) / d, Din(0, 0) / d);
    return Dout * J * inv;
}

/// Chart parameter at the model's current height, evaluated at the reference
/// orbit.
inline double chart_muhat(const ModelMap& m, const RenormChart& ch)
{
    return to_renorm(ch, {ch.b, ch.y_reference, relative_height(m, ch)}).muh;
}

struct RenormDiagnostics
{
    std::size_t n = 0;
    double c0_deviation = 0.0;
    double c1_deviation = 0.0;
    double muhat_dx = 0.0;
    double muhat_dy = 0.0;
    bool admissible = true;
};

/// Grid suprema of |T - L| and |DT - DL| over [-1,1]^2 at chart parameter
/// muh, plus the flatness of the parameter change over slices of [-1,1]^3.
inline RenormDiagnostics renorm_diagnostics(const ModelMap& m, std::size_t n, int grid = 101,
                                            double muh = 0.0)
{
    RenormDiagnostics d;
    d.n = n;
    try {
        const RenormChart ch = make_chart(m, n);
        const double mu = from_renorm(ch, {0.0, 0.0, muh}).mu;
        const ModelMap mm = with_relative_height(m, ch, mu);
        const double muh_eff = chart_muhat(mm, ch);
        double dev = 0.0, ddev = 0.0;
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const Vec2 ph{-1.0 + 2.0 * i / (grid - 1), -1.0 + 2.0 * j / (grid - 1)};
                const Vec2 T = renormalized_return(mm, ch, ph);
                const Vec2 L = limit_map(ph, muh_eff);
                dev = std::max(dev, max_norm(T - L));
                const Mat2 DT = renormalized_jacobian(mm, ch, ph);
                const Mat2 diff = DT - limit_jacobian(ph);
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c)
                        ddev = std::max(ddev, std::abs(diff(r, c)));
            }
        d.c0_deviation = dev;
        d.c1_deviation = std::max(dev, ddev);

        // Flatness: at fixed (physical) mu, how much the chart parameter
        // varies with the chart point.
        const double h = 1e-5;
        const int fgrid = std::max(11, grid / 5);
        for (double slice : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            const double mu_s = from_renorm(ch, {0.0, 0.0, slice}).mu;
            auto muhat_at = [&](double xh, double yh) {
                const ChartPoint p = from_renorm(ch, {xh, yh, slice});
                return to_renorm(ch, {p.x, p.y, mu_s}).muh;
            };
            for (int i = 0; i < fgrid; ++i)
                for (int j = 0; j < fgrid; ++j) {
                    const double xh = -1.0 + 2.0 * i / (fgrid - 1);
                    const double yh = -1.0 + 2.0 * j / (fgrid - 1);
                    const double xa = std::clamp(xh, -1.0 + h, 1.0 - h);
                    const double ya = std::clamp(yh, -1.0 + h, 1.0 - h);
                    const double dx = (muhat_at(xa + h, ya) - muhat_at(xa - h, ya)) / (2.0 * h);
                    const double dy = (muhat_at(xa, ya + h) - muhat_at(xa, ya - h)) / (2.0 * h);
                    d.muhat_dx = std::max(d.muhat_dx, std::abs(dx));
                    d.muhat_dy = std::max(d.muhat_dy, std::abs(dy));
                }
        }
    } catch (const DomainError&) {
        d.admissible = false;
        d.c0_deviation = d.c1_deviation = d.muhat_dx = d.muhat_dy =
            std::numeric_limits<double>::quiet_NaN();
    }
    return d;
}

inline std::vector<RenormDiagnostics> convergence_report(const ModelMap& m, std::size_t n_min,
                                                         std::size_t n_max, int grid = 101)
{
    std::vector<RenormDiagnostics> out;
    for (std::size_t n = n_min; n <= n_max; ++n)
        out.push_back(renorm_diagnostics(m, n, grid));
    return out;
}

/// G(muh): the relative height nu - c at which the chart parameter equals
/// muh, solving nu = c + (a - y_P) / S(nu) + muh / (beta S(nu)^2) - dist gamma L.
/// Returns the absolute height nu (c included).
inline double implicit_height(const RenormChart& ch, double muh, bool include_leaf_term = true)
{
    if (!(muh > -2.0 && muh < 2.0))
        throw ValidationError("implicit_height requires muh in (-2, 2)");
    const double A = ch.a - kSaddleY;
    const double leaf = include_leaf_term ? ch.dist * ch.gamma * ch.lambda_n : 0.0;
    if (ch.saddle.is_affine()) {
        const double S = ch.sigma_n;
        return ch.c + A / S + muh / (ch.beta * S * S) - leaf;
    }
    double nu = ch.c + A / ch.sigma_n;
    for (int it = 0; it < 100; ++it) {
        const double y = ch.y_word + (nu - ch.c);
        const auto r = detail::orbit_rates(ch.saddle, ch.word, ch.b, y);
        const double S = r.S, dS = r.dS;
        const double lf = include_leaf_term ? ch.dist * ch.gamma * r.L : 0.0;
        const double g = nu - ch.c - A / S - muh / (ch.beta * S * S) + lf;
        const double dg = 1.0 + A * dS / (S * S) + 2.0 * muh * dS / (ch.beta * S * S * S);
        const double step = g / dg;
        nu -= step;
        if (std::abs(step) <= std::max(1e-14 / std::abs(ch.beta * S * S), 4.0 * detail::ulp(nu)))
            return nu;
    }
    throw NumericalError("implicit_height: Newton did not converge");
}

/// nu^(0): the height solving nu = c + (a - y_P) / S(nu) (no muh, no leaf term).
inline double baseline_height(const RenormChart& ch) { return implicit_height(ch, 0.0, false); }

} // namespace tangencylab

#endif // TANGENCYLAB_RENORM_HPP_
