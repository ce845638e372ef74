#ifndef TANGENCYLAB_MODEL_HPP_
#define TANGENCYLAB_MODEL_HPP_

// The piecewise model diffeomorphism: a two-branch horseshoe on the unit
// square (horizontal strips mapped across vertical strips) plus a quadratic
// fold that sends a neighbourhood of r = (x_P, a) on the local unstable leaf
// of the fixed saddle P = (0, 0) back near q = (b, c).

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tangencylab
{

/// Branch itinerary through the horseshoe strips, one symbol (0 or 1) per
/// saddle iterate.
using Word = std::vector<std::uint8_t>;

inline Word zero_word(std::size_t n) { return Word(n, 0); }

inline Word parse_word(std::string_view s)
{
    Word w;
    w.reserve(s.size());
    for (char ch : s) {
        if (ch != '0' && ch != '1')
            throw ValidationError("branch word must contain only '0' and '1'");
        w.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    return w;
}

inline std::string to_string(const Word& w)
{
    std::string s;
    s.reserve(w.size());
    for (auto b : w)
        s.push_back(static_cast<char>('0' + b));
    return s;
}

/// Abscissa and ordinate of the fixed saddle P (fixed point of branch 0).
inline constexpr double kSaddleX = 0.0;
inline constexpr double kSaddleY = 0.0;

/// Fixed datum of each branch: branch 0 fixes (0,0), branch 1 fixes (1,1).
inline constexpr double branch_datum(int branch) { return branch == 0 ? 0.0 : 1.0; }

struct Nonlinearity
{
    /// lambda(x) = lambda * (1 + lambda_amp * x)
    double lambda_amp = 0.0;
    /// sigma(y) = sigma * (1 + sigma_amp * y)
    double sigma_amp = 0.0;

    friend bool operator==(const Nonlinearity&, const Nonlinearity&) = default;
};

/// Rates of the horseshoe. Each branch contracts horizontal distances to its
/// datum by lambda(x) and expands vertical ones by sigma(y).
struct SaddleSpec
{
    double lambda = 0.2;
    double sigma = 2.1;
    Nonlinearity nonlinearity;

    bool is_affine() const { return nonlinearity.lambda_amp == 0.0 && nonlinearity.sigma_amp == 0.0; }

    double lambda_at(double x) const { return lambda * (1.0 + nonlinearity.lambda_amp * x); }
    double sigma_at(double y) const { return sigma * (1.0 + nonlinearity.sigma_amp * y); }
    double dlambda(double) const { return lambda * nonlinearity.lambda_amp; }
    double dsigma(double) const { return sigma * nonlinearity.sigma_amp; }

    double max_lambda() const { return std::max(lambda_at(0.0), lambda_at(1.0)); }
    double max_sigma() const { return std::max(sigma_at(0.0), sigma_at(1.0)); }
    double min_sigma() const { return std::min(sigma_at(0.0), sigma_at(1.0)); }

    /// Top of the branch-0 strip: the ordinate mapped onto y = 1.
    double strip0_top() const
    {
        if (nonlinearity.sigma_amp == 0.0)
            return 1.0 / sigma;
        return bisect([this](double y) { return y * sigma_at(y) - 1.0; });
    }

    /// Bottom of the branch-1 strip: the ordinate mapped onto y = 0.
    double strip1_bottom() const
    {
        if (nonlinearity.sigma_amp == 0.0)
            return 1.0 - 1.0 / sigma;
        return bisect([this](double y) { return 1.0 - (1.0 - y) * sigma_at(y); });
    }

    /// 0 or 1 for points in a strip, -1 for the gap between the strips,
    /// -2 outside the unit square.
    int branch_of(Vec2 p) const
    {
        if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
            return -2;
        if (p.y <= strip0_top())
            return 0;
        if (p.y >= strip1_bottom())
            return 1;
        return -1;
    }

    /// Largest lambda(x) * sigma(y)^2 over an n x n grid of the unit square.
    double max_dissipation(int n = 100) const
    {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double x = (i + 0.5) / n;
                const double y = (j + 0.5) / n;
                const double s = sigma_at(y);
                worst = std::max(worst, lambda_at(x) * s * s);
            }
        return worst;
    }

    void validate() const
    {
        if (!(lambda > 0.0 && lambda < 0.5))
            throw ValidationError("saddle.lambda must lie in (0, 1/2)");
        if (!(sigma > 2.0))
            throw ValidationError("saddle.sigma must exceed 2 for disjoint strips");
        if (std::abs(nonlinearity.lambda_amp) > 0.5 || std::abs(nonlinearity.sigma_amp) > 0.5)
            throw ValidationError("nonlinearity amplitudes must be at most 0.5");
        if (max_lambda() >= 0.5 || min_sigma() <= 2.0)
            throw ValidationError("nonlinear rates leave the horseshoe regime");
        if (max_dissipation() >= 1.0)
            throw ValidationError("saddle is not strongly dissipative (lambda*sigma^2 >= 1)");
    }

    friend bool operator==(const SaddleSpec&, const SaddleSpec&) = default;

private:
    template <class F>
    static double bisect(F f)
    {
        double lo = 0.0, hi = 1.0;
        double flo = f(lo);
        for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
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
};

/// Image of p under one horseshoe branch.
inline Vec2 saddle_step(const SaddleSpec& s, Vec2 p, int branch)
{
    const int actual = s.branch_of(p);
    if (actual != branch)
        throw DomainError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") is not in horseshoe strip " + std::to_string(branch));
    const double d = branch_datum(branch);
    return {d + s.lambda_at(p.x) * (p.x - d), d + s.sigma_at(p.y) * (p.y - d)};
}

inline Mat2 saddle_jacobian(const SaddleSpec& s, Vec2 p, int branch)
{
    const double d = branch_datum(branch);
    return Mat2::diag(s.lambda_at(p.x) + s.dlambda(p.x) * (p.x - d),
                      s.sigma_at(p.y) + s.dsigma(p.y) * (p.y - d));
}

struct Rates
{
    double lambda_n = 1.0;
    double sigma_n = 1.0;
    Vec2 end;
};

/// Products of lambda(x_j) and sigma(y_j) along the first n iterates that
/// follow `word`.
inline Rates accumulated_rates(const SaddleSpec& s, Vec2 p, const Word& word)
{
    Rates r{1.0, 1.0, p};
    for (std::size_t j = 0; j < word.size(); ++j) {
        if (s.branch_of(r.end) != word[j])
            throw DomainError("orbit leaves strip " + std::to_string(word[j]) + " at iterate " +
                                  std::to_string(j),
                              j);
        r.lambda_n *= s.lambda_at(r.end.x);
        r.sigma_n *= s.sigma_at(r.end.y);
        r.end = saddle_step(s, r.end, word[j]);
    }
    return r;
}

/// One polynomial term coef * x*^px * y*^py of a fold remainder.
struct Monomial
{
    int component = 2; // 1 for H1, 2 for H2
    double coef = 0.0;
    int px = 0;
    int py = 0;

    friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Taylor data of the transition from near r = (x_P, a) to near q = (b, c).
struct FoldSpec
{
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double a = 0.5;
    double b = 0.5;
    double c = 0.0;
    int N = 1;
    std::vector<Monomial> remainder;
    /// Half-size of the declared domain in y* (|x*| <= 1 always).
    double domain_radius = 0.25;

    double stable_arc_length() const { return std::abs(b - kSaddleX); }

    void validate() const
    {
        if (alpha == 0.0 || gamma == 0.0)
            throw ValidationError("fold requires alpha*gamma != 0");
        if (beta == 0.0)
            throw ValidationError("fold requires beta != 0 (quadratic tangency)");
        if (N < 1)
            throw ValidationError("fold.N must be at least 1");
        if (!(domain_radius > 0.0))
            throw ValidationError("fold.domain_radius must be positive");
        for (const auto& t : remainder) {
            if (t.component != 1 && t.component != 2)
                throw ValidationError("remainder component must be 1 or 2");
            if (t.px < 0 || t.py < 0)
                throw ValidationError("remainder exponents must be non-negative");
            const bool constant = t.px == 0 && t.py == 0;
            const bool y_linear = t.px == 0 && t.py == 1;
            if (constant || y_linear)
                throw ValidationError("remainder may not contain constant or y*-linear terms");
            if (t.component == 2 && ((t.px == 1 && t.py == 0) || (t.px == 0 && t.py == 2)))
                throw ValidationError("H2 remainder may not alter gamma or beta");
        }
    }

    friend bool operator==(const FoldSpec&, const FoldSpec&) = default;
};

namespace detail
{
inline double ipow(double v, int p)
{
    double r = 1.0;
    for (int i = 0; i < p; ++i)
        r *= v;
    return r;
}

/// Value and gradient of the remainder of one component at (x*, y*).
inline std::array<double, 3> remainder_eval(const std::vector<Monomial>& terms, int component,
                                            double xs, double ys)
{
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (const auto& t : terms) {
        if (t.component != component)
            continue;
        out[0] += t.coef * ipow(xs, t.px) * ipow(ys, t.py);
        if (t.px > 0)
            out[1] += t.coef * t.px * ipow(xs, t.px - 1) * ipow(ys, t.py);
        if (t.py > 0)
            out[2] += t.coef * t.py * ipow(xs, t.px) * ipow(ys, t.py - 1);
    }
    return out;
}
} // namespace detail

/// The fold in local coordinates: x* = x - x_P, y* = y - a.
inline Vec2 fold_step(const FoldSpec& f, double mu, Vec2 p)
{
    const double xs = p.x - kSaddleX;
    const double ys = p.y - f.a;
    if (!(std::abs(xs) <= 1.0 && std::abs(ys) <= f.domain_radius))
        throw DomainError("point is outside the fold domain");
    const auto h1 = detail::remainder_eval(f.remainder, 1, xs, ys);
    const auto h2 = detail::remainder_eval(f.remainder, 2, xs, ys);
    return {f.b + f.alpha * ys + h1[0], f.c + f.beta * ys * ys + mu + f.gamma * xs + h2[0]};
}

inline Mat2 fold_jacobian(const FoldSpec& f, Vec2 p)
{
    const double xs = p.x - kSaddleX;
    const double ys = p.y - f.a;
    const auto h1 = detail::remainder_eval(f.remainder, 1, xs, ys);
    const auto h2 = detail::remainder_eval(f.remainder, 2, xs, ys);
    return Mat2::from(h1[1], f.alpha + h1[2], f.gamma + h2[1], 2.0 * f.beta * ys + h2[2]);
}

/// Term coef * (u-b)^pu * (v-c)^pv of a perturbation shape.
struct ShapeTerm
{
    double coef = 0.0;
    int pu = 0;
    int pv = 0;

    friend bool operator==(const ShapeTerm&, const ShapeTerm&) = default;
};

/// A perturbation xi supported in a disc V around the tangency point q:
///   xi(u, v) = (u + s1(u, v), v + k + s2(u, v)),
///   s_i = delta * phi(u, v) * sum_terms coef (u - b)^pu (v - c)^pv,
/// with phi a C-infinity bump equal to 1 at q. Vertical terms must carry
/// (u - b)^2 or a higher power so that on the line of tangencies the
/// vertical displacement is exactly k and its u-derivative vanishes.
struct PerturbationSpec
{
    double k = 0.0;
    double delta = 0.0;
    double radius = 0.25;
    std::vector<ShapeTerm> horizontal;
    std::vector<ShapeTerm> vertical;
    /// Centre of the support; filled from the fold by apply_perturbation.
    std::optional<Vec2> center;

    static constexpr double kMaxDelta = 0.05;

    bool has_shape() const
    {
        return delta != 0.0 && (!horizontal.empty() || !vertical.empty());
    }

    void validate() const
    {
        if (!(radius > 0.0))
            throw ValidationError("perturbation.radius must be positive");
        if (!(delta >= 0.0 && delta <= kMaxDelta))
            throw ValidationError("perturbation.delta must lie in [0, " + std::to_string(kMaxDelta) + "]");
        for (const auto& t : vertical)
            if (t.pu < 2 && t.coef != 0.0)
                throw ValidationError(
                    "vertical shape term violates the line-of-tangencies constraint (needs (u-b)^2)");
        for (const auto& t : horizontal)
            if (t.pu < 0 || t.pv < 0)
                throw ValidationError("shape exponents must be non-negative");
        for (const auto& t : vertical)
            if (t.pv < 0)
                throw ValidationError("shape exponents must be non-negative");
        if (!std::isfinite(k))
            throw ValidationError("perturbation.k must be finite");
    }

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;

    /// Applies xi to a point.
    Vec2 apply(Vec2 p) const
    {
        if (!has_shape())
            return {p.x, p.y + k};
        const auto [s1, s2] = shape_values(p);
        return {p.x + s1[0], p.y + k + s2[0]};
    }

    Mat2 jacobian(Vec2 p) const
    {
        if (!has_shape())
            return Mat2::identity();
        const auto [s1, s2] = shape_values(p);
        return Mat2::from(1.0 + s1[1], s1[2], s2[1], 1.0 + s2[2]);
    }

private:
    // {value, d/du, d/dv} of each shape component.
    std::pair<std::array<double, 3>, std::array<double, 3>> shape_values(Vec2 p) const
    {
        const Vec2 q = center.value_or(Vec2{0.0, 0.0});
        const double du = p.x - q.x;
        const double dv = p.y - q.y;
        const double r2 = (du * du + dv * dv) / (radius * radius);
        if (r2 >= 1.0)
            return {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
        const double one_minus = 1.0 - r2;
        const double phi = std::exp(1.0 - 1.0 / one_minus);
        const double dphi_dr2 = -phi / (one_minus * one_minus);
        const double phi_u = dphi_dr2 * 2.0 * du / (radius * radius);
        const double phi_v = dphi_dr2 * 2.0 * dv / (radius * radius);
        auto poly = [&](const std::vector<ShapeTerm>& terms) {
            std::array<double, 3> out{0.0, 0.0, 0.0};
            for (const auto& t : terms) {
                out[0] += t.coef * detail::ipow(du, t.pu) * detail::ipow(dv, t.pv);
                if (t.pu > 0)
                    out[1] += t.coef * t.pu * detail::ipow(du, t.pu - 1) * detail::ipow(dv, t.pv);
                if (t.pv > 0)
                    out[2] += t.coef * t.pv * detail::ipow(du, t.pu) * detail::ipow(dv, t.pv - 1);
            }
            return out;
        };
        auto combine = [&](const std::array<double, 3>& pp) {
            return std::array<double, 3>{delta * pp[0] * phi, delta * (pp[1] * phi + pp[0] * phi_u),
                                         delta * (pp[2] * phi + pp[0] * phi_v)};
        };
        return {combine(poly(horizontal)), combine(poly(vertical))};
    }
};

/// The full model: horseshoe, fold, unfolding parameter and the chain of
/// perturbations applied after the fold (xi_m o ... o xi_1 o fold).
struct ModelMap
{
    SaddleSpec saddle;
    FoldSpec fold;
    double t = 0.0;
    double baseline = 0.0;
    std::vector<PerturbationSpec> perturbations;

    /// Height parameter entering the fold before perturbations.
    double fold_mu() const { return t + baseline; }

    double total_k() const
    {
        double k = 0.0;
        for (const auto& p : perturbations)
            k += p.k;
        return k;
    }

    /// mu(t, k) = t + k + baseline.
    double mu() const { return fold_mu() + total_k(); }

    bool has_shape() const
    {
        return std::any_of(perturbations.begin(), perturbations.end(),
                           [](const PerturbationSpec& p) { return p.has_shape(); });
    }

    ModelMap with_t(double new_t) const
    {
        ModelMap m = *this;
        m.t = new_t;
        return m;
    }

    void validate() const
    {
        saddle.validate();
        fold.validate();
        for (const auto& p : perturbations)
            p.validate();
        if (!std::isfinite(t) || !std::isfinite(baseline))
            throw ValidationError("t and baseline must be finite");
    }

    friend bool operator==(const ModelMap&, const ModelMap&) = default;
};

/// Fold followed by the perturbation chain.
inline Vec2 fold_map(const ModelMap& m, Vec2 p)
{
    Vec2 q = fold_step(m.fold, m.fold_mu(), p);
    for (const auto& xi : m.perturbations)
        q = xi.apply(q);
    return q;
}

inline Mat2 fold_map_jacobian(const ModelMap& m, Vec2 p)
{
    Mat2 jac = fold_jacobian(m.fold, p);
    Vec2 q = fold_step(m.fold, m.fold_mu(), p);
    for (const auto& xi : m.perturbations) {
        jac = xi.jacobian(q) * jac;
        q = xi.apply(q);
    }
    return jac;
}

/// One iterate of the piecewise map: a horseshoe branch inside the strips,
/// the fold in the gap between them. Points leaving the unit square escape.
inline Vec2 step(const ModelMap& m, Vec2 p)
{
    const int br = m.saddle.branch_of(p);
    if (br == -2)
        throw DomainError("orbit escaped the model domain");
    if (br >= 0)
        return saddle_step(m.saddle, p, br);
    return fold_map(m, p);
}

/// n saddle iterates along `word`, then the fold. Throws DomainError whose
/// step() is the iterate at which the itinerary broke (n for the fold).
inline Vec2 return_map(const ModelMap& m, const Word& word, Vec2 p)
{
    for (std::size_t j = 0; j < word.size(); ++j) {
        if (m.saddle.branch_of(p) != word[j])
            throw DomainError("itinerary violated at iterate " + std::to_string(j), j);
        p = saddle_step(m.saddle, p, word[j]);
    }
    try {
        return fold_map(m, p);
    } catch (const DomainError& e) {
        throw DomainError(e.what(), word.size());
    }
}

inline Mat2 return_jacobian(const ModelMap& m, const Word& word, Vec2 p)
{
    Mat2 jac = Mat2::identity();
    for (std::size_t j = 0; j < word.size(); ++j) {
        if (m.saddle.branch_of(p) != word[j])
            throw DomainError("itinerary violated at iterate " + std::to_string(j), j);
        jac = saddle_jacobian(m.saddle, p, word[j]) * jac;
        p = saddle_step(m.saddle, p, word[j]);
    }
    const double xs = p.x - kSaddleX;
    const double ys = p.y - m.fold.a;
    if (!(std::abs(xs) <= 1.0 && std::abs(ys) <= m.fold.domain_radius))
        throw DomainError("point is outside the fold domain", word.size());
    return fold_map_jacobian(m, p) * jac;
}

/// Adds xi to the perturbation chain. The support is centred at q = (b, c).
inline ModelMap apply_perturbation(const ModelMap& m, PerturbationSpec xi)
{
    xi.validate();
    if (!xi.center)
        xi.center = Vec2{m.fold.b, m.fold.c};
    ModelMap out = m;
    out.perturbations.push_back(std::move(xi));
    return out;
}

struct TangencyPoint
{
    double x0 = 0.0;    ///< abscissa of the unstable leaf
    double y_star = 0.0; ///< y* at which the image has a horizontal tangent
    Vec2 point;          ///< the tangency point on L(f)
};

/// Point of L(f) on the image of the unstable leaf x = x0: the root of
/// d(v)/d(y*) along the leaf.
inline TangencyPoint tangency_on_leaf(const ModelMap& m, double x0)
{
    auto slope = [&](double ys) {
        const Vec2 p{x0, m.fold.a + ys};
        return (fold_map_jacobian(m, p) * Vec2{0.0, 1.0}).y;
    };
    if (m.fold.remainder.empty() && !m.has_shape()) {
        const Vec2 p{x0, m.fold.a};
        return {x0, 0.0, fold_map(m, p)};
    }
    double lo = -0.999 * m.fold.domain_radius;
    double hi = 0.999 * m.fold.domain_radius;
    double flo = slope(lo);
    const double fhi = slope(hi);
    if ((flo < 0.0) == (fhi < 0.0))
        throw NumericalError("line of tangencies: no sign change of the fold slope on leaf x0 = " +
                             std::to_string(x0) + " (remainder too large)");
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = slope(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double ys = 0.5 * (lo + hi);
    return {x0, ys, fold_map(m, {x0, m.fold.a + ys})};
}

inline std::vector<TangencyPoint> line_of_tangencies(const ModelMap& m, Interval x_range,
                                                     std::size_t samples)
{
    std::vector<TangencyPoint> out;
    out.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double x0 = samples == 1 ? x_range.lo
                                       : x_range.lo + x_range.length() * static_cast<double>(i) /
                                                          static_cast<double>(samples - 1);
        out.push_back(tangency_on_leaf(m, x0));
    }
    return out;
}

/// Ordinate of the parabola vertex over unstable leaf x0.
inline double vertex_height(const ModelMap& m, double x0) { return tangency_on_leaf(m, x0).point.y; }

struct FoldCoefficients
{
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    bool in_regime = true;
    std::string warning;
};

/// Measures alpha, beta, gamma of the (possibly perturbed) fold at the
/// expansion point r by central differences (step 1e-6 for first
/// derivatives, 1e-4 for beta).
inline FoldCoefficients fold_coefficients(const ModelMap& m, double bound = 10.0)
{
    const Vec2 r{kSaddleX, m.fold.a};
    const double h1 = 1e-6;
    const double h2 = 1e-4;
    const Vec2 yp = fold_map(m, {r.x, r.y + h1});
    const Vec2 ym = fold_map(m, {r.x, r.y - h1});
    const Vec2 xp = fold_map(m, {r.x + h1, r.y});
    const Vec2 xm = fold_map(m, {r.x - h1, r.y});
    const Vec2 y2p = fold_map(m, {r.x, r.y + h2});
    const Vec2 y2m = fold_map(m, {r.x, r.y - h2});
    const Vec2 c0 = fold_map(m, r);
    FoldCoefficients out;
    out.alpha = (yp.x - ym.x) / (2.0 * h1);
    out.gamma = (xp.y - xm.y) / (2.0 * h1);
    out.beta = 0.5 * (y2p.y - 2.0 * c0.y + y2m.y) / (h2 * h2);
    for (double v : {out.alpha, out.beta, out.gamma}) {
        if (!(std::abs(v) >= 1.0 / bound && std::abs(v) <= bound)) {
            out.in_regime = false;
            out.warning = "fold coefficient outside [1/K, K] with K = " + std::to_string(bound) +
                          ": the model leaves the quadratic-tangency regime";
        }
    }
    return out;
}

/// Coefficients used by renormalisation charts: exact FoldSpec values when
/// no shape perturbation is active, measured ones otherwise.
inline FoldCoefficients chart_coefficients(const ModelMap& m)
{
    if (!m.has_shape())
        return {m.fold.alpha, m.fold.beta, m.fold.gamma, true, {}};
    return fold_coefficients(m);
}

} // namespace tangencylab

#endif // TANGENCYLAB_MODEL_HPP_
