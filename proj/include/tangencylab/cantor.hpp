#ifndef TANGENCYLAB_CANTOR_HPP_
#define TANGENCYLAB_CANTOR_HPP_

// Finite-stage Cantor sets on the line of tangencies: thickness, the gap
// lemma trichotomy and the dynamically defined sets of the model.

#include "model.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace tangencylab
{

/// Self-similar description: each bridge splits into a left piece of
/// relative length r0 and a right piece of relative length r1.
struct CantorGenerator
{
    double r0 = 1.0 / 3.0;
    double r1 = 1.0 / 3.0;

    double gap_fraction() const { return 1.0 - r0 - r1; }
    double thickness() const { return std::min(r0, r1) / gap_fraction(); }
    friend bool operator==(const CantorGenerator&, const CantorGenerator&) = default;
};

struct CantorApprox
{
    Interval base;
    /// Disjoint open gaps strictly inside base, ascending.
    std::vector<Interval> gaps;
    int depth = 0;
    std::optional<CantorGenerator> generator;

    CantorApprox translated(double d) const
    {
        CantorApprox k = *this;
        k.base = {base.lo + d, base.hi + d};
        for (auto& g : k.gaps)
            g = {g.lo + d, g.hi + d};
        return k;
    }

    void validate() const
    {
        if (!(base.lo < base.hi))
            throw ValidationError("Cantor base must be a nondegenerate interval");
        double prev = base.lo;
        for (const auto& g : gaps) {
            if (!(g.lo < g.hi) || !(g.lo > base.lo) || !(g.hi < base.hi) || g.lo < prev)
                throw ValidationError("Cantor gaps must be disjoint, ascending and inside the base");
            prev = g.hi;
        }
    }

    friend bool operator==(const CantorApprox&, const CantorApprox&) = default;
};

namespace detail
{
inline void expand_generator(const CantorGenerator& g, double lo, double hi, int levels,
                             std::vector<Interval>& out)
{
    if (levels <= 0)
        return;
    const double len = hi - lo;
    const double gl = lo + g.r0 * len;
    const double gh = hi - g.r1 * len;
    expand_generator(g, lo, gl, levels - 1, out);
    out.push_back({gl, gh});
    expand_generator(g, gh, hi, levels - 1, out);
}

inline std::vector<Interval> gaps_between(std::vector<Interval> pieces)
{
    std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> gaps;
    for (std::size_t i = 1; i < pieces.size(); ++i)
        if (pieces[i].lo > pieces[i - 1].hi)
            gaps.push_back({pieces[i - 1].hi, pieces[i].lo});
    return gaps;
}
} // namespace detail

inline CantorApprox self_similar_cantor(CantorGenerator g, int depth, Interval base = {0.0, 1.0})
{
    if (!(g.r0 > 0.0 && g.r1 > 0.0 && g.r0 + g.r1 < 1.0))
        throw ValidationError("Cantor ratios must be positive with r0 + r1 < 1");
    if (depth < 0)
        throw ValidationError("Cantor depth must be non-negative");
    CantorApprox k;
    k.base = base;
    k.depth = depth;
    k.generator = g;
    detail::expand_generator(g, base.lo, base.hi, depth, k.gaps);
    return k;
}

/// Middle-gap construction: two copies of ratio r per stage.
inline CantorApprox affine_cantor(double r, int depth, Interval base = {0.0, 1.0})
{
    if (!(r > 0.0 && r < 0.5))
        throw ValidationError("affine Cantor ratio must lie in (0, 1/2)");
    return self_similar_cantor({r, r}, depth, base);
}

struct ThicknessReport
{
    double tau = 0.0;
    /// The gap boundary point u, its bridge and gap at the infimum.
    double u = 0.0;
    Interval bridge;
    Interval gap;
};

/// Thickness by the ordered-gap sweep: gaps are processed by decreasing
/// length (equal lengths together, leftmost first); the bridge at a boundary
/// point reaches the nearest already processed gap or the base end.
inline ThicknessReport thickness(const CantorApprox& k)
{
    if (k.gaps.empty())
        throw PreconditionError("thickness needs at least one gap");
    std::vector<std::size_t> order(k.gaps.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return k.gaps[i].length() > k.gaps[j].length();
    });

    std::map<double, Interval> processed; // keyed by gap.lo
    ThicknessReport best;
    best.tau = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        const double len = k.gaps[order[i]].length();
        std::size_t j = i;
        while (j < order.size() &&
               std::abs(k.gaps[order[j]].length() - len) <= 1e-12 * len)
            ++j;
        std::vector<std::size_t> group(order.begin() + static_cast<std::ptrdiff_t>(i),
                                       order.begin() + static_cast<std::ptrdiff_t>(j));
        std::sort(group.begin(), group.end(), [&](std::size_t p, std::size_t q) {
            return k.gaps[p].lo < k.gaps[q].lo;
        });
        for (auto g : group)
            processed.emplace(k.gaps[g].lo, k.gaps[g]);
        for (auto g : group) {
            const Interval gap = k.gaps[g];
            auto it = processed.find(gap.lo);
            const double left_end = it == processed.begin() ? k.base.lo : std::prev(it)->second.hi;
            const auto nx = std::next(it);
            const double right_end = nx == processed.end() ? k.base.hi : nx->second.lo;
            const double tl = (gap.lo - left_end) / gap.length();
            const double tr = (right_end - gap.hi) / gap.length();
            if (tl < best.tau)
                best = {tl, gap.lo, {left_end, gap.lo}, gap};
            if (tr < best.tau)
                best = {tr, gap.hi, {gap.hi, right_end}, gap};
        }
        i = j;
    }
    return best;
}

/// Largest thickness product check used by the gap lemma.
inline bool large_thickness(const CantorApprox& a, const CantorApprox& b)
{
    return thickness(a).tau * thickness(b).tau > 1.0;
}

/// K^s: ordinates of stable leaves through the horseshoe, on L(f). The
/// stage-d cylinders are the images of [0, 1] under d inverse branches.
inline CantorApprox stable_cantor_set(const ModelMap& m, int depth)
{
    const auto& s = m.saddle;
    std::vector<Interval> pieces{{0.0, 1.0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<Interval> next;
        next.reserve(2 * pieces.size());
        for (int br = 0; br < 2; ++br) {
            const double dat = branch_datum(br);
            for (const auto& p : pieces) {
                auto pre = [&](double y) {
                    if (s.nonlinearity.sigma_amp == 0.0)
                        return dat + (y - dat) / s.sigma;
                    double lo = br == 0 ? 0.0 : s.strip1_bottom();
                    double hi = br == 0 ? s.strip0_top() : 1.0;
                    for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
                        const double mid = 0.5 * (lo + hi);
                        if (dat + s.sigma_at(mid) * (mid - dat) < y)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    return 0.5 * (lo + hi);
                };
                next.push_back({pre(p.lo), pre(p.hi)});
            }
        }
        pieces = std::move(next);
    }
    CantorApprox k;
    k.base = {0.0, 1.0};
    k.depth = depth;
    k.gaps = detail::gaps_between(std::move(pieces));
    if (s.nonlinearity.sigma_amp == 0.0)
        k.generator = CantorGenerator{1.0 / s.sigma, 1.0 / s.sigma};
    return k;
}

/// Abscissas of the unstable leaves through the horseshoe (forward images of
/// [0, 1] in x), before the fold.
inline CantorApprox unstable_leaf_cantor(const SaddleSpec& s, int depth)
{
    std::vector<Interval> pieces{{0.0, 1.0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<Interval> next;
        next.reserve(2 * pieces.size());
        for (int br = 0; br < 2; ++br) {
            const double dat = branch_datum(br);
            for (const auto& p : pieces) {
                const double a = dat + s.lambda_at(p.lo) * (p.lo - dat);
                const double b = dat + s.lambda_at(p.hi) * (p.hi - dat);
                next.push_back({std::min(a, b), std::max(a, b)});
            }
        }
        pieces = std::move(next);
    }
    CantorApprox k;
    k.base = {0.0, 1.0};
    k.depth = depth;
    k.gaps = detail::gaps_between(std::move(pieces));
    if (s.nonlinearity.lambda_amp == 0.0)
        k.generator = CantorGenerator{s.lambda, s.lambda};
    return k;
}

/// K^u: vertex ordinates over the unstable leaves, i.e. the image of the
/// leaf Cantor set under x0 -> vertex_height(x0).
inline CantorApprox unstable_cantor_set(const ModelMap& m, int depth)
{
    const CantorApprox kx = unstable_leaf_cantor(m.saddle, depth);
    auto h = [&](double x0) { return vertex_height(m, x0); };
    const double h0 = h(kx.base.lo), h1 = h(kx.base.hi);
    const bool increasing = h1 >= h0;
    CantorApprox k;
    k.base = {std::min(h0, h1), std::max(h0, h1)};
    k.depth = depth;
    for (const auto& g : kx.gaps) {
        const double a = h(g.lo), b = h(g.hi);
        k.gaps.push_back({std::min(a, b), std::max(a, b)});
    }
    if (!increasing)
        std::reverse(k.gaps.begin(), k.gaps.end());
    if (kx.generator && m.fold.remainder.empty() && !m.has_shape())
        k.generator = kx.generator;
    return k;
}

enum class Trichotomy
{
    FirstInGapOfSecond,
    SecondInGapOfFirst,
    Intersect,
    Undecided,
};

inline const char* to_string(Trichotomy t)
{
    switch (t) {
    case Trichotomy::FirstInGapOfSecond:
        return "first-in-gap-of-second";
    case Trichotomy::SecondInGapOfFirst:
        return "second-in-gap-of-first";
    case Trichotomy::Intersect:
        return "intersect";
    case Trichotomy::Undecided:
        return "undecided";
    }
    return "undecided";
}

struct TrichotomyResult
{
    Trichotomy verdict = Trichotomy::Undecided;
    /// Depth reached by the certificate (both bridges at this stage).
    int depth = 0;
    /// The containing gap for the containment verdicts, or the final pair's
    /// overlap for intersection.
    Interval witness;
};

namespace detail
{
struct Bridge
{
    Interval span;
    int level = 0;
};

/// The two sub-bridges of a bridge, or nothing for a leaf of a finite set.
inline std::optional<std::pair<Bridge, Bridge>> split(const CantorApprox& k, const Bridge& br)
{
    const Interval s = br.span;
    if (k.generator) {
        const double len = s.length();
        const double gl = s.lo + k.generator->r0 * len;
        const double gh = s.hi - k.generator->r1 * len;
        return std::pair<Bridge, Bridge>{{{s.lo, gl}, br.level + 1}, {{gh, s.hi}, br.level + 1}};
    }
    auto first = std::lower_bound(k.gaps.begin(), k.gaps.end(), s.lo,
                                  [](const Interval& g, double v) { return g.lo < v; });
    const Interval* best = nullptr;
    for (auto it = first; it != k.gaps.end() && it->hi <= s.hi; ++it)
        if (!best || it->length() > best->length())
                best = &*it;
    if (!best)
        return std::nullopt;
    return std::pair<Bridge, Bridge>{{{s.lo, best->lo}, br.level + 1},
                                     {{best->hi, s.hi}, br.level + 1}};
}

inline bool closed_overlap(Interval a, Interval b) { return a.lo <= b.hi && b.lo <= a.hi; }

inline bool inside_open(Interval inner, Interval gap) { return gap.lo < inner.lo && inner.hi < gap.hi; }

inline std::optional<Interval> containing_gap(const CantorApprox& outer, Interval inner)
{
    const double inf = std::numeric_limits<double>::infinity();
    if (inside_open(inner, {-inf, outer.base.lo}))
        return Interval{-inf, outer.base.lo};
    if (inside_open(inner, {outer.base.hi, inf}))
        return Interval{outer.base.hi, inf};
    auto it = std::upper_bound(outer.gaps.begin(), outer.gaps.end(), inner.lo,
                               [](double v, const Interval& g) { return v < g.lo; });
    if (it != outer.gaps.begin()) {
        --it;
        if (inside_open(inner, *it))
            return *it;
    }
    return std::nullopt;
}
} // namespace detail

/// Gap lemma trichotomy for sets with thickness product above one.
inline TrichotomyResult gap_trichotomy(const CantorApprox& k1, const CantorApprox& k2, int depth = 12,
                                       std::size_t budget = 2000000)
{
    const double t1 = thickness(k1).tau;
    const double t2 = thickness(k2).tau;
    if (!(t1 * t2 > 1.0))
        throw PreconditionError("gap lemma needs thickness product > 1 (got " + std::to_string(t1 * t2) +
                                ")");
    TrichotomyResult res;
    if (auto g = detail::containing_gap(k2, k1.base)) {
        res.verdict = Trichotomy::FirstInGapOfSecond;
        res.witness = *g;
        return res;
    }
    if (auto g = detail::containing_gap(k1, k2.base)) {
        res.verdict = Trichotomy::SecondInGapOfFirst;
        res.witness = *g;
        return res;
    }

    // Depth-first search for a nested chain of overlapping bridge pairs,
    // refining the longer bridge of each pair.
    using detail::Bridge;
    std::vector<std::pair<Bridge, Bridge>> stack{{{k1.base, 0}, {k2.base, 0}}};
    std::size_t visits = 0;
    int deepest = 0;
    while (!stack.empty() && visits < budget) {
        auto [a, b] = stack.back();
        stack.pop_back();
        ++visits;
        deepest = std::max(deepest, std::min(a.level, b.level));
        const auto sa = a.level < depth ? detail::split(k1, a) : std::nullopt;
        const auto sb = b.level < depth ? detail::split(k2, b) : std::nullopt;
        if (!sa && !sb) {
            res.verdict = Trichotomy::Intersect;
            res.depth = std::min(a.level, b.level);
            res.witness = {std::max(a.span.lo, b.span.lo), std::min(a.span.hi, b.span.hi)};
            return res;
        }
        const bool refine_a = sa && (!sb || a.span.length() >= b.span.length());
        if (refine_a) {
            for (const Bridge& c : {sa->second, sa->first})
                if (detail::closed_overlap(c.span, b.span))
                    stack.push_back({c, b});
        } else {
            for (const Bridge& c : {sb->second, sb->first})
                if (detail::closed_overlap(a.span, c.span))
                    stack.push_back({a, c});
        }
    }
    res.depth = deepest;
    return res;
}

struct TangencyParameter
{
    double t = 0.0;
    double x0 = 0.0;  ///< unstable leaf abscissa (gap boundary of the leaf set)
    double y_s = 0.0; ///< stable leaf ordinate (gap boundary of K^s)
    int depth = 0;
};

namespace detail
{
inline std::vector<double> boundary_points(const CantorApprox& k)
{
    std::vector<double> pts{k.base.lo, k.base.hi};
    for (const auto& g : k.gaps) {
        pts.push_back(g.lo);
        pts.push_back(g.hi);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}
} // namespace detail

/// Parameters t in `range` at which a gap-boundary point of K^u(t) meets a
/// gap-boundary point of K^s, by iterative deepening up to `max_depth`.
/// Ascending; at most `count` values (the first ones at the shallowest depth
/// that yields that many).
inline std::vector<TangencyParameter> tangency_parameters(const ModelMap& m, Interval range,
                                                          int max_depth, std::size_t count)
{
    const ModelMap m0 = m.with_t(0.0);
    std::vector<TangencyParameter> out;
    for (int d = 1; d <= max_depth; ++d) {
        const auto ys = detail::boundary_points(stable_cantor_set(m, d));
        const auto xs = detail::boundary_points(unstable_leaf_cantor(m.saddle, d));
        out.clear();
        for (double x0 : xs) {
            const double h0 = vertex_height(m0, x0);
            auto lo = std::lower_bound(ys.begin(), ys.end(), range.lo + h0);
            for (auto it = lo; it != ys.end() && *it <= range.hi + h0; ++it) {
                const double t = *it - h0;
                if (range.contains(t))
                    out.push_back({t, x0, *it, d});
            }
        }
        std::sort(out.begin(), out.end(),
                  [](const TangencyParameter& p, const TangencyParameter& q) { return p.t < q.t; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const TangencyParameter& p, const TangencyParameter& q) {
                                  return p.t == q.t;
                              }),
                  out.end());
        if (out.size() >= count)
            break;
    }
    if (out.size() > count)
        out.resize(count);
    return out;
}

} // namespace tangencylab

#endif // TANGENCYLAB_CANTOR_HPP_
