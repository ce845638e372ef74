#ifndef TANGENCYLAB_CASCADE_HPP_
#define TANGENCYLAB_CASCADE_HPP_

// Nested sink windows: one more simultaneous sink per stage, plus the
// persistence and unfolding-survival experiments built on a finished cascade.

#include "orbits.hpp"
#include "parallel.hpp"
#include "quadratic.hpp"
#include "renorm.hpp"

#include <random>
#include <vector>

namespace tangencylab
{

struct SinkWindow
{
    int index = 1;
    std::size_t n = 0;
    Word word;
    double x0 = 0.0;  ///< unstable leaf X_w of the tangency
    double y_s = 0.0; ///< stable leaf y_w of the tangency
    double t_center = 0.0; ///< parameter of the exact tangency
    double nu_zero = 0.0;
    double nu_center = 0.0; ///< G(0)
    double nu_minus = 0.0;
    double nu_plus = 0.0;
    double t_minus = 0.0;
    double t_plus = 0.0;
    std::size_t period = 0;
    double width_constant = 0.0; ///< C = 1 / (8 (1 + eps) beta sigma_max^(2n))
    /// Measured K with |G(0) - nu_zero| = K lambda_max^n.
    double implicit_constant = 0.0;
    double epsilon = 0.0;
    double rho = 0.5;

    double width() const { return t_plus - t_minus; }
    double half_width() const { return 0.5 * (t_plus - t_minus); }
    Interval t_interval() const { return {t_minus, t_plus}; }

    friend bool operator==(const SinkWindow&, const SinkWindow&) = default;
};

/// Largest spacing of representable ordinates, in chart units, at which a
/// sink can still be located.
inline constexpr double kMaxChartQuantum = 0.05;

/// Height window of width C around G(0) for the tangency of word `word`,
/// narrowed to the image of the rho eigenvalue window, and its parameter
/// interval along the primary family.
inline SinkWindow sink_window(const ModelMap& m, const Word& word, double rho, double epsilon,
                              bool narrow_to_rho = true)
{
    if (!(rho > 0.0 && rho < 1.0))
        throw ValidationError("rho must lie in (0, 1)");
    if (!(epsilon >= 0.0))
        throw ValidationError("epsilon must be non-negative");
    const std::size_t n = word.size();
    const std::size_t n_min = chart_min_n(m);
    if (n < n_min)
        throw ValidationError("n = " + std::to_string(n) +
                              " is below the chart's validity range; use n >= " + std::to_string(n_min));
    const RenormChart ch = make_chart(m, n, word);
    SinkWindow w;
    w.n = n;
    w.word = word;
    w.x0 = ch.x_word;
    w.y_s = ch.y_word;
    w.t_center = m.t - relative_height(m, ch);
    w.nu_zero = baseline_height(ch);
    w.nu_center = implicit_height(ch, 0.0);
    w.implicit_constant = std::abs(w.nu_center - w.nu_zero) /
                          std::pow(m.saddle.max_lambda(), static_cast<double>(n));
    w.epsilon = epsilon;
    w.rho = rho;
    w.width_constant = 1.0 / (8.0 * (1.0 + epsilon) * std::abs(ch.beta) *
                              std::pow(m.saddle.max_sigma(), 2.0 * static_cast<double>(n)));
    w.nu_minus = w.nu_center - 0.5 * w.width_constant;
    w.nu_plus = w.nu_center + 0.5 * w.width_constant;
    if (narrow_to_rho) {
        double g_lo = implicit_height(ch, quad::k_minus(rho));
        double g_hi = implicit_height(ch, quad::k_plus(rho));
        if (g_lo > g_hi)
            std::swap(g_lo, g_hi);
        w.nu_minus = std::max(w.nu_minus, g_lo);
        w.nu_plus = std::min(w.nu_plus, g_hi);
    }
    w.t_minus = w.t_center + (w.nu_minus - ch.c);
    w.t_plus = w.t_center + (w.nu_plus - ch.c);
    w.period = n + static_cast<std::size_t>(m.fold.N);
    const double resolution = 64.0 * std::numeric_limits<double>::epsilon() *
                              std::max(std::abs(w.t_minus), std::abs(w.t_plus));
    // One ulp of the orbit's ordinate, measured in chart units.
    const double y_level = ch.y_word + (ch.a - kSaddleY) / ch.sigma_n;
    const double quantum = std::abs(ch.beta) * ch.sigma_n * ch.sigma_n *
                           (std::nextafter(std::abs(y_level), 2.0) - std::abs(y_level));
    if (quantum > kMaxChartQuantum)
        throw NumericalError("n = " + std::to_string(n) + " puts one ulp of y at " + std::to_string(quantum) +
                             " chart units, beyond double-precision reach");
    if (!(w.t_plus - w.t_minus > resolution))
        throw NumericalError("sink window of width " + std::to_string(w.t_plus - w.t_minus) +
                             " for n = " + std::to_string(n) +
                             " is below the double-precision resolution of t");
    return w;
}

/// Chart-based seed: the fixed point (y*, y*) of the limit map, mapped back.
inline Vec2 sink_seed(const ModelMap& m, const Word& word)
{
    const RenormChart ch = make_chart(m, word.size(), word);
    const double muh = chart_muhat(m, ch);
    const auto q = quad::analyze(std::clamp(muh, -1.9, 0.25));
    const double ys = q.fixed_points.empty() ? 0.5 : q.fixed_points.front();
    const ChartPoint p = from_renorm(ch, {ys, ys, std::clamp(muh, -1.9, 1.9)});
    return {p.x, p.y};
}

/// Newton-certified orbit for `word` at the model's current t.
inline PeriodicOrbit certify_sink(const ModelMap& m, const Word& word)
{
    return find_periodic(m, word, sink_seed(m, word));
}

struct StageVerification
{
    int stage = 0;
    double t = 0.0;
    std::vector<PeriodicOrbit> orbits;
    std::vector<SinkCheck> iteration_checks;
    bool all_sinks = false;
    bool all_below_rho = false;
    bool distinct = false;

    bool ok() const { return all_sinks && all_below_rho && distinct; }

    friend bool operator==(const StageVerification& a, const StageVerification& b)
    {
        auto same_orbit = [](const PeriodicOrbit& p, const PeriodicOrbit& q) {
            return p.point == q.point && p.word == q.word && p.period == q.period &&
                   p.multipliers == q.multipliers && p.cls == q.cls && p.residual == q.residual &&
                   p.at_precision_floor == q.at_precision_floor;
        };
        if (a.stage != b.stage || a.t != b.t || a.orbits.size() != b.orbits.size() ||
            a.all_sinks != b.all_sinks || a.all_below_rho != b.all_below_rho || a.distinct != b.distinct)
            return false;
        for (std::size_t i = 0; i < a.orbits.size(); ++i)
            if (!same_orbit(a.orbits[i], b.orbits[i]))
                return false;
        return true;
    }
};

struct CascadeResult
{
    std::vector<SinkWindow> windows;
    double t_infinity = 0.0;
    std::vector<StageVerification> verification;
    double rho = 0.5;
    double epsilon = 0.1;

    friend bool operator==(const CascadeResult&, const CascadeResult&) = default;
};

/// Raised when a stage cannot be built; carries the stages completed so far.
class CascadeError : public NumericalError
{
public:
    CascadeError(const std::string& what, int stage, CascadeResult partial)
        : NumericalError(what), stage_(stage), partial_(std::move(partial))
    {
    }
    int stage() const noexcept { return stage_; }
    const CascadeResult& partial() const noexcept { return partial_; }

private:
    int stage_;
    CascadeResult partial_;
};

/// Certifies every window's sink simultaneously at parameter t.
inline StageVerification verify_stage(const ModelMap& m, const std::vector<SinkWindow>& windows, double t,
                                      double rho, bool iterate = true)
{
    StageVerification v;
    v.stage = static_cast<int>(windows.size());
    v.t = t;
    const ModelMap mt = m.with_t(t);
    v.all_sinks = true;
    v.all_below_rho = true;
    for (const auto& w : windows) {
        PeriodicOrbit o;
        try {
            o = certify_sink(mt, w.word);
        } catch (const std::runtime_error&) {
            o.word = w.word;
            o.period = w.period;
            o.cls = OrbitClass::Nonhyperbolic;
            o.multipliers = {std::numeric_limits<double>::infinity(), 0.0};
        }
        v.all_sinks = v.all_sinks && o.is_sink();
        v.all_below_rho = v.all_below_rho && o.multipliers[0] < rho;
        if (iterate && o.is_sink()) {
            const auto chk = verify_sink_by_iteration(mt, o);
            v.all_sinks = v.all_sinks && chk.contracted;
            v.iteration_checks.push_back(chk);
        }
        v.orbits.push_back(o);
    }
    v.distinct = true;
    for (std::size_t i = 0; i < v.orbits.size(); ++i)
        for (std::size_t j = i + 1; j < v.orbits.size(); ++j) {
            const bool same_point = max_norm(v.orbits[i].point - v.orbits[j].point) < 1e-9;
            if (same_point || v.orbits[i].period == v.orbits[j].period)
                v.distinct = false;
        }
    return v;
}

namespace detail
{
/// Words of length n whose tangency parameter t_w lies in `target`, in
/// ascending order of t_w. For affine rates t_w is additive over the
/// symbols, so the two halves of the word are enumerated separately and
/// matched by binary search.
inline std::vector<Word> words_with_tangency_in(const ModelMap& m, std::size_t n, Interval target)
{
    const auto& s = m.saddle;
    const double g = m.fold.gamma;
    const double offset = m.fold.c + m.baseline + m.total_k();
    std::vector<double> coef(n);
    for (std::size_t j = 0; j < n; ++j)
        coef[j] = (s.sigma - 1.0) * std::pow(s.sigma, -static_cast<double>(j + 1)) -
                  g * (1.0 - s.lambda) * std::pow(s.lambda, static_cast<double>(n - 1 - j));
    const std::size_t h = n / 2;
    auto enumerate = [&](std::size_t from, std::size_t to) {
        std::vector<std::pair<double, std::uint64_t>> sums;
        const std::size_t len = to - from;
        sums.reserve(std::size_t{1} << len);
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << len); ++mask) {
            double v = 0.0;
            for (std::size_t b = 0; b < len; ++b)
                if (mask >> b & 1U)
                    v += coef[from + b];
            sums.push_back({v, mask});
        }
        std::sort(sums.begin(), sums.end());
        return sums;
    };
    const auto left = enumerate(0, h);
    const auto right = enumerate(h, n);
    // Slack for rounding in the additive form; candidates are re-verified.
    const double slack = 1e-12 * std::max(1.0, target.length());
    std::vector<std::pair<double, Word>> hits;
    for (const auto& [lv, lmask] : left) {
        const double lo = target.lo + offset - lv - slack;
        const double hi = target.hi + offset - lv + slack;
        auto it = std::lower_bound(right.begin(), right.end(), std::pair<double, std::uint64_t>{lo, 0});
        for (; it != right.end() && it->first <= hi; ++it) {
            Word w(n, 0);
            for (std::size_t b = 0; b < h; ++b)
                w[b] = static_cast<std::uint8_t>(lmask >> b & 1U);
            for (std::size_t b = 0; b < n - h; ++b)
                w[h + b] = static_cast<std::uint8_t>(it->second >> b & 1U);
            hits.push_back({lv + it->first - offset, std::move(w)});
        }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<Word> out;
    out.reserve(hits.size());
    for (auto& hw : hits)
        out.push_back(std::move(hw.second));
    return out;
}
} // namespace detail

struct CascadeOptions
{
    double epsilon = 0.1;
    std::size_t max_n = 40;
    bool iterate_check = true;
};

/// Builds `sinks` nested windows. Stage 1 is the primary tangency at t = 0
/// with word 0^n; each later stage takes the smallest n >= its min_n entry
/// (periods not multiples of earlier ones) and the leftmost tangency whose
/// whole window sits in the middle half of the previous interval. Every
/// stage is certified at its interval midpoint.
inline CascadeResult run_cascade(const ModelMap& m, int sinks, double rho, const std::vector<std::size_t>& min_n,
                                 const CascadeOptions& opt = {})
{
    if (sinks < 1)
        throw ValidationError("number of sinks must be at least 1");
    if (!m.saddle.is_affine())
        throw ValidationError("the cascade word search needs affine horseshoe rates");
    {
        const double tau_s = (1.0 / m.saddle.sigma) / (1.0 - 2.0 / m.saddle.sigma);
        const double tau_u = m.saddle.lambda / (1.0 - 2.0 * m.saddle.lambda);
        if (!(tau_s * tau_u > 1.0))
            throw PreconditionError("large thickness condition fails for this horseshoe");
    }
    CascadeResult res;
    res.rho = rho;
    res.epsilon = opt.epsilon;
    const ModelMap base = m.with_t(0.0);
    auto required_n = [&](int stage) {
        return stage - 1 < static_cast<int>(min_n.size()) ? min_n[static_cast<std::size_t>(stage - 1)]
                                                          : std::size_t{0};
    };

    for (int stage = 1; stage <= sinks; ++stage) {
        SinkWindow chosen;
        bool found = false;
        if (stage == 1) {
            const std::size_t n = std::max<std::size_t>(required_n(1), 1);
            try {
                chosen = sink_window(base, zero_word(n), rho, opt.epsilon);
            } catch (const NumericalError& e) {
                throw CascadeError(std::string("stage 1: ") + e.what(), 1, res);
            }
            found = true;
        } else {
            const SinkWindow& parent = res.windows.back();
            const double W = parent.width();
            const Interval middle{parent.t_minus + 0.25 * W, parent.t_plus - 0.25 * W};
            const std::size_t n_start = std::max(required_n(stage), chart_min_n(m));
            for (std::size_t n = n_start; n <= opt.max_n && !found; ++n) {
                const std::size_t period = n + static_cast<std::size_t>(m.fold.N);
                bool multiple = false;
                for (const auto& w : res.windows)
                    if (period % w.period == 0)
                        multiple = true;
                if (multiple)
                    continue;
                // Offsets of this n's window relative to its tangency are
                // word independent for affine rates.
                SinkWindow probe;
                try {
                    probe = sink_window(base, zero_word(n), rho, opt.epsilon);
                } catch (const NumericalError& e) {
                    throw CascadeError("stage " + std::to_string(stage) + ": no admissible window up to n = " +
                                           std::to_string(n - 1) + "; " + e.what(),
                                       stage, res);
                }
                const double off_lo = probe.t_minus - probe.t_center;
                const double off_hi = probe.t_plus - probe.t_center;
                const Interval target{middle.lo - off_lo, middle.hi - off_hi};
                if (!(target.lo < target.hi))
                    continue;
                for (const auto& w : detail::words_with_tangency_in(base, n, target)) {
                    SinkWindow cand;
                    try {
                        cand = sink_window(base, w, rho, opt.epsilon);
                    } catch (const NumericalError& e) {
                        throw CascadeError("stage " + std::to_string(stage) + ": " + e.what(), stage, res);
                    }
                    if (middle.contains_open(cand.t_minus) && middle.contains_open(cand.t_plus)) {
                        chosen = cand;
                        found = true;
                        break;
                    }
                }
            }
            if (!found)
                throw CascadeError("stage " + std::to_string(stage) + ": no tangency window in the middle half for n <= " +
                                       std::to_string(opt.max_n),
                                   stage, res);
        }
        chosen.index = stage;
        res.windows.push_back(chosen);
        const double mid = 0.5 * (chosen.t_minus + chosen.t_plus);
        res.verification.push_back(verify_stage(m, res.windows, mid, rho, opt.iterate_check));
        res.t_infinity = mid;
    }
    return res;
}

struct PersistenceReport
{
    double delta = 0.0;
    double epsilon = 0.1;
    double beta0 = 1.0;
    std::vector<double> beta_measured;
    /// continued[trial][sink]
    std::vector<std::vector<bool>> continued;
    std::vector<std::vector<double>> multipliers;

    bool all_continued() const
    {
        for (const auto& row : continued)
            for (bool b : row)
                if (!b)
                    return false;
        return true;
    }
    bool beta_within_bound() const
    {
        for (double b : beta_measured)
            if (!(b > (1.0 - epsilon) * beta0 && b < (1.0 + epsilon) * beta0))
                return false;
        return true;
    }
};

/// Random k = 0 shape perturbation of size delta (seeded).
inline PerturbationSpec random_shape(std::mt19937_64& rng, double delta)
{
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    PerturbationSpec p;
    p.k = 0.0;
    p.delta = delta;
    for (int pu = 0; pu <= 2; ++pu)
        for (int pv = 0; pv + pu <= 2; ++pv)
            p.horizontal.push_back({coef(rng), pu, pv});
    for (int pu = 2; pu <= 3; ++pu)
        for (int pv = 0; pv + pu <= 3; ++pv)
            p.vertical.push_back({coef(rng), pu, pv});
    return p;
}

/// Re-certifies every cascade sink at t_infinity under `trials` random
/// k = 0 perturbations of size delta, seeded from the unperturbed orbits.
inline PersistenceReport persistence_experiment(const CascadeResult& result, const ModelMap& m, double delta,
                                                int trials, std::uint64_t seed, double epsilon = 0.1)
{
    PersistenceReport rep;
    rep.delta = delta;
    rep.epsilon = epsilon;
    rep.beta0 = fold_coefficients(m).beta;
    const ModelMap mt = m.with_t(result.t_infinity);
    std::vector<PeriodicOrbit> reference;
    for (const auto& w : result.windows)
        reference.push_back(certify_sink(mt, w.word));

    std::mt19937_64 rng(seed);
    std::vector<PerturbationSpec> shapes;
    for (int i = 0; i < trials; ++i)
        shapes.push_back(random_shape(rng, delta));

    struct Trial
    {
        double beta = 0.0;
        std::vector<bool> ok;
        std::vector<double> mult;
    };
    const auto out = parallel_map(shapes.size(), [&](std::size_t i) {
        Trial tr;
        const ModelMap pm = apply_perturbation(mt, shapes[i]);
        tr.beta = fold_coefficients(pm).beta;
        for (const auto& ref : reference) {
            try {
                const auto o = find_periodic(pm, ref.word, ref.point);
                tr.ok.push_back(o.is_sink());
                tr.mult.push_back(o.multipliers[0]);
            } catch (const std::runtime_error&) {
                tr.ok.push_back(false);
                tr.mult.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        return tr;
    });
    for (const auto& tr : out) {
        rep.beta_measured.push_back(tr.beta);
        rep.continued.push_back(tr.ok);
        rep.multipliers.push_back(tr.mult);
    }
    return rep;
}

struct SurvivalRow
{
    double offset = 0.0;
    std::vector<bool> survived;
    int survivors = 0;
    int predicted = 0;
};

struct SurvivalReport
{
    double v = 1.0;
    std::vector<SurvivalRow> rows;
};

/// Continues every cascade sink from t_infinity to t_infinity + v * offset
/// along the primary family. The half-width rule predicts that sink i
/// survives iff |offset| * v is below its window's half-width.
inline SurvivalReport survival_under_unfolding(const CascadeResult& result, const ModelMap& m, double v,
                                               const std::vector<double>& offsets)
{
    if (!(v > 0.0))
        throw ValidationError("unfolding velocity must be positive");
    SurvivalReport rep;
    rep.v = v;
    const Family fam = primary_family(m);
    const ModelMap mt = m.with_t(result.t_infinity);
    std::vector<PeriodicOrbit> start;
    for (const auto& w : result.windows)
        start.push_back(certify_sink(mt, w.word));

    const std::size_t S = start.size();
    const auto flags = parallel_map(offsets.size() * S, [&](std::size_t job) {
        const double tau = offsets[job / S];
        const auto& o = start[job % S];
        const double target = result.t_infinity + v * tau;
        if (tau == 0.0)
            return 1;
        ContinuationOptions co;
        const auto path = continue_orbit(fam, o, result.t_infinity, target, co);
        return path.end_reason == EndReason::RangeExhausted && path.samples.back().orbit.is_sink() ? 1 : 0;
    });
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        SurvivalRow row;
        row.offset = offsets[k];
        for (std::size_t i = 0; i < S; ++i) {
            const bool ok = flags[k * S + i] != 0;
            row.survived.push_back(ok);
            row.survivors += ok ? 1 : 0;
            row.predicted += std::abs(offsets[k]) * v < result.windows[i].half_width() ? 1 : 0;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace tangencylab

#endif // TANGENCYLAB_CASCADE_HPP_
