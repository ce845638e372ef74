// tangencylab: command-line front end.
//
// Exit status: 0 success, 1 invalid input, 2 numerical failure, 64 unknown
// or missing subcommand.

#include "tangencylab/tangencylab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace tl = tangencylab;
using tl::json;

namespace
{

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"renorm-check", "renormalisation convergence and flatness per n"},
    {"quad-scan", "fixed points and multipliers of y -> y^2 + mu"},
    {"thickness", "thickness of a Cantor set"},
    {"gap-lemma", "gap lemma trichotomy of two Cantor sets"},
    {"continuation", "continue a periodic orbit in t"},
    {"sink-cascade", "nested sink windows with simultaneous sinks"},
    {"unfold-survival", "sink survival when moving off t_infinity"},
    {"persist-check", "sink persistence under random k = 0 perturbations"},
};

std::string usage()
{
    std::ostringstream out;
    out << "usage: tangencylab <command> [options]\n\ncommands:\n";
    for (const auto& [name, help] : kCommands) {
        out << "  " << name;
        for (std::size_t i = name.size(); i < 18; ++i)
            out << ' ';
        out << help << '\n';
    }
    out << "\nRun 'tangencylab <command> --help' for the options of a command.\n";
    return out.str();
}

/// Writes text to a file, or to stdout when the path is empty.
void deliver(const std::string& path, const std::string& text)
{
    if (path.empty())
        std::cout << text;
    else
        tl::write_text(path, text);
}

std::vector<std::size_t> parse_list(const std::string& s)
{
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v < 0)
                throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw tl::ValidationError("bad integer list entry '" + item + "'");
        }
    }
    return out;
}

struct Common
{
    std::string model_path;
    std::uint64_t seed = 0;
    std::string out;
};

tl::ModelMap require_model(const Common& c)
{
    if (c.model_path.empty())
        throw tl::ValidationError("--model <path> is required");
    return tl::load_model(c.model_path);
}

json config_of(const std::string& command, const json& params, const std::optional<tl::ModelMap>& m)
{
    json cfg = {{"command", command}, {"params", params}};
    if (m)
        cfg["model"] = *m;
    return cfg;
}

// ---- commands -------------------------------------------------------------

int cmd_renorm_check(const Common& c, std::size_t n_min, std::size_t n_max, int grid)
{
    const auto m = require_model(c);
    if (n_min > n_max)
        throw tl::ValidationError("--n-min must not exceed --n-max");
    if (grid < 3)
        throw tl::ValidationError("--grid must be at least 3");
    const json params = {{"n_min", n_min}, {"n_max", n_max}, {"grid", grid}};
    const auto hash = tl::config_hash(config_of("renorm-check", params, m));
    std::vector<std::size_t> ns;
    for (std::size_t n = n_min; n <= n_max; ++n)
        ns.push_back(n);
    const auto diags = tl::parallel_map(ns.size(), [&](std::size_t i) { return tl::renorm_diagnostics(m, ns[i], grid); });
    std::vector<std::vector<tl::Cell>> rows;
    for (const auto& d : diags)
        rows.push_back({static_cast<long long>(d.n), d.c0_deviation, d.c1_deviation, d.muhat_dx, d.muhat_dy});
    deliver(c.out, tl::csv_text({"n", "c0_dev", "c1_dev", "muhat_dx", "muhat_dy"}, rows, hash, c.seed));
    const auto& last = diags.back();
    std::cerr << "renorm-check: n=" << n_min << ".." << n_max << " c1_dev(n_max)=" << tl::format_double(last.c1_deviation)
              << '\n';
    return 0;
}

int cmd_quad_scan(const Common& c, double mu_min, double mu_max, int steps)
{
    if (steps < 1)
        throw tl::ValidationError("--steps must be at least 1");
    if (!(mu_min <= mu_max))
        throw tl::ValidationError("--mu-min must not exceed --mu-max");
    const json params = {{"mu_min", mu_min}, {"mu_max", mu_max}, {"steps", steps}};
    const auto hash = tl::config_hash(config_of("quad-scan", params, std::nullopt));
    std::vector<std::vector<tl::Cell>> rows;
    int sinks = 0;
    for (int i = 0; i <= steps; ++i) {
        const double mu = mu_min + (mu_max - mu_min) * i / steps;
        const auto q = tl::quad::analyze(mu);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double ys = q.fixed_points.empty() ? nan : q.fixed_points.front();
        const double mult = q.sink_multiplier.value_or(nan);
        sinks += q.is_sink() ? 1 : 0;
        rows.push_back({mu, ys, mult, static_cast<long long>(q.is_sink() ? 1 : 0)});
    }
    deliver(c.out, tl::csv_text({"mu_hat", "y_star", "multiplier", "is_sink"}, rows, hash, c.seed));
    std::cerr << "quad-scan: " << rows.size() << " rows, " << sinks << " with a sink\n";
    return 0;
}

tl::CantorApprox load_set(const std::string& path, std::optional<double> generator, int depth, double shift)
{
    tl::CantorApprox k;
    if (generator) {
        k = tl::affine_cantor(*generator, depth);
    } else if (!path.empty()) {
        try {
            k = tl::read_json_file(path).get<tl::CantorApprox>();
        } catch (const json::exception& e) {
            throw tl::ValidationError(path + ": " + e.what());
        }
    } else {
        throw tl::ValidationError("give a set file or a generator ratio");
    }
    return shift != 0.0 ? k.translated(shift) : k;
}

int cmd_thickness(const Common& c, const std::string& set, std::optional<double> generator, int depth)
{
    const auto k = load_set(set, generator, depth, 0.0);
    const auto rep = tl::thickness(k);
    const json params = {{"set", set}, {"generator", generator ? json(*generator) : json()}, {"depth", depth}};
    const auto hash = tl::config_hash(config_of("thickness", params, std::nullopt));
    json out = {{"tau", rep.tau}, {"u", rep.u}, {"bridge", rep.bridge}, {"gap", rep.gap}, {"gaps", k.gaps.size()}};
    if (k.generator)
        out["generator_tau"] = k.generator->thickness();
    json doc = out;
    doc["config_hash"] = hash;
    doc["seed"] = c.seed;
    deliver(c.out, doc.dump(2) + "\n");
    std::cerr << "thickness: tau=" << tl::format_double(rep.tau) << '\n';
    return 0;
}

int cmd_gap_lemma(const Common& c, const std::string& s1, const std::string& s2, std::optional<double> g1,
                  std::optional<double> g2, double shift, int depth)
{
    const auto k1 = load_set(s1, g1, depth, 0.0);
    const auto k2 = load_set(s2, g2, depth, shift);
    const auto res = tl::gap_trichotomy(k1, k2, depth);
    const json params = {{"set1", s1},  {"set2", s2},       {"generator1", g1 ? json(*g1) : json()},
                         {"generator2", g2 ? json(*g2) : json()}, {"shift", shift}, {"depth", depth}};
    const auto hash = tl::config_hash(config_of("gap-lemma", params, std::nullopt));
    json doc = {{"verdict", tl::to_string(res.verdict)},
                {"depth", res.depth},
                {"witness", res.witness},
                {"tau1", tl::thickness(k1).tau},
                {"tau2", tl::thickness(k2).tau},
                {"config_hash", hash},
                {"seed", c.seed}};
    deliver(c.out, doc.dump(2) + "\n");
    std::cerr << "gap-lemma: " << tl::to_string(res.verdict) << " (depth " << res.depth << ")\n";
    return res.verdict == tl::Trichotomy::Undecided ? kExitNumerical : 0;
}

int cmd_continuation(const Common& c, std::size_t n, const std::string& word_s, double t_from, double t_to,
                     double step)
{
    const auto m = require_model(c);
    tl::Word word = word_s.empty() ? tl::zero_word(n) : tl::parse_word(word_s);
    if (word.size() != n)
        throw tl::ValidationError("--word length must equal --n");
    const json params = {{"n", n}, {"word", tl::to_string(word)}, {"t_from", t_from}, {"t_to", t_to}, {"step", step}};
    const auto hash = tl::config_hash(config_of("continuation", params, m));
    const auto start = tl::certify_sink(m.with_t(t_from), word);
    tl::ContinuationOptions opt;
    opt.initial_step = step;
    const auto path = tl::continue_orbit(tl::primary_family(m), start, t_from, t_to, opt);
    std::vector<std::vector<tl::Cell>> rows;
    for (const auto& s : path.samples)
        rows.push_back({s.t, s.orbit.point.x, s.orbit.point.y, s.orbit.multipliers[0], s.orbit.multipliers[1],
                        std::string(tl::to_string(s.orbit.cls))});
    deliver(c.out, tl::csv_text({"t", "x", "y", "m1", "m2", "class"}, rows, hash, c.seed));
    std::cerr << "continuation: " << path.samples.size() << " samples, " << tl::to_string(path.end_reason);
    if (path.bifurcation != tl::Bifurcation::None)
        std::cerr << " (" << tl::to_string(path.bifurcation) << " at t=" << tl::format_double(path.t_exit) << ")";
    std::cerr << '\n';
    return 0;
}

void write_cascade(const Common& c, const std::string& csv_path, const tl::ModelMap& m, const tl::CascadeResult& r,
                   const std::string& hash)
{
    json doc = {{"model", m}, {"result", r}};
    doc["config_hash"] = hash;
    doc["seed"] = c.seed;
    deliver(c.out, doc.dump(2) + "\n");
    if (!csv_path.empty()) {
        std::vector<std::vector<tl::Cell>> rows;
        const auto& last = r.verification.empty() ? tl::StageVerification{} : r.verification.back();
        for (std::size_t i = 0; i < r.windows.size(); ++i) {
            const auto& w = r.windows[i];
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double m1 = i < last.orbits.size() ? last.orbits[i].multipliers[0] : nan;
            const double m2 = i < last.orbits.size() ? last.orbits[i].multipliers[1] : nan;
            rows.push_back({static_cast<long long>(w.index), static_cast<long long>(w.n), w.t_minus, w.t_plus, w.width(),
                            static_cast<long long>(w.period), m1, m2});
        }
        tl::emit_csv({"i", "n_i", "t_minus", "t_plus", "width", "period", "m1", "m2"}, rows, csv_path, hash, c.seed);
    }
}

int cmd_sink_cascade(const Common& c, int sinks, double rho, const std::string& min_n_s, double epsilon,
                     const std::string& csv_path)
{
    const auto m = require_model(c);
    const auto min_n = parse_list(min_n_s);
    const json params = {{"sinks", sinks}, {"rho", rho}, {"min_n", min_n}, {"epsilon", epsilon}};
    const auto hash = tl::config_hash(config_of("sink-cascade", params, m));
    tl::CascadeOptions opt;
    opt.epsilon = epsilon;
    try {
        const auto r = tl::run_cascade(m, sinks, rho, min_n, opt);
        write_cascade(c, csv_path, m, r, hash);
        std::cerr << "sink-cascade: " << r.windows.size() << " stages, t_infinity=" << tl::format_double(r.t_infinity)
                  << ", stage " << r.verification.back().stage
                  << (r.verification.back().ok() ? " certified\n" : " NOT certified\n");
        return r.verification.back().ok() ? 0 : kExitNumerical;
    } catch (const tl::CascadeError& e) {
        if (!e.partial().windows.empty())
            write_cascade(c, csv_path, m, e.partial(), hash);
        std::cerr << "sink-cascade: " << e.what() << '\n';
        return kExitNumerical;
    }
}

std::pair<tl::ModelMap, tl::CascadeResult> load_cascade(const std::string& path)
{
    if (path.empty())
        throw tl::ValidationError("--cascade <path> is required");
    const json doc = tl::read_json_file(path);
    try {
        return {tl::parse_model(doc.at("model")), doc.at("result").get<tl::CascadeResult>()};
    } catch (const json::exception& e) {
        throw tl::ValidationError(path + ": " + e.what());
    }
}

std::vector<double> survival_offsets(const std::string& list, double lo, double hi, int count)
{
    std::vector<double> out;
    if (!list.empty()) {
        std::stringstream ss(list);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw tl::ValidationError("bad offset '" + item + "'");
            }
        }
        return out;
    }
    if (!(lo > 0.0 && hi > lo && count >= 2))
        throw tl::ValidationError("offset range needs 0 < --offset-min < --offset-max and --count >= 2");
    out.push_back(0.0);
    for (int i = 0; i < count; ++i) {
        const double v = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
        out.push_back(v);
        out.push_back(-v);
    }
    return out;
}

int cmd_unfold_survival(const Common& c, const std::string& cascade, double v, const std::string& list, double lo,
                        double hi, int count)
{
    const auto [m, r] = load_cascade(cascade);
    const auto offsets = survival_offsets(list, lo, hi, count);
    const json params = {{"cascade", r}, {"v", v}, {"offsets", offsets}};
    const auto hash = tl::config_hash(config_of("unfold-survival", params, m));
    const auto rep = tl::survival_under_unfolding(r, m, v, offsets);
    std::vector<std::string> header{"offset", "survivors", "predicted"};
    for (std::size_t i = 0; i < r.windows.size(); ++i)
        header.push_back("sink" + std::to_string(i + 1));
    std::vector<std::vector<tl::Cell>> rows;
    for (const auto& row : rep.rows) {
        std::vector<tl::Cell> cells{row.offset, static_cast<long long>(row.survivors),
                                    static_cast<long long>(row.predicted)};
        for (bool s : row.survived)
            cells.push_back(static_cast<long long>(s ? 1 : 0));
        rows.push_back(cells);
    }
    deliver(c.out, tl::csv_text(header, rows, hash, c.seed));
    std::cerr << "unfold-survival: " << rep.rows.size() << " offsets\n";
    return 0;
}

int cmd_persist_check(const Common& c, const std::string& cascade, double delta, int trials, double epsilon)
{
    const auto [m, r] = load_cascade(cascade);
    const json params = {{"cascade", r}, {"delta", delta}, {"trials", trials}, {"epsilon", epsilon}};
    const auto hash = tl::config_hash(config_of("persist-check", params, m));
    const auto rep = tl::persistence_experiment(r, m, delta, trials, c.seed, epsilon);
    json doc = {{"delta", rep.delta},
                {"epsilon", rep.epsilon},
                {"beta0", rep.beta0},
                {"beta_measured", rep.beta_measured},
                {"continued", rep.continued},
                {"multipliers", rep.multipliers},
                {"all_continued", rep.all_continued()},
                {"beta_within_bound", rep.beta_within_bound()},
                {"config_hash", hash},
                {"seed", c.seed}};
    deliver(c.out, doc.dump(2) + "\n");
    std::cerr << "persist-check: " << trials << " trials, all continued: " << (rep.all_continued() ? "yes" : "no")
              << ", beta within bound: " << (rep.beta_within_bound() ? "yes" : "no") << '\n';
    return rep.all_continued() && rep.beta_within_bound() ? 0 : kExitNumerical;
}

} // namespace

int main(int argc, char** argv)
{
    if (argc < 2) {
        std::cerr << usage();
        return kExitUsage;
    }
    const std::string first = argv[1];
    if (first == "-h" || first == "--help") {
        std::cout << usage();
        return 0;
    }
    const bool known = std::any_of(kCommands.begin(), kCommands.end(), [&](const auto& p) { return p.first == first; });
    if (!known) {
        std::cerr << "unknown command '" << first << "'\n\n" << usage();
        return kExitUsage;
    }

    CLI::App app{"tangencylab"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool model) {
        if (model)
            sub->add_option("--model", common.model_path, "model JSON");
        sub->add_option("--seed", common.seed, "random seed (recorded in outputs)");
        sub->add_option("-o,--out", common.out, "output file (default stdout)");
    };

    std::size_t n_min = 4, n_max = 12, n = 5;
    int grid = 101, steps = 100, depth = 8, sinks = 4, trials = 20, count = 19;
    double mu_min = -0.8, mu_max = 0.3, rho = 0.5, epsilon = 0.1, shift = 0.0, t_from = 0.0, t_to = 0.0, step = 0.0;
    double v = 1.0, off_lo = 1e-12, off_hi = 1e-3, delta = 1e-3;
    std::optional<double> gen, gen1, gen2;
    std::string set, set1, set2, word, min_n = "5,8,11,14", csv_path, cascade, offsets;

    auto* renorm = app.add_subcommand("renorm-check", "renormalisation diagnostics");
    add_common(renorm, true);
    renorm->add_option("--n-min", n_min);
    renorm->add_option("--n-max", n_max);
    renorm->add_option("--grid", grid);

    auto* quad = app.add_subcommand("quad-scan", "quadratic family scan");
    add_common(quad, false);
    quad->add_option("--mu-min", mu_min);
    quad->add_option("--mu-max", mu_max);
    quad->add_option("--steps", steps);

    auto* thick = app.add_subcommand("thickness", "Cantor set thickness");
    add_common(thick, false);
    thick->add_option("--set", set, "Cantor set JSON");
    thick->add_option("--generator", gen, "middle-gap ratio r");
    thick->add_option("--depth", depth);

    auto* gap = app.add_subcommand("gap-lemma", "gap lemma trichotomy");
    add_common(gap, false);
    gap->add_option("--set1", set1);
    gap->add_option("--set2", set2);
    gap->add_option("--generator1", gen1);
    gap->add_option("--generator2", gen2);
    gap->add_option("--shift", shift, "translation applied to the second set");
    gap->add_option("--depth", depth);

    auto* cont = app.add_subcommand("continuation", "orbit continuation in t");
    add_common(cont, true);
    cont->add_option("--n", n);
    cont->add_option("--word", word, "branch word (default 0^n)");
    cont->add_option("--t-from", t_from)->required();
    cont->add_option("--t-to", t_to)->required();
    cont->add_option("--step", step, "initial step (default range/50)");

    auto* casc = app.add_subcommand("sink-cascade", "nested sink windows");
    add_common(casc, true);
    casc->add_option("--sinks", sinks);
    casc->add_option("--rho", rho);
    casc->add_option("--min-n", min_n, "comma-separated minimum n per stage");
    casc->add_option("--epsilon", epsilon);
    casc->add_option("--csv", csv_path, "window table CSV");

    auto* surv = app.add_subcommand("unfold-survival", "survival staircase");
    add_common(surv, false);
    surv->add_option("--cascade", cascade, "sink-cascade JSON");
    surv->add_option("--v", v);
    surv->add_option("--offsets", offsets, "comma-separated offsets (overrides the range)");
    surv->add_option("--offset-min", off_lo);
    surv->add_option("--offset-max", off_hi);
    surv->add_option("--count", count, "log-spaced magnitudes, each used with both signs");

    auto* pers = app.add_subcommand("persist-check", "persistence trials");
    add_common(pers, false);
    pers->add_option("--cascade", cascade, "sink-cascade JSON");
    pers->add_option("--delta", delta);
    pers->add_option("--trials", trials);
    pers->add_option("--epsilon", epsilon);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*renorm)
            return cmd_renorm_check(common, n_min, n_max, grid);
        if (*quad)
            return cmd_quad_scan(common, mu_min, mu_max, steps);
        if (*thick)
            return cmd_thickness(common, set, gen, depth);
        if (*gap)
            return cmd_gap_lemma(common, set1, set2, gen1, gen2, shift, depth);
        if (*cont)
            return cmd_continuation(common, n, word, t_from, t_to, step);
        if (*casc)
            return cmd_sink_cascade(common, sinks, rho, min_n, epsilon, csv_path);
        if (*surv)
            return cmd_unfold_survival(common, cascade, v, offsets, off_lo, off_hi, count);
        if (*pers)
            return cmd_persist_check(common, cascade, delta, trials, epsilon);
    } catch (const tl::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const tl::PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}
