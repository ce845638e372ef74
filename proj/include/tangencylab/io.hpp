#ifndef TANGENCYLAB_IO_HPP_
#define TANGENCYLAB_IO_HPP_

// JSON model/result (de)serialisation and CSV emission.

#include "cantor.hpp"
#include "cascade.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

namespace tangencylab
{

using json = nlohmann::json;

// ---- model --------------------------------------------------------------

inline void to_json(json& j, const Vec2& v) { j = json::array({v.x, v.y}); }
inline void from_json(const json& j, Vec2& v)
{
    v.x = j.at(0).get<double>();
    v.y = j.at(1).get<double>();
}

inline void to_json(json& j, const Interval& v) { j = json::array({v.lo, v.hi}); }
inline void from_json(const json& j, Interval& v)
{
    v.lo = j.at(0).get<double>();
    v.hi = j.at(1).get<double>();
}

inline void to_json(json& j, const Monomial& t)
{
    j = {{"component", t.component}, {"coef", t.coef}, {"px", t.px}, {"py", t.py}};
}
inline void from_json(const json& j, Monomial& t)
{
    t.component = j.value("component", 2);
    t.coef = j.at("coef").get<double>();
    t.px = j.value("px", 0);
    t.py = j.value("py", 0);
}

inline void to_json(json& j, const ShapeTerm& t) { j = {{"coef", t.coef}, {"pu", t.pu}, {"pv", t.pv}}; }
inline void from_json(const json& j, ShapeTerm& t)
{
    t.coef = j.at("coef").get<double>();
    t.pu = j.value("pu", 0);
    t.pv = j.value("pv", 0);
}

inline void to_json(json& j, const SaddleSpec& s)
{
    j = {{"lambda", s.lambda},
         {"sigma", s.sigma},
         {"nonlinearity", {{"lambda_amp", s.nonlinearity.lambda_amp}, {"sigma_amp", s.nonlinearity.sigma_amp}}}};
}
inline void from_json(const json& j, SaddleSpec& s)
{
    s = SaddleSpec{};
    s.lambda = j.value("lambda", s.lambda);
    s.sigma = j.value("sigma", s.sigma);
    if (j.contains("nonlinearity")) {
        const auto& nl = j.at("nonlinearity");
        s.nonlinearity.lambda_amp = nl.value("lambda_amp", 0.0);
        s.nonlinearity.sigma_amp = nl.value("sigma_amp", 0.0);
    }
}

inline void to_json(json& j, const FoldSpec& f)
{
    j = {{"alpha", f.alpha}, {"beta", f.beta},          {"gamma", f.gamma},       {"a", f.a},
         {"b", f.b},         {"c", f.c},                {"N", f.N},               {"remainder", f.remainder},
         {"domain_radius", f.domain_radius}};
}
inline void from_json(const json& j, FoldSpec& f)
{
    f = FoldSpec{};
    f.alpha = j.value("alpha", f.alpha);
    f.beta = j.value("beta", f.beta);
    f.gamma = j.value("gamma", f.gamma);
    f.a = j.value("a", f.a);
    f.b = j.value("b", f.b);
    f.c = j.value("c", f.c);
    f.N = j.value("N", f.N);
    f.domain_radius = j.value("domain_radius", f.domain_radius);
    if (j.contains("remainder"))
        f.remainder = j.at("remainder").get<std::vector<Monomial>>();
}

inline void to_json(json& j, const PerturbationSpec& p)
{
    j = {{"k", p.k},
         {"delta", p.delta},
         {"radius", p.radius},
         {"shape", {{"horizontal", p.horizontal}, {"vertical", p.vertical}}}};
    if (p.center)
        j["center"] = *p.center;
}
inline void from_json(const json& j, PerturbationSpec& p)
{
    p = PerturbationSpec{};
    p.k = j.value("k", 0.0);
    p.delta = j.value("delta", 0.0);
    p.radius = j.value("radius", p.radius);
    if (j.contains("shape")) {
        const auto& sh = j.at("shape");
        if (sh.contains("horizontal"))
            p.horizontal = sh.at("horizontal").get<std::vector<ShapeTerm>>();
        if (sh.contains("vertical"))
            p.vertical = sh.at("vertical").get<std::vector<ShapeTerm>>();
    }
    if (j.contains("center"))
        p.center = j.at("center").get<Vec2>();
}

inline void to_json(json& j, const ModelMap& m)
{
    j = {{"saddle", m.saddle}, {"fold", m.fold}, {"t", m.t}, {"baseline", m.baseline}};
    if (!m.perturbations.empty())
        j["perturbation"] = m.perturbations;
}

/// Missing keys take their defaults; "perturbation" may be one object or a
/// list applied in order.
inline void from_json(const json& j, ModelMap& m)
{
    m = ModelMap{};
    if (j.contains("saddle"))
        m.saddle = j.at("saddle").get<SaddleSpec>();
    if (j.contains("fold"))
        m.fold = j.at("fold").get<FoldSpec>();
    m.t = j.value("t", 0.0);
    m.baseline = j.value("baseline", 0.0);
    if (j.contains("perturbation")) {
        const auto& p = j.at("perturbation");
        std::vector<PerturbationSpec> list;
        if (p.is_array())
            list = p.get<std::vector<PerturbationSpec>>();
        else if (!p.is_null())
            list.push_back(p.get<PerturbationSpec>());
        for (auto& xi : list)
            m = apply_perturbation(m, xi);
    }
}

inline ModelMap parse_model(const json& j)
{
    ModelMap m;
    try {
        m = j.get<ModelMap>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
    m.validate();
    return m;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline ModelMap load_model(const std::string& path) { return parse_model(read_json_file(path)); }

// ---- results ------------------------------------------------------------

inline void to_json(json& j, const PeriodicOrbit& o)
{
    j = {{"point", o.point},
         {"itinerary", to_string(o.word) + "F"},
         {"word", to_string(o.word)},
         {"period", o.period},
         {"multipliers", o.multipliers},
         {"eigenvalues", json::array({json::array({o.eigenvalues[0].real(), o.eigenvalues[0].imag()}),
                                      json::array({o.eigenvalues[1].real(), o.eigenvalues[1].imag()})})},
         {"class", to_string(o.cls)},
         {"residual", o.residual},
         {"iterations", o.iterations},
         {"at_precision_floor", o.at_precision_floor}};
}

inline OrbitClass orbit_class_from(const std::string& s)
{
    for (auto c : {OrbitClass::Sink, OrbitClass::Saddle, OrbitClass::Source, OrbitClass::Nonhyperbolic})
        if (s == to_string(c))
            return c;
    throw ValidationError("unknown orbit class '" + s + "'");
}

inline void from_json(const json& j, PeriodicOrbit& o)
{
    o.point = j.at("point").get<Vec2>();
    o.word = parse_word(j.at("word").get<std::string>());
    o.period = j.at("period").get<std::size_t>();
    o.multipliers = j.at("multipliers").get<std::array<double, 2>>();
    for (int i = 0; i < 2; ++i) {
        const auto& e = j.at("eigenvalues").at(i);
        o.eigenvalues[i] = {e.at(0).get<double>(), e.at(1).get<double>()};
    }
    o.cls = orbit_class_from(j.at("class").get<std::string>());
    o.residual = j.at("residual").get<double>();
    o.iterations = j.at("iterations").get<int>();
    o.at_precision_floor = j.at("at_precision_floor").get<bool>();
}

inline void to_json(json& j, const SinkCheck& c)
{
    j = {{"contracted", c.contracted},
         {"initial_distance", c.initial_distance},
         {"final_distance", c.final_distance},
         {"iterations", c.iterations}};
}
inline void from_json(const json& j, SinkCheck& c)
{
    c.contracted = j.at("contracted").get<bool>();
    c.initial_distance = j.at("initial_distance").get<double>();
    c.final_distance = j.at("final_distance").get<double>();
    c.iterations = j.at("iterations").get<std::size_t>();
}

inline void to_json(json& j, const SinkWindow& w)
{
    j = {{"index", w.index},         {"n", w.n},
         {"word", to_string(w.word)}, {"x0", w.x0},
         {"y_s", w.y_s},             {"t_center", w.t_center},
         {"nu_zero", w.nu_zero},     {"nu_center", w.nu_center},
         {"nu_minus", w.nu_minus},   {"nu_plus", w.nu_plus},
         {"t_minus", w.t_minus},     {"t_plus", w.t_plus},
         {"period", w.period},       {"width_constant", w.width_constant},
         {"epsilon", w.epsilon},     {"rho", w.rho},
         {"implicit_constant", w.implicit_constant}};
}
inline void from_json(const json& j, SinkWindow& w)
{
    w.index = j.at("index").get<int>();
    w.n = j.at("n").get<std::size_t>();
    w.word = parse_word(j.at("word").get<std::string>());
    w.x0 = j.at("x0").get<double>();
    w.y_s = j.at("y_s").get<double>();
    w.t_center = j.at("t_center").get<double>();
    w.nu_zero = j.at("nu_zero").get<double>();
    w.nu_center = j.at("nu_center").get<double>();
    w.nu_minus = j.at("nu_minus").get<double>();
    w.nu_plus = j.at("nu_plus").get<double>();
    w.t_minus = j.at("t_minus").get<double>();
    w.t_plus = j.at("t_plus").get<double>();
    w.period = j.at("period").get<std::size_t>();
    w.width_constant = j.at("width_constant").get<double>();
    w.epsilon = j.at("epsilon").get<double>();
    w.rho = j.at("rho").get<double>();
    w.implicit_constant = j.value("implicit_constant", 0.0);
}

inline void to_json(json& j, const StageVerification& v)
{
    j = {{"stage", v.stage},
         {"t", v.t},
         {"orbits", v.orbits},
         {"iteration_checks", v.iteration_checks},
         {"all_sinks", v.all_sinks},
         {"all_below_rho", v.all_below_rho},
         {"distinct", v.distinct}};
}
inline void from_json(const json& j, StageVerification& v)
{
    v.stage = j.at("stage").get<int>();
    v.t = j.at("t").get<double>();
    v.orbits = j.at("orbits").get<std::vector<PeriodicOrbit>>();
    v.iteration_checks = j.at("iteration_checks").get<std::vector<SinkCheck>>();
    v.all_sinks = j.at("all_sinks").get<bool>();
    v.all_below_rho = j.at("all_below_rho").get<bool>();
    v.distinct = j.at("distinct").get<bool>();
}

inline void to_json(json& j, const CascadeResult& r)
{
    j = {{"windows", r.windows},
         {"t_infinity", r.t_infinity},
         {"verification", r.verification},
         {"rho", r.rho},
         {"epsilon", r.epsilon}};
}
inline void from_json(const json& j, CascadeResult& r)
{
    r.windows = j.at("windows").get<std::vector<SinkWindow>>();
    r.t_infinity = j.at("t_infinity").get<double>();
    r.verification = j.at("verification").get<std::vector<StageVerification>>();
    r.rho = j.at("rho").get<double>();
    r.epsilon = j.at("epsilon").get<double>();
}

inline void to_json(json& j, const CantorApprox& k)
{
    j = {{"base", k.base}, {"gaps", k.gaps}, {"depth", k.depth}};
    if (k.generator)
        j["generator"] = {{"r0", k.generator->r0}, {"r1", k.generator->r1}};
}

/// Accepts {base, gaps[]} or {base?, generator{r} | generator{r0, r1}, depth?}.
inline void from_json(const json& j, CantorApprox& k)
{
    const Interval base = j.contains("base") ? j.at("base").get<Interval>() : Interval{0.0, 1.0};
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        CantorGenerator gen;
        if (g.is_number()) {
            gen.r0 = gen.r1 = g.get<double>();
        } else if (g.contains("r")) {
            gen.r0 = gen.r1 = g.at("r").get<double>();
        } else {
            gen.r0 = g.at("r0").get<double>();
            gen.r1 = g.at("r1").get<double>();
        }
        k = self_similar_cantor(gen, j.value("depth", 8), base);
        return;
    }
    k = CantorApprox{};
    k.base = base;
    k.gaps = j.at("gaps").get<std::vector<Interval>>();
    k.depth = j.value("depth", 0);
    k.validate();
}

// ---- emission -----------------------------------------------------------

/// 64-bit FNV-1a of the canonical (sorted-key) JSON text, as hex.
inline std::string config_hash(const json& config)
{
    const std::string text = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Cell = std::variant<double, long long, std::string>;

inline std::string format_cell(const Cell& c)
{
    if (const auto* d = std::get_if<double>(&c))
        return format_double(*d);
    if (const auto* i = std::get_if<long long>(&c))
        return std::to_string(*i);
    return std::get<std::string>(c);
}

/// CSV text: a "# config_hash=... seed=..." line, the header, then rows.
inline std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<Cell>>& rows,
                            const std::string& hash, std::uint64_t seed)
{
    std::ostringstream out;
    out << "# config_hash=" << hash << " seed=" << seed << '\n';
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw ValidationError("CSV row width does not match its header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_cell(row[i]);
        out << '\n';
    }
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path);
}

inline void emit_csv(const std::vector<std::string>& header, const std::vector<std::vector<Cell>>& rows,
                     const std::string& path, const std::string& hash, std::uint64_t seed)
{
    write_text(path, csv_text(header, rows, hash, seed));
}

/// Writes {"config_hash", "seed", ...value} pretty-printed with a final newline.
inline void emit_json(const json& value, const std::string& path, const std::string& hash, std::uint64_t seed)
{
    json doc = value;
    doc["config_hash"] = hash;
    doc["seed"] = seed;
    write_text(path, doc.dump(2) + "\n");
}

} // namespace tangencylab

#endif // TANGENCYLAB_IO_HPP_
