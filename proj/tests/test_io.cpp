#include "tangencylab/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace tangencylab;

namespace
{

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string temp_path(const char* name) { return ::testing::TempDir() + name; }

} // namespace

TEST(ModelJson, DefaultsFromEmptyObject)
{
    const ModelMap m = parse_model(json::object());
    EXPECT_EQ(m.saddle.lambda, 0.2);
    EXPECT_EQ(m.saddle.sigma, 2.1);
    EXPECT_EQ(m.t, 0.0);
    EXPECT_TRUE(m.perturbations.empty());
}

TEST(ModelJson, RoundTripWithPerturbation)
{
    ModelMap m;
    m.t = 0.0123;
    m.saddle.nonlinearity.sigma_amp = 0.03;
    PerturbationSpec xi;
    xi.k = 1e-4;
    xi.delta = 0.01;
    xi.horizontal = {{0.5, 1, 0}};
    xi.vertical = {{-0.25, 2, 1}};
    m = apply_perturbation(m, xi);
    const json j = m;
    const ModelMap back = parse_model(j);
    EXPECT_EQ(json(back), j);
    EXPECT_EQ(back.total_k(), m.total_k());
    EXPECT_EQ(back.mu(), m.mu());
    const Vec2 p{0.51, 0.012};
    EXPECT_EQ(step(back, p), step(m, p));
}

TEST(ModelJson, PerturbationObjectOrList)
{
    const json one = {{"perturbation", {{"k", 0.001}}}};
    const json two = {{"perturbation", json::array({{{"k", 0.001}}, {{"k", 0.002}}})}};
    EXPECT_DOUBLE_EQ(parse_model(one).total_k(), 0.001);
    EXPECT_DOUBLE_EQ(parse_model(two).total_k(), 0.003);
}

TEST(ModelJson, RejectsInvalidModels)
{
    EXPECT_THROW(parse_model(json{{"saddle", {{"sigma", "fast"}}}}), ValidationError);
    EXPECT_THROW(parse_model(json{{"saddle", {{"lambda", 0.4}, {"sigma", 2.1}}}}), ValidationError);
    EXPECT_THROW(parse_model(json{{"perturbation", {{"delta", 0.2}}}}), ValidationError);
    EXPECT_THROW(read_json_file("/nonexistent/model.json"), ValidationError);
}

TEST(ResultJson, CascadeRoundTrip)
{
    CascadeResult r;
    r.rho = 0.5;
    r.epsilon = 0.1;
    r.t_infinity = 1.0 / 3.0;
    SinkWindow w;
    w.index = 1;
    w.n = 5;
    w.word = parse_word("01101");
    w.t_minus = 0.1;
    w.t_plus = 0.1 + 1e-17;
    w.nu_center = 0.0120826;
    w.period = 6;
    r.windows = {w, w};
    StageVerification v;
    v.stage = 1;
    v.t = 0.2;
    PeriodicOrbit o;
    o.point = {0.5, 1e-300};
    o.word = w.word;
    o.period = 6;
    o.multipliers = {0.25, 0.0123};
    o.eigenvalues = {std::complex<double>(0.2, 0.15), std::complex<double>(0.2, -0.15)};
    o.cls = OrbitClass::Sink;
    o.residual = 3e-15;
    v.orbits = {o};
    v.iteration_checks = {SinkCheck{true, 0.05, 1e-20, 10002}};
    v.all_sinks = v.all_below_rho = v.distinct = true;
    r.verification = {v};
    const json j = r;
    const auto back = j.get<CascadeResult>();
    EXPECT_EQ(back, r);
    EXPECT_EQ(json::parse(j.dump()).get<CascadeResult>(), r);
}

TEST(ResultJson, CantorForms)
{
    const auto a = json{{"generator", 0.25}, {"depth", 3}}.get<CantorApprox>();
    EXPECT_EQ(a.gaps.size(), 7u);
    const auto b = json{{"generator", {{"r0", 0.3}, {"r1", 0.4}}}, {"depth", 2}}.get<CantorApprox>();
    EXPECT_EQ(b.gaps.size(), 3u);
    const auto c = json{{"base", {0.0, 1.0}}, {"gaps", json::array({json::array({0.4, 0.6})})}}.get<CantorApprox>();
    EXPECT_EQ(c.gaps.size(), 1u);
    EXPECT_THROW((json{{"base", {0.0, 1.0}}, {"gaps", json::array({json::array({0.6, 0.4})})}}.get<CantorApprox>()),
                 ValidationError);
}

TEST(Emission, DoublesRoundTripExactly)
{
    for (double v : {0.1, 1.0 / 3.0, 6.8125e-5, -2.5e-300, 12345.678901234567})
        EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Emission, CsvLayout)
{
    const std::string text = csv_text({"a", "b", "c"}, {{Cell{0.5}, Cell{7LL}, Cell{std::string("x")}}}, "abc", 3);
    EXPECT_EQ(text, "# config_hash=abc seed=3\na,b,c\n0.5,7,x\n");
    EXPECT_EQ(csv_text({"a"}, {}, "h", 0), "# config_hash=h seed=0\na\n");
    EXPECT_THROW(csv_text({"a", "b"}, {{Cell{1.0}}}, "h", 0), ValidationError);
}

TEST(Emission, ConfigHashIsStable)
{
    const json a = {{"x", 1}, {"y", {1, 2}}};
    const json b = json::parse(R"({"y":[1,2],"x":1})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(json{{"x", 2}, {"y", {1, 2}}}));
    EXPECT_EQ(config_hash(a).size(), 16u);
    // FNV-1a of "{}".
    EXPECT_EQ(config_hash(json::object()), "9bf65e00c699fdaf");
}

TEST(Emission, FilesAreDeterministic)
{
    const std::string p1 = temp_path("tl_a.json"), p2 = temp_path("tl_b.json");
    const json v = {{"value", 1.0 / 7.0}};
    emit_json(v, p1, "00ff", 11);
    emit_json(v, p2, "00ff", 11);
    EXPECT_EQ(slurp(p1), slurp(p2));
    const auto doc = json::parse(slurp(p1));
    EXPECT_EQ(doc.at("seed").get<std::uint64_t>(), 11u);
    EXPECT_EQ(doc.at("config_hash"), "00ff");
    EXPECT_EQ(doc.at("value").get<double>(), 1.0 / 7.0);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
