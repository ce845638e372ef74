#include "tangencylab/renorm.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tangencylab;

namespace
{

ModelMap nonlinear_model()
{
    ModelMap m;
    m.saddle.nonlinearity.sigma_amp = 0.03;
    m.saddle.nonlinearity.lambda_amp = 0.05;
    return m;
}

// The affine chart formulas written out directly (word 0^n, c = 0).
struct AffineOracle
{
    double lambda = 0.2, sigma = 2.1, a = 0.5, b = 0.5;
    int n;
    double S() const { return std::pow(sigma, n); }
    double L() const { return std::pow(lambda, n); }
    RenormPoint fwd(double x, double y, double mu) const
    {
        return {(x - b) * S(), y * S() * S() - a * S(), mu * S() * S() + b * L() * S() * S() - a * S()};
    }
};

} // namespace

TEST(RenormChart, ForwardMatchesAffineFormulas)
{
    ModelMap m;
    const auto ch = make_chart(m, 5);
    const AffineOracle o{.n = 5};
    for (auto [x, y, mu] : {std::array<double, 3>{0.5, 0.0122, 0.0121}, {0.51, 0.0123, 0.0}, {0.49, 0.012, -0.001}}) {
        const auto p = to_renorm(ch, {x, y, mu});
        const auto q = o.fwd(x, y, mu);
        EXPECT_NEAR(p.xh, q.xh, 1e-12);
        EXPECT_NEAR(p.yh, q.yh, 1e-10);
        EXPECT_NEAR(p.muh, q.muh, 1e-10);
    }
}

TEST(RenormChart, TrivialCancellations)
{
    ModelMap m;
    const auto ch = make_chart(m, 5);
    EXPECT_EQ(to_renorm(ch, {0.5, 0.0123, 0.01}).xh, 0.0);
    const double S = std::pow(2.1, 5);
    // (y - c) S^2 = a S
    EXPECT_NEAR(to_renorm(ch, {0.3, 0.5 / S, 0.0}).yh, 0.0, 1e-12);
    // Origin of the chart.
    const auto p = from_renorm(ch, {0.0, 0.0, 0.0});
    EXPECT_EQ(p.x, 0.5);
    EXPECT_NEAR(p.y, 0.5 / S, 1e-17);
    EXPECT_NEAR(p.mu, 0.5 / S - 0.5 * std::pow(0.2, 5), 1e-17);
}

TEST(RenormChart, VertexDatumRoundTrip)
{
    ModelMap m;
    const auto ch = make_chart(m, 5);
    const double s5 = std::pow(2.1, -5);
    const ChartPoint p{0.5, 0.5 * s5, 0.5 * s5};
    const auto q = to_renorm(ch, p);
    EXPECT_EQ(q.xh, 0.0);
    const auto back = from_renorm(ch, q);
    EXPECT_NEAR(back.x, p.x, 1e-12);
    EXPECT_NEAR(back.y, p.y, 1e-12);
    EXPECT_NEAR(back.mu, p.mu, 1e-12);
}

TEST(RenormChart, RoundTripRandomPoints)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& m : {ModelMap{}, nonlinear_model()}) {
        for (std::size_t n : {4u, 6u, 9u}) {
            const auto ch = make_chart(m, n);
            for (int i = 0; i < 100; ++i) {
                const RenormPoint q{u(rng), u(rng), u(rng)};
                const auto p = from_renorm(ch, q);
                const auto r = to_renorm(ch, p);
                EXPECT_NEAR(r.xh, q.xh, 1e-12);
                EXPECT_NEAR(r.yh, q.yh, 1e-12);
                EXPECT_NEAR(r.muh, q.muh, 1e-12);
            }
        }
    }
}

TEST(RenormChart, ForwardDetectsEscape)
{
    ModelMap m;
    const auto ch = make_chart(m, 5);
    EXPECT_THROW(to_renorm(ch, {0.5, 0.3, 0.0}), DomainError);
}

TEST(RenormChart, GeneralWordLevels)
{
    SaddleSpec s;
    // "1" lands on 0 from 1 - 1/sigma; "01" from (1 - 1/sigma)/sigma.
    EXPECT_NEAR(word_level(s, parse_word("1")), 1.0 - 1.0 / 2.1, 1e-16);
    EXPECT_NEAR(word_level(s, parse_word("01")), (1.0 - 1.0 / 2.1) / 2.1, 1e-16);
    EXPECT_NEAR(word_leaf(s, parse_word("1")), 0.8, 1e-16);
    EXPECT_NEAR(word_leaf(s, parse_word("10")), 0.16, 1e-16);
}

TEST(LimitMap, Values)
{
    const Vec2 v = limit_map({0.3, -0.2}, 0.1);
    EXPECT_EQ(v.x, -0.2);
    EXPECT_NEAR(v.y, 0.14, 1e-16);
    EXPECT_EQ(limit_map({0.0, 0.0}, 0.0), (Vec2{0.0, 0.0}));
    const double mu = -0.3;
    const double ys = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * mu));
    const Vec2 f = limit_map({ys, ys}, mu);
    EXPECT_NEAR(f.x, ys, 1e-16);
    EXPECT_NEAR(f.y, ys, 1e-15);
}

TEST(RenormalizedReturn, AffineClosedForm)
{
    ModelMap base;
    for (std::size_t n = 4; n <= 9; ++n) {
        const auto ch = make_chart(base, n);
        for (double muh : {-0.3, 0.0, 0.1}) {
            const ModelMap m = with_relative_height(base, ch, from_renorm(ch, {0.0, 0.0, muh}).mu);
            const double coupling = std::pow(0.42, static_cast<double>(n));
            for (int i = 0; i <= 10; ++i)
                for (int j = 0; j <= 10; ++j) {
                    const Vec2 ph{-1.0 + 0.2 * i, -1.0 + 0.2 * j};
                    const Vec2 T = renormalized_return(m, ch, ph);
                    EXPECT_NEAR(T.x, ph.y, 1e-10);
                    EXPECT_NEAR(T.y, ph.y * ph.y + muh + coupling * ph.x, 1e-10);
                }
        }
    }
}

TEST(RenormalizedReturn, OriginFixedAtZeroParameter)
{
    ModelMap base;
    const auto ch = make_chart(base, 6);
    const ModelMap m = with_relative_height(base, ch, from_renorm(ch, {0.0, 0.0, 0.0}).mu);
    const Vec2 T = renormalized_return(m, ch, {0.0, 0.0});
    EXPECT_NEAR(T.x, 0.0, 1e-12);
    EXPECT_NEAR(T.y, 0.0, 1e-12);
}

TEST(RenormalizedReturn, CouplingShrinksByLambdaSigma)
{
    ModelMap base;
    double prev = 0.0;
    for (std::size_t n = 4; n <= 9; ++n) {
        const auto ch = make_chart(base, n);
        const ModelMap m = with_relative_height(base, ch, from_renorm(ch, {0.0, 0.0, 0.0}).mu);
        const double c = renormalized_return(m, ch, {1.0, 0.0}).y - renormalized_return(m, ch, {0.0, 0.0}).y;
        if (n > 4) {
            EXPECT_NEAR(c / prev, 0.42, 1e-8);
        }
        prev = c;
    }
}

TEST(RenormalizedJacobian, AgreesWithFiniteDifferences)
{
    for (const auto& base : {ModelMap{}, nonlinear_model()}) {
        const auto ch = make_chart(base, 6);
        const ModelMap m = with_relative_height(base, ch, from_renorm(ch, {0.0, 0.0, 0.0}).mu);
        const double h = 1e-5;
        for (Vec2 p : {Vec2{0.3, -0.4}, Vec2{-0.7, 0.6}, Vec2{0.0, 0.0}}) {
            const Mat2 J = renormalized_jacobian(m, ch, p);
            for (int k = 0; k < 2; ++k) {
                const Vec2 e{k == 0 ? h : 0.0, k == 1 ? h : 0.0};
                const Vec2 d = (1.0 / (2 * h)) * (renormalized_return(m, ch, p + e) - renormalized_return(m, ch, p - e));
                EXPECT_NEAR(J(0, k), d.x, 1e-5);
                EXPECT_NEAR(J(1, k), d.y, 1e-5);
            }
        }
    }
}

TEST(ConvergenceReport, AffineDeviationIsCouplingTerm)
{
    ModelMap m;
    const auto rep = convergence_report(m, 4, 10, 101);
    for (const auto& d : rep) {
        const double expect = std::pow(0.42, static_cast<double>(d.n));
        EXPECT_TRUE(d.admissible);
        EXPECT_NEAR(d.c1_deviation, expect, 1e-8) << "n=" << d.n;
        EXPECT_NEAR(d.c0_deviation, expect, 1e-8);
        EXPECT_LE(d.muhat_dx, 1e-6);
        EXPECT_LE(d.muhat_dy, 1e-6);
    }
}

TEST(ConvergenceReport, TooFewIteratesIsNotAdmissible)
{
    ModelMap m;
    const auto d = renorm_diagnostics(m, 0, 11);
    EXPECT_FALSE(d.admissible);
}

TEST(ConvergenceReport, NonlinearDeviationShrinks)
{
    const auto rep = convergence_report(nonlinear_model(), 5, 10, 21);
    for (std::size_t i = 1; i < rep.size(); ++i)
        EXPECT_LT(rep[i].c1_deviation, rep[i - 1].c1_deviation);
}

TEST(ImplicitHeight, AffineValues)
{
    ModelMap m;
    const auto ch = make_chart(m, 5);
    const double nu = implicit_height(ch, 0.0);
    EXPECT_NEAR(nu, 0.5 / std::pow(2.1, 5) - 0.5 * std::pow(0.2, 5), 1e-16);
    EXPECT_NEAR(nu, 0.0120826, 1e-7);
    const double h = 1e-6;
    const double slope = (implicit_height(ch, h) - implicit_height(ch, -h)) / (2 * h);
    EXPECT_NEAR(slope, std::pow(2.1, -10), 1e-12);
    EXPECT_NEAR(slope, 5.995e-4, 1e-7);
    EXPECT_NEAR(std::abs(nu - baseline_height(ch)), 0.5 * std::pow(0.2, 5), 1e-16);
    EXPECT_THROW(implicit_height(ch, 2.5), ValidationError);
}

TEST(ImplicitHeight, ConsistentWithInverseChart)
{
    for (const auto& m : {ModelMap{}, nonlinear_model()}) {
        const auto ch = make_chart(m, 6);
        for (double muh : {-1.5, -0.3, 0.0, 0.1, 1.2}) {
            const double nu = implicit_height(ch, muh);
            // The chart parameter at the reference orbit of height nu.
            const double y = ch.y_word + (nu - ch.c);
            const auto q = to_renorm(ch, {ch.b, y, nu - ch.c});
            EXPECT_NEAR(q.muh, muh, 1e-9);
        }
    }
}

TEST(ImplicitHeight, StrictlyMonotone)
{
    for (const auto& m : {ModelMap{}, nonlinear_model()}) {
        const auto ch = make_chart(m, 7);
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 400; ++i) {
            const double nu = implicit_height(ch, -1.99 + 3.98 * i / 400.0);
            EXPECT_GT(nu, prev);
            prev = nu;
        }
    }
}
