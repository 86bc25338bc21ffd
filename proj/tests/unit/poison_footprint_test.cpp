#include <cmath>

#include <gtest/gtest.h>

#include "qpgamma/errors.hpp"
#include "qpgamma/poison_footprint.hpp"

using namespace qpgamma;

namespace {

const std::vector<Vec2> kQubits{{-1.02e-3, 1.3e-3}, {1.02e-3, 1.3e-3}, {-1.02e-3, -0.74e-3},
                                {1.02e-3, -0.74e-3}, {-1.02e-3, -2.78e-3}, {1.02e-3, -2.78e-3}};

}  // namespace

TEST(FootprintModel, ProbabilityFromTunnellingMean)
{
    FootprintModel m;
    m.amplitude = 0.0;
    for (double p : footprint_model_eval(m, {0, 0}, kQubits))
        EXPECT_EQ(p, 0.0);
    m.amplitude = std::log(2.0);
    for (double p : footprint_model_eval(m, {0, 0}, kQubits))
        EXPECT_NEAR(p, 0.5, 1e-12);
    m.threshold = 0.0;
    EXPECT_THROW(footprint_lambda(m, {0, 0}, kQubits), ConfigError);
}

TEST(FootprintModel, DiscAverageOfExponential)
{
    FootprintModel m;
    m.family = ProfileFamily::Exponential;
    m.decay_length = 0.5e-3;
    m.sensing_radius = 1e-3;
    // At the disc centre: 2 / R^2 int_0^R r exp(-r / L) dr
    const double R = 1e-3, L = 0.5e-3;
    const double ref = 2.0 / (R * R) * L * L * (1.0 - std::exp(-R / L) * (1.0 + R / L));
    const std::vector<Vec2> centre{{0.0, 0.0}};
    EXPECT_NEAR(footprint_lambda(m, {0, 0}, centre)[0], ref, 1e-9);
}

TEST(FootprintModel, ExponentialDecreasesWithDistance)
{
    FootprintModel m;
    m.family = ProfileFamily::Exponential;
    m.amplitude = 3.0;
    m.decay_length = 1e-3;
    std::vector<Vec2> line;
    for (double x = 0.0; x < 6e-3; x += 0.25e-3)
        line.push_back({x, 0.0});
    const auto p = footprint_model_eval(m, {0, 0}, line);
    for (std::size_t i = 1; i < p.size(); ++i)
        EXPECT_LE(p[i], p[i - 1]);
    EXPECT_GT(p.front(), 0.5);
    EXPECT_LT(p.back(), 0.05);
}

TEST(FootprintFit, RecoversGeneratingParameters)
{
    const Vec2 centre{-1.02e-3, -0.74e-3};
    FootprintModel truth;
    truth.family = ProfileFamily::Exponential;
    truth.threshold = 0.8;
    truth.decay_length = 1.5e-3;
    const auto obs = footprint_model_eval(truth, centre, kQubits);
    FootprintModel start;
    start.family = ProfileFamily::Exponential;
    const auto fit = fit_footprint(start, centre, kQubits, obs);
    EXPECT_NEAR(fit.model.threshold, 0.8, 1e-4);
    EXPECT_NEAR(fit.model.decay_length, 1.5e-3, 1e-7);
    EXPECT_LT(fit.rms, 1e-8);

    FootprintModel uni;
    uni.amplitude = 1.0;
    uni.threshold = 2.0;
    const auto flat = footprint_model_eval(uni, centre, kQubits);
    const auto fu = fit_footprint(FootprintModel{}, centre, kQubits, flat);
    EXPECT_NEAR(fu.model.threshold, 2.0, 1e-6);
    for (double p : fu.predicted)
        EXPECT_NEAR(p, 1.0 - std::exp(-0.5), 1e-8);
}

TEST(FootprintFit, RejectsUnderdeterminedInput)
{
    const std::vector<Vec2> one{{0, 0}};
    const std::vector<double> p{0.4};
    EXPECT_THROW(fit_footprint(FootprintModel{}, {0, 0}, one, p), DataError);
    const std::vector<double> bad{0.1, 0.2, 1.3, 0.1, 0.1, 0.1};
    EXPECT_THROW(fit_footprint(FootprintModel{}, {0, 0}, kQubits, bad), DataError);
}

TEST(PoisonMap, InterpolatesAndClamps)
{
    const std::vector<double> flat(kQubits.size(), 0.3);
    const auto f = interpolate_poison_map(kQubits, flat, 4e-3, 41);
    ASSERT_EQ(f.values.size(), 41u * 41u);
    for (double v : f.values)
        EXPECT_NEAR(v, 0.3, 1e-9);

    const std::vector<double> vals{0.2, 0.1, 0.55, 0.25, 0.15, 0.05};
    const auto g = interpolate_poison_map(kQubits, vals, 4e-3, 161);
    for (std::size_t i = 0; i < kQubits.size(); ++i)
        EXPECT_NEAR(g.sample(kQubits[i].x, kQubits[i].y), vals[i], 0.02);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < g.values.size(); ++i)
        if (g.values[i] > g.values[arg])
            arg = i;
    const double mx = g.xs[arg % g.xs.size()], my = g.ys[arg / g.xs.size()];
    EXPECT_LT(std::hypot(mx - kQubits[2].x, my - kQubits[2].y), 1.0e-3);
    for (double v : g.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_THROW(interpolate_poison_map(std::span(kQubits).first(3), std::span(vals).first(3)), DataError);
}
