#include <boost/math/distributions/normal.hpp>

#include <cmath>

#include <gtest/gtest.h>

#include "qpgamma/coincidence.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/rng.hpp"

using namespace qpgamma;

TEST(Wilson, MatchesClosedForm)
{
    const double z = 1.959963984540054;
    const double n = 50, p = 0.2;
    const double c = (p + z * z / (2 * n)) / (1 + z * z / n);
    const double h = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
    const auto iv = wilson_interval(10, 50);
    EXPECT_NEAR(iv.lower, c - h, 1e-12);
    EXPECT_NEAR(iv.upper, c + h, 1e-12);
    EXPECT_EQ(wilson_interval(0, 20).lower, 0.0);
    EXPECT_GT(wilson_interval(0, 20).upper, 0.0);
    EXPECT_EQ(wilson_interval(20, 20).upper, 1.0);
    EXPECT_EQ(wilson_interval(0, 0).upper, 1.0);
}

TEST(Rates, PoissonIntervals)
{
    const auto z = jump_rate(0, 1000.0);
    EXPECT_EQ(z.rate, 0.0);
    EXPECT_NEAR(z.upper, 3.0 / 1000.0, 0.01 / 1000.0);  // -ln 0.05 = 2.996
    const auto r = jump_rate(10, 100.0);
    EXPECT_EQ(r.rate, 0.1);
    EXPECT_NEAR(r.lower, 4.795 / 100.0, 1e-4);
    EXPECT_NEAR(r.upper, 18.39 / 100.0, 1e-4);
    EXPECT_THROW(jump_rate(1, 0.0), ConfigError);
}

TEST(Rates, InverseSquareFit)
{
    const std::vector<double> d{0.1, 0.2, 0.4};
    std::vector<double> r;
    for (double x : d)
        r.push_back(0.05 * std::pow(x, -2.0));
    const auto p = rate_vs_distance(r, d);
    EXPECT_NEAR(p.exponent, -2.0, 1e-12);
    EXPECT_NEAR(p.prefactor, 0.05, 1e-12);
    const std::vector<double> e{0.1 * r[0], 0.1 * r[1], 0.1 * r[2]};
    // Equal relative errors: weights 100, exponent variance sum(w) / det
    double sx = 0.0, sxx = 0.0;
    for (double x : d) {
        sx += std::log(x);
        sxx += std::log(x) * std::log(x);
    }
    const double det = 300.0 * 100.0 * sxx - 100.0 * 100.0 * sx * sx;
    EXPECT_NEAR(rate_vs_distance(r, d, e).exponent_error, std::sqrt(300.0 / det), 1e-12);
    EXPECT_THROW(rate_vs_distance(std::vector<double>{1.0}, std::vector<double>{1.0}), DataError);
}

namespace {

struct Streams {
    std::vector<double> a, b;
};

// Windows of 1 s: each stream fires independently with probability p_own
// and both fire with probability p_common.
Streams planted(double p_own, double p_common, std::size_t n, std::uint64_t seed)
{
    RandomStream r(seed);
    Streams s;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) + 0.5;
        const bool c = r.uniform() < p_common;
        if (c || r.uniform() < p_own)
            s.a.push_back(t);
        if (c || r.uniform() < p_own)
            s.b.push_back(t);
    }
    return s;
}

}  // namespace

TEST(Correlation, IdenticalIndependentAndPlanted)
{
    const auto same = planted(0.01, 0.0, 100000, 1);
    EXPECT_NEAR(correlation_probability(same.a, same.a, 1e5, 1.0).p_corr, 1.0, 1e-12);

    const auto ind = planted(0.01, 0.0, 200000, 2);
    const auto pi = correlation_probability(ind.a, ind.b, 2e5, 1.0);
    EXPECT_NEAR(pi.p_corr, 0.0, 3.0 * pi.p_corr_error);
    EXPECT_NEAR(pi.observed_rate, pi.background_rate, 4.0 * std::sqrt(pi.background_rate / 2e5));

    // A quarter of the events of each stream are shared
    const double own = 0.0075, common = 0.0025;
    const auto pl = planted(own / (1 - common), common, 400000, 3);
    const auto pp = correlation_probability(pl.a, pl.b, 4e5, 1.0);
    EXPECT_NEAR(pp.p_corr, 0.25, 3.0 * pp.p_corr_error);
    EXPECT_EQ(pp.bins, 400000u);

    EXPECT_THROW(correlation_probability({}, {}, 10.0, 1.0), DataError);
    EXPECT_EQ(simulated_correlation(10, 30, 5), 0.25);
    EXPECT_THROW(simulated_correlation(0, 0, 0), DataError);
}

namespace {

MaskedDigitalTrace digital(std::vector<std::uint8_t> parity, double dt = 1e-3)
{
    MaskedDigitalTrace t;
    t.dt = dt;
    t.mask.assign(parity.size(), 0);
    t.parity = std::move(parity);
    t.unmasked_samples = t.parity.size();
    return t;
}

}  // namespace

TEST(ParityPairs, CountsNearbySwitches)
{
    std::vector<std::uint8_t> a(10000, 0), b(10000, 0);
    std::fill(a.begin() + 1000, a.end(), 1);
    std::fill(b.begin() + 1003, b.end(), 1);
    std::fill(a.begin() + 5000, a.end(), 0);
    std::fill(b.begin() + 7000, b.end(), 0);
    auto ta = digital(a), tb = digital(b);
    ta.switching_rate = 2.0 / 10.0;
    tb.switching_rate = 2.0 / 10.0;
    const auto r = pairwise_parity_rate(ta, tb, 10);
    EXPECT_EQ(r.coincidences, 1u);
    EXPECT_NEAR(r.joint_time, 10.0, 1e-12);
    EXPECT_NEAR(r.observed, 0.1, 1e-12);
    EXPECT_NEAR(r.background, 0.04 * 10 * 1e-3, 1e-15);

    // Masking the coincidence removes it
    std::fill(tb.mask.begin() + 990, tb.mask.begin() + 1010, 1);
    EXPECT_EQ(pairwise_parity_rate(ta, tb, 10).coincidences, 0u);
}

TEST(Poisoning, ExamplesAndMonotonicity)
{
    EXPECT_NEAR(poisoning_probability(0.5, 0.1).raw, 1.0, 1e-12);
    EXPECT_NEAR(poisoning_probability(0.1, 0.1).raw, 0.0, 1e-12);
    EXPECT_NEAR(poisoning_probability(0.3, 0.1).raw, 0.5, 1e-12);
    EXPECT_EQ(poisoning_probability(0.05, 0.1).value, 0.0);
    EXPECT_THROW(poisoning_probability(0.3, 0.5), ConfigError);
    double prev = -1e9;
    for (double p = 0.0; p <= 0.5; p += 0.01) {
        const double v = poisoning_probability(p, 0.05).raw;
        EXPECT_GT(v, prev);
        prev = v;
    }
    const auto e = poisoning_probability(0.3, 0.1, 100);
    EXPECT_NEAR(e.error, 2.0 * std::sqrt(0.21 / 100) / 0.8, 1e-12);
}

TEST(CoincidenceScan, SkipsMaskedWindowsAndMeasuresBackground)
{
    // Parity flips at every planted jump; background flips far from them
    const std::size_t n = 100000;
    std::vector<std::uint8_t> p(n, 0);
    std::vector<JumpEvent> jumps;
    std::uint8_t state = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 10000 == 5000) {
            JumpEvent j;
            j.index = i;
            jumps.push_back(j);
            state ^= 1;
        }
        if (i % 10000 == 9000)
            state ^= 1;
        p[i] = state;
    }
    auto t = digital(p);
    // One jump window partially masked
    std::fill(t.mask.begin() + 25040, t.mask.begin() + 25060, 1);
    const std::vector<MaskedDigitalTrace> traces{t};
    const std::vector<std::string> ids{"Q3"};
    const auto s = coincidence_scan(jumps, traces, ids, 100);
    ASSERT_EQ(s.qubits.size(), 1u);
    const auto& q = s.qubits[0];
    EXPECT_EQ(s.jumps, 10u);
    EXPECT_EQ(q.unmasked, 9u);
    EXPECT_EQ(q.counts, 9u);
    EXPECT_EQ(q.p_obs, 1.0);
    // 10 background flips in (100000 - 10 * 100 - 20) quiet samples
    EXPECT_NEAR(q.background_rate, 10.0 / ((n - 1000 - 20) * 1e-3), 0.05);
    EXPECT_NEAR(q.p_bkgd, q.background_rate * 0.1, 1e-12);
    EXPECT_GT(q.p_poison.value, 0.9);
    EXPECT_THROW(coincidence_scan(jumps, traces, ids, 1), ConfigError);
}

TEST(Asymmetry, CountsSignsAboveThreshold)
{
    const std::vector<double> m{0.2, -0.3, 0.16, 0.1, -0.05, 0.4};
    const auto a = jump_asymmetry(m);
    EXPECT_EQ(a.total, 4u);
    EXPECT_EQ(a.positive, 3u);
    EXPECT_EQ(a.fraction, 0.75);
    EXPECT_LT(a.ci.lower, 0.75);
    EXPECT_GT(a.ci.upper, 0.75);
    EXPECT_THROW(jump_asymmetry(std::vector<double>{0.01}), DataError);
}

TEST(Threshold, ImpactRateScaling)
{
    const double area = 8e-3 * 8e-3;
    const double r = impact_rate_from_background(0.002, 1.06e-3, area);
    EXPECT_NEAR(r, 0.002 * area / (M_PI * 1.06e-3 * 1.06e-3), 1e-15);
    EXPECT_NEAR(r, 0.036, 0.002);
    // Doubling the radius quarters the inferred rate
    EXPECT_NEAR(impact_rate_from_background(0.002, 2.12e-3, area), r / 4.0, 1e-15);
    EXPECT_NEAR(threshold_analysis(0.04, 0.01), 0.25, 1e-15);
    EXPECT_THROW(threshold_analysis(0.0, 0.01), ConfigError);
}
