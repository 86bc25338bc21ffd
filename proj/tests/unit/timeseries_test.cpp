#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/impact_simulation.hpp"
#include "qpgamma/timeseries.hpp"

using namespace qpgamma;

TEST(TomographyResponse, ExtremesAndPeriod)
{
    EXPECT_NEAR(tomography_response(0.0, 1.0, 0.8), 0.1, 1e-12);
    EXPECT_NEAR(tomography_response(0.25, 1.0, 0.8), 0.9, 1e-12);
    EXPECT_NEAR(tomography_response(0.5, 1.0, 0.8), 0.1, 1e-12);
    for (double ng = -1.0; ng < 1.0; ng += 0.037) {
        EXPECT_NEAR(tomography_response(ng + 0.5, 0.9, 0.7), tomography_response(ng, 0.9, 0.7), 1e-12);
        EXPECT_NEAR(tomography_response(-ng, 0.9, 0.7), tomography_response(ng, 0.9, 0.7), 1e-12);
    }
}

TEST(TomographyStream, NoJumpsMeansConstantOffset)
{
    RandomStream r(1);
    const auto s = synth_tomography_stream({0.0, {}}, TomographySettings{}, r);
    EXPECT_TRUE(s.jumps.empty());
    ASSERT_EQ(s.scans.size(), 100u);
    for (const auto& scan : s.scans) {
        EXPECT_EQ(scan.true_offset, s.scans.front().true_offset);
        ASSERT_EQ(scan.p1.size(), 40u);
        for (double p : scan.p1) {
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 1.0);
        }
    }
}

TEST(TomographyStream, JumpCountsArePoisson)
{
    TomographySettings set;
    set.duration = 2000.0;
    set.points = 4;
    set.shots = 1;
    const double rate = 0.01;
    std::vector<double> counts;
    for (std::uint64_t k = 0; k < 400; ++k) {
        RandomStream r = rng_substream(55, k);
        counts.push_back(static_cast<double>(synth_tomography_stream({rate, {}}, set, r).jumps.size()));
    }
    double m = 0.0, v = 0.0;
    for (double c : counts)
        m += c / counts.size();
    for (double c : counts)
        v += (c - m) * (c - m) / (counts.size() - 1);
    const double mu = rate * set.duration;
    EXPECT_NEAR(m, mu, 4.0 * std::sqrt(mu / counts.size()));
    EXPECT_NEAR(v / m, 1.0, 0.25);
}

TEST(TomographyStream, EmpiricalMagnitudesAreAliased)
{
    RandomStream r(4);
    const auto s = synth_tomography_stream({0.05, {0.7}}, TomographySettings{}, r);
    ASSERT_FALSE(s.jumps.empty());
    for (const auto& j : s.jumps) {
        EXPECT_EQ(j.raw, 0.7);
        EXPECT_NEAR(j.aliased, -0.3, 1e-12);
    }
}

TEST(TomographyStream, RejectsUnphysicalSettings)
{
    RandomStream r(1);
    TomographySettings bad;
    bad.nu = 1.5;
    EXPECT_THROW(synth_tomography_stream({0.0, {}}, bad, r), ConfigError);
    EXPECT_THROW(synth_tomography_stream({-1.0, {}}, TomographySettings{}, r), ConfigError);
}

TEST(ParityTrace, CleanTraceHasTwoLevels)
{
    ParitySettings s;
    s.gamma = 0.0;
    s.fidelity = 1.0;
    s.samples = 2000;
    RandomStream r(2);
    const auto t = synth_parity_trace(s, {}, r);
    EXPECT_EQ(t.true_switches, 0u);
    for (std::size_t i = 0; i < t.samples.size(); ++i)
        EXPECT_EQ(t.samples[i], static_cast<double>(t.hidden[0]));

    s.gamma = 10.0;
    s.sigma = 0.0;
    s.fidelity = 0.9;
    RandomStream r2(3);
    const auto u = synth_parity_trace(s, {}, r2);
    for (std::size_t i = 0; i < u.samples.size(); ++i)
        ASSERT_EQ(u.samples[i], static_cast<double>(u.hidden[i]));
}

TEST(ParityTrace, SwitchCountIsPoisson)
{
    ParitySettings s;
    s.gamma = 20.0;
    s.samples = 200000;
    RandomStream r(6);
    const auto t = synth_parity_trace(s, {}, r);
    const double mu = s.gamma * s.dt * (s.samples - 1);
    EXPECT_NEAR(static_cast<double>(t.true_switches), mu, 4.0 * std::sqrt(mu));
    std::size_t visible = 0;
    for (std::size_t i = 1; i < t.hidden.size(); ++i)
        visible += t.hidden[i] != t.hidden[i - 1];
    EXPECT_LE(visible, t.true_switches);
    // Odd Poisson counts: (1 - exp(-2 gamma dt)) / 2 per sample
    const double p_odd = 0.5 * (1.0 - std::exp(-2.0 * s.gamma * s.dt));
    EXPECT_NEAR(static_cast<double>(visible), p_odd * (s.samples - 1), 4.0 * std::sqrt(p_odd * s.samples));
}

TEST(ParityTrace, SeparationFromFidelity)
{
    EXPECT_NEAR(separation_from_fidelity(0.9), 2.0 * std::sqrt(2.0) * 1.1630871536766743, 1e-9);
    EXPECT_TRUE(std::isinf(separation_from_fidelity(1.0)));
    EXPECT_THROW(separation_from_fidelity(0.0), ConfigError);
    EXPECT_THROW(separation_from_fidelity(1.2), ConfigError);
}

TEST(ParityTrace, DegeneracyCollapsesToMidpoint)
{
    ParitySettings s;
    s.samples = 5000;
    s.fidelity = 1.0;
    RandomStream r(8);
    const auto t = synth_parity_trace(s, {{1000, 500, 1.0}}, r);
    for (std::size_t i = 1000; i < 1500; ++i)
        ASSERT_EQ(t.samples[i], 0.5);
    EXPECT_NE(t.samples[999], 0.5);
}

TEST(SingleShot, ShiftAppliesFromJumpIndexUntilReset)
{
    SingleShotSettings s;
    s.samples = 60000;
    s.reset_interval = 30000;
    RandomStream r(12);
    const auto x = synth_singleshot_series(s, {10000}, {0.25}, r);
    ASSERT_EQ(x.resets, (std::vector<std::size_t>{0, 30000}));
    auto mean = [&](std::size_t a, std::size_t b) {
        double m = 0.0;
        for (std::size_t i = a; i < b; ++i)
            m += x.signal[i];
        return m / (b - a);
    };
    EXPECT_NEAR(mean(0, 10000), 0.9, 0.015);
    EXPECT_NEAR(mean(10000, 30000), 0.1, 0.01);
    EXPECT_NEAR(mean(30000, 60000), 0.9, 0.01);
    EXPECT_THROW(synth_singleshot_series(s, {1}, {}, r), ConfigError);
}

namespace {

CouplingSettings coupling(double p_poison)
{
    CouplingSettings c;
    c.charge.samples = 40000;
    c.parity.samples = 40000;
    c.parity.fidelity = 1.0;
    c.qubits = {"Q1", "Q2"};
    c.gammas = {0.0, 0.0};
    c.p_poison = {p_poison, 0.0};
    return c;
}

}  // namespace

TEST(Records, NoImpactsGiveQuietRecords)
{
    const auto rec = events_to_records({}, {}, coupling(1.0), 9);
    EXPECT_TRUE(rec.charge.jump_index.empty());
    ASSERT_EQ(rec.parity.size(), 2u);
    for (const auto& p : rec.parity)
        EXPECT_EQ(p.true_switches, 0u);
}

TEST(Records, ImpactPlacesStepAndPoisonsHalfTheTime)
{
    std::vector<std::size_t> idx;
    std::vector<double> shift;
    for (std::size_t k = 0; k < 400; ++k) {
        idx.push_back(50 + k * 99);
        shift.push_back(0.2);
    }
    const auto rec = events_to_records(shift, idx, coupling(1.0), 10);
    EXPECT_EQ(rec.charge.jump_index, idx);
    EXPECT_EQ(rec.poisoned[0].size(), idx.size());
    EXPECT_TRUE(rec.poisoned[1].empty());
    std::size_t flips = 0;
    for (std::size_t k : idx)
        flips += rec.parity[0].hidden[k] != rec.parity[0].hidden[k - 1];
    EXPECT_NEAR(flips / 400.0, 0.5, 4.0 * std::sqrt(0.25 / 400.0));
    EXPECT_EQ(rec.parity[1].true_switches, 0u);

    const auto again = events_to_records(shift, idx, coupling(1.0), 10);
    EXPECT_EQ(again.parity[0].samples, rec.parity[0].samples);
    EXPECT_EQ(again.charge.signal, rec.charge.signal);
}
