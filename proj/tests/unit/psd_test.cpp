#include <cmath>

#include <gtest/gtest.h>

#include "qpgamma/errors.hpp"
#include "qpgamma/psd.hpp"
#include "qpgamma/timeseries.hpp"

using namespace qpgamma;

namespace {

std::vector<double> digitized_trace(double gamma, double fidelity, std::size_t n, std::uint64_t seed)
{
    ParitySettings s;
    s.gamma = gamma;
    s.fidelity = fidelity;
    s.samples = n;
    RandomStream r(seed);
    const auto t = synth_parity_trace(s, {}, r);
    return digitize(t.samples, readout_threshold(t.samples));
}

}  // namespace

TEST(Psd, RecoversSwitchingRateAndFidelity)
{
    const auto x = digitized_trace(10.0, 0.9, 600000, 1);
    const auto s = compute_psd(x, 1e-3);
    const auto f = fit_lorentzian(s);
    EXPECT_TRUE(f.resolvable) << f.note;
    EXPECT_NEAR(f.gamma, 10.0, 1.0);
    EXPECT_NEAR(f.fidelity, 0.9, 0.03);
    EXPECT_GT(f.floor, 0.0);
}

TEST(Psd, WhiteNoiseIsNotResolvable)
{
    RandomStream r(2);
    std::vector<double> x(300000);
    for (double& v : x)
        v = r.normal();
    const auto f = fit_lorentzian(compute_psd(x, 1e-3));
    EXPECT_FALSE(f.resolvable);
}

TEST(Psd, ParsevalHolds)
{
    RandomStream r(3);
    std::vector<double> x(1 << 18);
    double prev = 0.0;
    for (double& v : x) {
        v = 0.9 * prev + r.normal();
        prev = v;
    }
    const double dt = 2e-3;
    const auto s = compute_psd(x, dt, 2048);
    double integral = 0.0;
    const double df = s.frequency[1] - s.frequency[0];
    for (double p : s.power)
        integral += p * df;
    double m = 0.0, var = 0.0;
    for (double v : x)
        m += v / x.size();
    for (double v : x)
        var += (v - m) * (v - m) / x.size();
    EXPECT_NEAR(integral / var, 1.0, 0.05);
    EXPECT_EQ(s.segment_length, 2048u);
    EXPECT_EQ(s.segments, 2u * (x.size() / 2048) - 1);
    EXPECT_NEAR(s.frequency.back(), 0.5 / dt, 1e-9);
}

TEST(Psd, ShortTraceThrows)
{
    std::vector<double> x(100, 1.0);
    EXPECT_THROW(compute_psd(x, 1e-3), DataError);
}

TEST(Psd, LorentzianShape)
{
    EXPECT_NEAR(lorentzian_psd(0.0, 10.0, 2.0, 0.0), 2.0 * 4.0 * 10.0 / 400.0, 1e-15);
    // Half power at f = gamma / pi
    EXPECT_NEAR(lorentzian_psd(10.0 / M_PI, 10.0, 2.0, 0.0), 0.5 * lorentzian_psd(0.0, 10.0, 2.0, 0.0), 1e-12);
    EXPECT_NEAR(lorentzian_psd(1e6, 10.0, 2.0, 0.3), 0.3, 1e-9);
}

TEST(Readout, ThresholdSplitsTwoClusters)
{
    std::vector<double> x;
    for (int i = 0; i < 300; ++i)
        x.push_back(i % 3 == 0 ? 4.0 + 0.01 * (i % 7) : 1.0 - 0.01 * (i % 5));
    const double t = readout_threshold(x);
    EXPECT_GT(t, 1.0);
    EXPECT_LT(t, 4.0);
    const auto d = digitize(x, t);
    EXPECT_EQ(d[0], 1.0);
    EXPECT_EQ(d[1], -1.0);
}
