#include <cmath>

#include <gtest/gtest.h>

#include "qpgamma/errors.hpp"
#include "qpgamma/hmm.hpp"
#include "qpgamma/timeseries.hpp"

using namespace qpgamma;

namespace {

ParityTrace trace(double gamma, double fidelity, std::size_t n, std::uint64_t seed)
{
    ParitySettings s;
    s.gamma = gamma;
    s.fidelity = fidelity;
    s.samples = n;
    RandomStream r(seed);
    return synth_parity_trace(s, {}, r);
}

}  // namespace

TEST(Hmm, CleanTraceDecodesExactly)
{
    const auto t = trace(10.0, 0.9999, 50000, 1);
    const std::vector<std::uint8_t> mask(t.samples.size(), 0);
    const auto d = hmm_decode(t.samples, mask, 1e-3);
    std::size_t same = 0;
    for (std::size_t i = 0; i < t.hidden.size(); ++i)
        same += d.parity[i] == t.hidden[i];
    // Labels are arbitrary up to exchange
    const std::size_t agree = std::max(same, t.hidden.size() - same);
    EXPECT_EQ(agree, t.hidden.size());
    std::size_t visible = 0;
    for (std::size_t i = 1; i < t.hidden.size(); ++i)
        visible += t.hidden[i] != t.hidden[i - 1];
    EXPECT_EQ(d.transitions, visible);
    EXPECT_EQ(d.unmasked_samples, t.samples.size());
}

TEST(Hmm, RecoversSwitchingRate)
{
    const auto t = trace(20.0, 0.95, 300000, 2);
    const std::vector<std::uint8_t> mask(t.samples.size(), 0);
    const auto d = hmm_decode(t.samples, mask, 1e-3);
    EXPECT_NEAR(d.switching_rate, 20.0, 2.0);
    EXPECT_NEAR(std::abs(d.params.mean[1] - d.params.mean[0]), 1.0, 0.05);
}

TEST(Hmm, MaskedSegmentsAreSkipped)
{
    const auto t = trace(5.0, 0.9999, 40000, 3);
    std::vector<std::uint8_t> mask(t.samples.size(), 0);
    std::fill(mask.begin() + 10000, mask.begin() + 30000, 1);
    const auto d = hmm_decode(t.samples, mask, 1e-3);
    EXPECT_EQ(d.unmasked_samples, 20000u);
    for (std::size_t i = 10000; i < 30000; ++i)
        ASSERT_EQ(d.parity[i], 0);
    EXPECT_NEAR(d.switching_rate, d.transitions / (20000 * 1e-3), 1e-9);
}

TEST(Hmm, FullyMaskedThrows)
{
    const std::vector<double> x(100, 0.0);
    const std::vector<std::uint8_t> mask(100, 1);
    EXPECT_THROW(hmm_decode(x, mask, 1e-3), DataError);
}
