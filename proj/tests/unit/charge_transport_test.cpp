#include <cmath>

#include <gtest/gtest.h>

#include "qpgamma/charge_transport.hpp"
#include "test_support.hpp"

using namespace qpgamma;
using qpgamma::testing::mean;

namespace {

const Box kBulk{{-5e-3, -5e-3, -5e-3}, {5e-3, 5e-3, 5e-3}};

EnergyDeposit deposit(double kev, Vec3 p = {})
{
    EnergyDeposit d;
    d.energy_kev = kev;
    d.position = p;
    return d;
}

std::vector<double> displacements(const ChargeState& s, Species sp)
{
    std::vector<double> out;
    for (const auto& c : s.carriers)
        if (c.species == sp)
            out.push_back(norm(c.final - c.birth));
    return out;
}

}  // namespace

TEST(Pairs, CountFromEnergy)
{
    TransportParams p;  // f_q 0.30, 3.8 eV, downsample 10
    EXPECT_EQ(tracked_pairs(200.0, p), 1579u);
    EXPECT_EQ(tracked_pairs(0.0, p), 0u);
    EXPECT_TRUE(generate_pairs(deposit(0.0), p).empty());
    const auto c = generate_pairs(deposit(200.0, {1e-3, 0, -1e-4}), p);
    ASSERT_EQ(c.size(), 2u * 1579u);
    double q = 0.0;
    for (const auto& x : c) {
        EXPECT_EQ(x.weight, 10.0);
        EXPECT_EQ(x.birth, (Vec3{1e-3, 0, -1e-4}));
        q += x.charge();
    }
    EXPECT_EQ(q, 0.0);
}

TEST(Propagation, VanishingTrappingLengthStaysPut)
{
    RandomStream r(1);
    ChargeCarrier c;
    c.birth = {0, 0, -2e-4};
    for (int i = 0; i < 100; ++i) {
        const auto f = propagate_carrier(c, 1e-15, kBulk, r);
        EXPECT_LT(norm(f.final - f.birth), 1e-12);
        EXPECT_EQ(f.fate, Fate::Trapped);
    }
}

TEST(Propagation, MeanDisplacementIsTrappingLength)
{
    const double lambda = 50e-6;
    RandomStream r(2);
    ChargeCarrier c;
    std::vector<double> d;
    for (int i = 0; i < 40000; ++i)
        d.push_back(norm(propagate_carrier(c, lambda, kBulk, r).final));
    EXPECT_NEAR(mean(d), lambda, 3.0 * lambda / std::sqrt(d.size()));
}

TEST(Propagation, UpwardCarrierNearTopFaceIsAbsorbedThere)
{
    const Box sub{{-4e-3, -4e-3, -525e-6}, {4e-3, 4e-3, 0.0}};
    RandomStream r(3);
    ChargeCarrier c;
    c.birth = {0, 0, -1e-6};
    int upward = 0, at_top = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto f = propagate_carrier(c, 600e-6, sub, r);
        ASSERT_TRUE(sub.contains(f.final));
        if (f.final.z > c.birth.z) {
            ++upward;
            if (f.fate == Fate::BoundaryAbsorbed && std::abs(f.final.z) < 1e-12)
                ++at_top;
        }
    }
    EXPECT_GT(upward, 1800);
    EXPECT_GT(at_top, 0.98 * upward);
}

TEST(EventTransport, NoDepositsGiveEmptyState)
{
    const auto s = transport_event({}, TransportParams{}, kBulk, 1);
    EXPECT_TRUE(s.carriers.empty());
    EXPECT_EQ(s.net_charge(), 0.0);
}

TEST(EventTransport, TrappingLengthRatioShowsInDisplacements)
{
    TransportParams p;
    p.lambda_e = 40e-6;
    p.lambda_h = 62e-6;  // ratio 1.55
    const std::vector<EnergyDeposit> d{deposit(300.0), deposit(250.0, {1e-4, 0, 0})};
    const auto s = transport_event(d, p, kBulk, 42);
    const auto e = displacements(s, Species::Electron);
    const auto h = displacements(s, Species::Hole);
    ASSERT_EQ(e.size(), h.size());
    const double ratio = mean(h) / mean(e);
    // Exponential lengths: relative error of each mean is 1/sqrt(n)
    const double err = ratio * std::sqrt(2.0 / e.size());
    EXPECT_NEAR(ratio, 1.55, 3.0 * err);
}

TEST(EventTransport, CarriersStayInsideAndFatesPartition)
{
    const Box sub{{-4e-3, -4e-3, -525e-6}, {4e-3, 4e-3, 0.0}};
    const std::vector<EnergyDeposit> d{deposit(400.0, {0, 0, -100e-6}), deposit(80.0, {3.9e-3, 0, -500e-6})};
    const auto s = transport_event(d, TransportParams{}, sub, 7);
    std::size_t trapped = 0, absorbed = 0;
    for (const auto& c : s.carriers) {
        ASSERT_TRUE(sub.contains(c.final));
        (c.fate == Fate::Trapped ? trapped : absorbed) += 1;
    }
    EXPECT_EQ(trapped + absorbed, s.carriers.size());
    EXPECT_GT(trapped, 0u);
    EXPECT_GT(absorbed, 0u);
    EXPECT_EQ(s.net_charge(), 0.0);
    EXPECT_EQ(s.total_pairs, s.carriers.size() / 2 * 10);
}

TEST(EventTransport, HoleLengthLeavesElectronsUntouched)
{
    const Box sub{{-4e-3, -4e-3, -525e-6}, {4e-3, 4e-3, 0.0}};
    const std::vector<EnergyDeposit> d{deposit(300.0, {0, 0, -250e-6})};
    TransportParams a, b;
    a.lambda_h = 600e-6;
    b.lambda_h = 1200e-6;
    const auto sa = transport_event(d, a, sub, 11);
    const auto sb = transport_event(d, b, sub, 11);
    ASSERT_EQ(sa.carriers.size(), sb.carriers.size());
    double ha = 0.0, hb = 0.0;
    for (std::size_t i = 0; i < sa.carriers.size(); ++i) {
        const auto& ca = sa.carriers[i];
        const auto& cb = sb.carriers[i];
        if (ca.species == Species::Electron) {
            EXPECT_EQ(ca.final, cb.final);
        } else {
            const double da = norm(ca.final - ca.birth), db = norm(cb.final - cb.birth);
            EXPECT_GE(db, da);
            ha += da;
            hb += db;
        }
    }
    EXPECT_GT(hb, ha);
}

TEST(EventTransport, SameKeyReproducesExactly)
{
    const std::vector<EnergyDeposit> d{deposit(120.0, {0, 0, -1e-4})};
    const auto a = transport_event(d, TransportParams{}, kBulk, 5);
    const auto b = transport_event(d, TransportParams{}, kBulk, 5);
    const auto c = transport_event(d, TransportParams{}, kBulk, 6);
    ASSERT_EQ(a.carriers.size(), b.carriers.size());
    for (std::size_t i = 0; i < a.carriers.size(); ++i)
        EXPECT_EQ(a.carriers[i].final, b.carriers[i].final);
    EXPECT_NE(a.carriers[0].final, c.carriers[0].final);
}
