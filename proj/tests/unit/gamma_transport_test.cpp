#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "qpgamma/errors.hpp"
#include "qpgamma/gamma_transport.hpp"

using namespace qpgamma;

namespace {

ExperimentConfig nai_config(bool shields)
{
    auto cfg = default_config();
    cfg.geometry.source_distance = 0.41;
    NaIDetector nai;
    nai.center = {0.0, 0.0, -0.002 - 0.5 * nai.length};
    cfg.geometry.nai_detector = nai;
    if (shields) {
        cfg.geometry.shield_slabs = {{Material::Aluminum, 6e-3, 0.005, 0.15},
                                     {Material::Copper, 3e-3, 0.02, 0.15},
                                     {Material::Aluminum, 6e-3, 0.035, 0.15}};
    }
    return cfg;
}

}  // namespace

TEST(Decay, AlwaysEmitsTheHighLine)
{
    RandomStream r(1);
    for (int i = 0; i < 1000; ++i) {
        const auto ev = sample_decay(r, i, {0, 0, 0.2}, 0.9986);
        ASSERT_GE(ev.photons.size(), 1u);
        EXPECT_EQ(ev.photons[0].energy_mev, kLineHigh);
    }
}

TEST(Decay, SecondaryBranchFractionAndIsotropy)
{
    RandomStream r(2);
    const int n = 1000000;
    int two = 0;
    double cz = 0.0, cx = 0.0;
    int photons = 0;
    for (int i = 0; i < n; ++i) {
        const auto ev = sample_decay(r, i, {0, 0, 0.2}, 0.9986);
        two += ev.photons.size() == 2;
        for (const auto& p : ev.photons) {
            cz += p.direction.z;
            cx += p.direction.x;
            ++photons;
            EXPECT_DOUBLE_EQ(p.weight, 1.0);
        }
    }
    EXPECT_NEAR(static_cast<double>(two) / n, 0.9986, 0.001);
    const double sigma = std::sqrt(1.0 / 3.0 / photons);
    EXPECT_LT(std::abs(cz / photons), 3 * sigma);
    EXPECT_LT(std::abs(cx / photons), 3 * sigma);
}

TEST(Decay, BiasedEmissionWeightsAverageToOne)
{
    const auto bias = EmissionBias::toward({0, 0, 0.2}, {0, 0, 0}, 5e-3, 0.99);
    RandomStream r(3);
    double s = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const auto ev = sample_decay(r, i, {0, 0, 0.2}, 0.0, bias);
        s += ev.photons[0].weight;
    }
    EXPECT_NEAR(s / n, 1.0, 0.05);
}

TEST(Compton, ScatteredEnergyWithinKinematicBounds)
{
    const double e = kLineHigh;
    const double lo = e / (1.0 + 2.0 * e / 0.51099895);
    EXPECT_NEAR(lo, 0.214, 0.001);
    RandomStream r(4);
    for (int i = 0; i < 100000; ++i) {
        const double eps = sample_klein_nishina(e, r);
        ASSERT_GE(eps * e, lo - 1e-12);
        ASSERT_LE(eps * e, e);
    }
}

TEST(Compton, MeanEnergyFractionMatchesIntegratedCrossSection)
{
    // d sigma / d eps  ~  1/eps + eps - sin^2(theta)
    const double e = 1.0;
    const double k = e / 0.51099895;
    auto dsig = [k](double eps) {
        const double cost = 1.0 - (1.0 - eps) / (eps * k);
        const double sin2 = 1.0 - cost * cost;
        return (1.0 / eps + eps) * (1.0 - eps * sin2 / (1.0 + eps * eps));
    };
    using boost::math::quadrature::gauss_kronrod;
    const double eps0 = 1.0 / (1.0 + 2.0 * k);
    const double z = gauss_kronrod<double, 61>::integrate(dsig, eps0, 1.0);
    const double m = gauss_kronrod<double, 61>::integrate([&](double x) { return x * dsig(x); }, eps0, 1.0);
    RandomStream r(5);
    double s = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i)
        s += sample_klein_nishina(e, r);
    EXPECT_NEAR(s / n, m / z, 0.002);
}

TEST(Materials, ReferenceCrossSections)
{
    // Free-electron Klein-Nishina cross section at 1 MeV: 0.2112 b
    EXPECT_NEAR(klein_nishina_sigma(1.0), 0.2112e-24, 0.002e-24);
    // Silicon at 1 MeV: mu/rho = 0.0636 cm^2/g
    const double mu = attenuation(Material::Silicon, 1.0).total();
    EXPECT_NEAR(mu / (density(Material::Silicon) * 100.0), 0.0636, 0.003);
    EXPECT_GT(attenuation(Material::Lead, 0.1).photoelectric, attenuation(Material::Lead, 0.1).compton);
    EXPECT_TRUE(std::isinf(attenuation(Material::Absorber, 1.0).total()));
}

TEST(PhotonTransport, VacuumGivesNoDeposits)
{
    TransportGeometry empty;
    RandomStream r(6);
    std::vector<EnergyDeposit> out;
    const double esc = empty.trace({kLineHigh, {0, 0, 0}, {0, 0, -1}, 1.0}, r, 0, out);
    EXPECT_TRUE(out.empty());
    EXPECT_DOUBLE_EQ(esc, kLineHigh * 1000.0);
}

TEST(PhotonTransport, AbsorberSlabStopsEveryPhoton)
{
    TransportGeometry g;
    const Box slab{{-1, -1, -0.02}, {1, 1, -0.01}};
    g.add({VolumeKind::Shield, Material::Absorber, slab, 0.0});
    g.add({VolumeKind::Substrate, Material::Silicon, Box{{-1, -1, -0.2}, {1, 1, -0.1}}, 10e-6});
    RandomStream r(7);
    for (int i = 0; i < 200; ++i) {
        std::vector<EnergyDeposit> out;
        const double esc = g.trace({kLineHigh, {0, 0, 0}, normalized({0.1 * r.normal(), 0.1 * r.normal(), -1}), 1.0},
                                   r, i, out);
        ASSERT_FALSE(out.empty());
        EXPECT_EQ(out.front().volume, VolumeKind::Shield);
        EXPECT_TRUE(slab.contains(out.front().position, 1e-9));
        double sum = esc;
        for (const auto& d : out) {
            EXPECT_EQ(d.volume, VolumeKind::Shield);
            sum += d.energy_kev;
        }
        EXPECT_NEAR(sum, kLineHigh * 1000.0, 1e-6);
    }
}

TEST(PhotonTransport, EnergyIsConservedPerPhoton)
{
    TransportGeometry g;
    g.add({VolumeKind::Substrate, Material::Silicon, Box{{-0.05, -0.05, -0.05}, {0.05, 0.05, 0.0}}, 10e-6});
    g.add({VolumeKind::Shield, Material::Lead, Box{{-0.05, -0.05, 0.01}, {0.05, 0.05, 0.02}}, 50e-6});
    RandomStream r(8);
    for (int i = 0; i < 2000; ++i) {
        std::vector<EnergyDeposit> out;
        const double e = i % 2 ? kLineHigh : kLineLow;
        const Vec3 dir = normalized({r.normal(), r.normal(), r.normal()});
        const double esc = g.trace({e, {0, 0, 0.005}, dir, 1.0}, r, i, out);
        double sum = esc;
        for (const auto& d : out)
            sum += d.energy_kev;
        ASSERT_NEAR(sum, e * 1000.0, 1.0) << "photon " << i;
    }
}

TEST(DecayBatch, ZeroDecaysIsAnError)
{
    EXPECT_THROW(run_decay_batch(default_config(), 0), ConfigError);
}

TEST(DecayBatch, BeamPointingAwayGivesEmptyLog)
{
    BatchOptions o;
    o.fixed_direction = Vec3{0, 0, 1};
    const auto log = run_decay_batch(default_config(), 1, o);
    EXPECT_TRUE(log.deposits.empty());
    EXPECT_TRUE(log.events.empty());
    EXPECT_EQ(log.substrate_hits, 0u);
}

TEST(DecayBatch, HitCountScalesWithDecays)
{
    auto cfg = default_config();
    BatchOptions o;
    o.bias_cone_fraction = 0.99;
    const auto a = run_decay_batch(cfg, 100000, o);
    const auto b = run_decay_batch(cfg, 200000, o);
    ASSERT_GT(a.substrate_hits, 300u);
    const double na = static_cast<double>(a.substrate_hits), nb = static_cast<double>(b.substrate_hits);
    EXPECT_LT(std::abs(nb - 2.0 * na), 3.0 * std::sqrt(2.0 * na));
    // The first half of the longer run replays the shorter one
    std::size_t shared = 0;
    for (const auto& e : b.events)
        shared += e.event_index < 100000 && e.substrate_kev > 0.0;
    EXPECT_EQ(shared, a.substrate_hits);
    // Every substrate deposit is inside the substrate
    const Box sub = cfg.geometry.substrate_box();
    for (const auto& d : a.deposits) {
        if (d.volume == VolumeKind::Substrate) {
            ASSERT_TRUE(sub.contains(d.position, 1e-9));
        }
    }
}

TEST(DecayBatch, BiasedAndAnalogHitRatesAgree)
{
    auto cfg = default_config();
    cfg.geometry.source_distance = 0.02;
    BatchOptions analog;
    analog.bias_cone_fraction = 0.0;
    BatchOptions biased;
    biased.bias_cone_fraction = 0.9;
    const auto a = run_decay_batch(cfg, 1000000, analog);
    const auto b = run_decay_batch(cfg, 100000, biased);
    const double err = std::hypot(a.hit_probability_error, b.hit_probability_error);
    EXPECT_LT(std::abs(a.hit_probability - b.hit_probability), 4.0 * err);
}

TEST(DecayBatch, JobsDoNotChangeResults)
{
    auto cfg = default_config();
    BatchOptions one, four;
    one.bias_cone_fraction = four.bias_cone_fraction = 0.99;
    four.jobs = 4;
    const auto a = run_decay_batch(cfg, 50000, one);
    const auto b = run_decay_batch(cfg, 50000, four);
    EXPECT_EQ(a.hit_probability, b.hit_probability);
    EXPECT_EQ(a.mean_deposit_kev, b.mean_deposit_kev);
    ASSERT_EQ(a.deposits.size(), b.deposits.size());
    for (std::size_t i = 0; i < a.deposits.size(); ++i) {
        EXPECT_EQ(a.deposits[i].event_index, b.deposits[i].event_index);
        EXPECT_EQ(a.deposits[i].energy_kev, b.deposits[i].energy_kev);
    }
}

TEST(Activity, ReferenceEstimates)
{
    EXPECT_NEAR(estimate_activity(17.05, 4905, 1e9).micro_curie, 94.0, 1.0);
    EXPECT_NEAR(estimate_activity(21.26, 5865, 1e9).micro_curie, 98.0, 1.0);
    EXPECT_EQ(estimate_activity(0.0, 10, 1e6).decays_per_second, 0.0);
    EXPECT_THROW(estimate_activity(1.0, 0.0, 1e6), DataError);
    EXPECT_THROW(estimate_activity(1.0, 5.0, 0.0), DataError);
}

TEST(NaI, NoDecaysGivesEmptyHistogram)
{
    const auto s = nai_spectrum(nai_config(false), 0);
    for (double c : s.histogram.counts)
        EXPECT_EQ(c, 0.0);
    EXPECT_EQ(s.total_counts, 0.0);
}

TEST(NaI, MissingDetectorIsAnError)
{
    EXPECT_THROW(nai_spectrum(default_config(), 10), ConfigError);
}

TEST(NaI, BothPhotopeaksStandOut)
{
    BatchOptions o;
    o.bias_cone_fraction = 0.9;
    const auto s = nai_spectrum(nai_config(false), 400000, o);
    auto bin = [&](double kev) {
        return static_cast<std::size_t>((kev - s.histogram.edges.front()) / s.histogram.bin_width());
    };
    for (double line : {kLineLow, kLineHigh}) {
        const std::size_t k = bin(line * 1000.0);
        double side = 0.0;
        for (int d : {-6, -5, -4, 4, 5, 6})
            side += s.histogram.counts[k + d] / 6.0;
        EXPECT_GT(s.histogram.counts[k], 5.0 * side) << line;
    }
    EXPECT_GT(s.peak_high_counts, 0.0);
    EXPECT_GT(s.peak_low_counts, 0.0);
}

TEST(NaI, PeakCountsScaleWithDecays)
{
    const auto cfg = nai_config(false);
    const auto a = nai_spectrum(cfg, 1000000);
    BatchOptions o;
    o.first_event = 1000000;
    const auto b = nai_spectrum(cfg, 1000000, o);
    const auto ab = nai_spectrum(cfg, 2000000);
    EXPECT_NEAR(ab.peak_high_counts, a.peak_high_counts + b.peak_high_counts, 1e-9);
    EXPECT_LT(std::abs(a.peak_high_counts - b.peak_high_counts),
              3.0 * std::sqrt(a.peak_high_counts + b.peak_high_counts));
}

TEST(NaI, ShieldsRaiseTheEventRate)
{
    // Batch spread of the biased estimate gives the error of each mean
    auto rate = [](bool shields) {
        const auto cfg = nai_config(shields);
        std::vector<double> v;
        for (int k = 0; k < 8; ++k) {
            BatchOptions o;
            o.bias_cone_fraction = 0.5;
            o.first_event = static_cast<std::uint64_t>(k) * 500000;
            v.push_back(nai_spectrum(cfg, 500000, o).total_counts / 5e5);
        }
        double m = 0.0, s2 = 0.0;
        for (double x : v)
            m += x / v.size();
        for (double x : v)
            s2 += (x - m) * (x - m) / (v.size() - 1);
        return std::pair{m, std::sqrt(s2 / v.size())};
    };
    const auto [bare, e_bare] = rate(false);
    const auto [shielded, e_sh] = rate(true);
    EXPECT_GT(shielded - bare, 3.0 * std::hypot(e_bare, e_sh));
}
