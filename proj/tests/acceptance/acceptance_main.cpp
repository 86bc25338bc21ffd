// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qpgamma/calibration.hpp"
#include "qpgamma/coincidence.hpp"
#include "qpgamma/electrostatics.hpp"
#include "qpgamma/hmm.hpp"
#include "qpgamma/impact_simulation.hpp"
#include "qpgamma/masking.hpp"
#include "qpgamma/poison_footprint.hpp"
#include "qpgamma/psd.hpp"
#include "qpgamma/tomography.hpp"
#include "test_support.hpp"

using namespace qpgamma;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

template<class... T>
std::string fmt(const char* f, T... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

//---------------------------------------------------------------------------//

void device_poisoning(Outcome& o)
{
    struct Row {
        const char* label;
        int counts, unmasked;
        double p_bkgd, p_poison;
    };
    const Row rows[] = {
        {"nonCu Q1", 1351, 2889, 0.1539, 0.91}, {"nonCu Q2", 1306, 2621, 0.1288, 1.00},
        {"nonCu Q3", 1342, 3150, 0.1173, 0.81}, {"nonCu Q4", 1053, 2593, 0.1101, 0.76},
        {"nonCu Q5", 904, 2344, 0.0981, 0.72},  {"nonCu Q6", 1433, 3014, 0.1355, 0.93},
        {"Cu Q1", 123, 1149, 0.0199, 0.18},     {"Cu Q2", 219, 1398, 0.0730, 0.20},
        {"Cu Q3", 248, 978, 0.0361, 0.47},      {"Cu Q4", 160, 1208, 0.0380, 0.20},
        {"Cu Q5", 718, 1445, 0.0241, 0.99},     {"Cu Q6", 145, 1238, 0.0238, 0.20},
    };
    double worst = 0.0;
    for (const auto& r : rows) {
        const double p_obs = static_cast<double>(r.counts) / r.unmasked;
        const double p = poisoning_probability(p_obs, r.p_bkgd).raw;
        worst = std::max(worst, std::abs(p - r.p_poison));
        o.check(std::abs(p - r.p_poison) <= 0.01, fmt("%s %.3f vs %.2f", r.label, p, r.p_poison));
    }
    o.detail << fmt("12 rows, max |dp| = %.4f", worst);
}

void activity(Outcome& o)
{
    const double a = estimate_activity(17.05, 4905, 1e9).micro_curie;
    const double b = estimate_activity(21.26, 5865, 1e9).micro_curie;
    o.detail << fmt("%.2f uCi, %.2f uCi", a, b);
    o.check(std::abs(a - 94.0) <= 1.0, "first estimate");
    o.check(std::abs(b - 98.0) <= 1.0, "second estimate");
}

void threshold(Outcome& o)
{
    const double p = threshold_analysis(0.04, 1e-2);
    const auto& g = default_config().geometry;
    const double r = impact_rate_from_background(0.002, default_config().analysis.sensing_radius,
                                                 g.substrate_size.x * g.substrate_size.y);
    o.detail << fmt("p_th = %.6f, R_gamma = %.4f /s", p, r);
    o.check(p == 0.25, "p_th exactly 0.25");
    o.check(std::abs(r - 0.04) <= 0.004, "R_gamma within 10% of 0.04");
}

// Shared by criteria 4 and 5: three distances, 1e6 biased decays each
struct DistanceSweep {
    std::vector<double> distance, hit_rate, hit_error, gamma_c, gamma_c_error;
    double mean_deposit_kev = 0.0;
    DepositLog log_20cm;  //!< reused by the calibration and correlation criteria
};

const DistanceSweep& distance_sweep()
{
    static const DistanceSweep sweep = [] {
        DistanceSweep s;
        const auto& table = qpgamma::testing::default_table();
        for (double r : {0.1, 0.2, 0.4}) {
            ExperimentConfig cfg = default_config();
            cfg.geometry.source_distance = r;
            BatchOptions bo;
            bo.bias_cone_fraction = 0.99;
            const DepositLog log = run_decay_batch(cfg, 1000000, bo);
            const ImpactSimulation sim = impacts_from_deposits(cfg, table, log);
            s.distance.push_back(r);
            s.hit_rate.push_back(sim.substrate_hit_rate());
            s.hit_error.push_back(sim.hit_probability_error * sim.decays_per_second);
            // Charge-jump rate averaged over the qubits, with its weighted spread
            double rate = 0.0, w2 = 0.0;
            for (std::size_t q = 0; q < sim.qubits.size(); ++q)
                rate += sim.jump_rate(q) / sim.qubits.size();
            for (const auto& imp : sim.impacts) {
                double frac = 0.0;
                for (std::size_t q = 0; q < sim.qubits.size(); ++q)
                    frac += std::abs(alias_charge(imp.raw[q])) > 0.15 ? 1.0 / sim.qubits.size() : 0.0;
                w2 += imp.weight * imp.weight * frac * frac;
            }
            s.gamma_c.push_back(rate);
            s.gamma_c_error.push_back(std::sqrt(w2) / static_cast<double>(sim.n_decays) * sim.decays_per_second);
            if (r == 0.2) {
                s.mean_deposit_kev = log.mean_deposit_kev;
                s.log_20cm = log;
            }
        }
        return s;
    }();
    return sweep;
}

void inverse_square(Outcome& o)
{
    const auto& s = distance_sweep();
    const PowerLaw hits = rate_vs_distance(s.hit_rate, s.distance, s.hit_error);
    const PowerLaw jumps = rate_vs_distance(s.gamma_c, s.distance, s.gamma_c_error);
    o.detail << fmt("hit-rate exponent %.3f +- %.3f, jump-rate exponent %.3f +- %.3f", hits.exponent,
                    hits.exponent_error, jumps.exponent, jumps.exponent_error);
    o.check(std::abs(hits.exponent + 2.0) <= 0.1, "hit-rate exponent");
    o.check(std::abs(jumps.exponent + 2.0) <= 0.1, "jump-rate exponent");
}

void mean_deposit(Outcome& o)
{
    const double e = distance_sweep().mean_deposit_kev;
    o.detail << fmt("mean substrate deposit %.1f keV", e);
    o.check(std::abs(e - 192.0) <= 0.2 * 192.0, "within 20% of 192 keV");
}

void footprint(Outcome& o)
{
    const TransportParams p{600e-6, 930e-6, 0.30, 3.8, 10};
    const ChargeCloud burst = characteristic_burst(default_config(), p, 100, default_config().rng.master_seed);
    const SensingFootprint fp = sensing_footprint(burst, qpgamma::testing::default_table());
    const double r15 = fp.contours.at(0).mean_radius, r10 = fp.contours.at(1).mean_radius;
    o.detail << fmt("0.15e radius %.0f um, 0.1e radius %.0f um", r15 * 1e6, r10 * 1e6);
    o.check(std::abs(r15 - 1060e-6) <= 0.2 * 1060e-6, "0.15e radius within 20% of 1060 um");
    o.check(r10 > r15, "0.1e radius exceeds 0.15e radius");
}

void calibration(Outcome& o)
{
    const auto& table = qpgamma::testing::default_table();
    const DepositLog& log = distance_sweep().log_20cm;
    const CalibrationGrid grid;
    CalibrationResult res = calibrate_parameters(default_config(), table, log, CalibrationTargets{}, grid);

    auto index_of = [&](double le, double ratio, double fq) {
        for (std::size_t i = 0; i < res.surface.size(); ++i) {
            const auto& t = res.surface[i].params;
            if (std::abs(t.lambda_e - le) < 1e-9 && std::abs(t.lambda_h / t.lambda_e - ratio) < 1e-9
                && std::abs(t.f_q - fq) < 1e-9)
                return i;
        }
        return res.surface.size();
    };
    auto cell = [&](std::size_t i) {
        const auto& t = res.surface[i].params;
        return std::array<std::size_t, 3>{
            static_cast<std::size_t>(std::find_if(grid.lambda_e.begin(), grid.lambda_e.end(),
                                                  [&](double v) { return std::abs(v - t.lambda_e) < 1e-9; })
                                     - grid.lambda_e.begin()),
            static_cast<std::size_t>(std::find_if(grid.ratio.begin(), grid.ratio.end(),
                                                  [&](double v) { return std::abs(v * t.lambda_e - t.lambda_h) < 1e-9; })
                                     - grid.ratio.begin()),
            static_cast<std::size_t>(std::find_if(grid.f_q.begin(), grid.f_q.end(),
                                                  [&](double v) { return std::abs(v - t.f_q) < 1e-9; })
                                     - grid.f_q.begin())};
    };

    const std::size_t target = index_of(600e-6, 1.55, 0.3);
    const std::size_t ratio1 = index_of(600e-6, 1.0, 0.3);
    o.check(target < res.surface.size() && ratio1 < res.surface.size(), "reference cells on the grid");
    if (!o.pass)
        return;

    const std::size_t best = res.best;
    const auto bc = cell(best), tc = cell(target);
    std::size_t dist = 0;
    for (int k = 0; k < 3; ++k)
        dist = std::max(dist, bc[k] > tc[k] ? bc[k] - tc[k] : tc[k] - bc[k]);
    const auto& bp = res.surface[best];
    const double asym1 = res.surface[ratio1].asymmetry;

    // Self-consistency: targets from known cells come back exactly
    bool self = true;
    CalibrationResult copy = res;
    for (std::size_t k : {target, ratio1, std::size_t{0}, res.surface.size() - 1}) {
        rescore(copy, targets_from_point(copy, k));
        self = self && copy.best == k;
    }

    o.detail << fmt("self-consistency %s; optimum (%.0f um, %.0f um, %.2f) chi2 %.1f, %zu cells from "
                    "(600 um, 930 um, 0.30); ratio-1 positive fraction %.3f +- %.3f",
                    self ? "ok" : "broken", bp.params.lambda_e * 1e6, bp.params.lambda_h * 1e6, bp.params.f_q,
                    bp.chi2, dist, asym1, res.surface[ratio1].asymmetry_error);
    const auto& ref = res.surface[target];
    o.detail << fmt("; reference cell chi2 %.1f, asymmetry %.3f, p_corr %.3f / %.3f", ref.chi2, ref.asymmetry,
                    ref.pcorr_a, ref.pcorr_b);
    o.check(self, "targets from a known cell recovered");
    o.check(dist <= 1, "optimum within one grid cell");
    o.check(std::abs(asym1 - 0.67) <= 0.10, "ratio-1 positive fraction in 0.67 +- 0.10");
}

//---------------------------------------------------------------------------//

void closed_loop(Outcome& o)
{
    // Parity rates by PSD and HMM
    struct Case {
        double gamma, dt;
        std::uint64_t seed;
    };
    for (const Case c : {Case{1.0, 1e-2, 11}, Case{10.0, 1e-3, 12}, Case{50.0, 2e-4, 13}}) {
        ParitySettings ps;
        ps.gamma = c.gamma;
        ps.dt = c.dt;
        ps.fidelity = 0.9;
        ps.samples = 1000000;
        RandomStream r(c.seed);
        const ParityTrace tr = synth_parity_trace(ps, {}, r);
        const auto dig = digitize(tr.samples, readout_threshold(tr.samples));
        const PsdFit fit = fit_lorentzian(compute_psd(dig, c.dt, 8192));
        const auto mask = mask_trace(tr.samples, fit.gamma, c.dt, std::min(fit.fidelity, 0.999999));
        HmmOptions ho;
        ho.gamma_prior = fit.gamma;
        const MaskedDigitalTrace dec = hmm_decode(tr.samples, mask, c.dt, ho);
        o.detail << fmt("G=%g: PSD %.2f HMM %.2f; ", c.gamma, fit.gamma, dec.switching_rate);
        o.check(fit.resolvable && std::abs(fit.gamma - c.gamma) <= 0.1 * c.gamma, fmt("PSD rate at %g", c.gamma));
        o.check(std::abs(dec.switching_rate - c.gamma) <= 0.1 * c.gamma, fmt("HMM rate at %g", c.gamma));
    }

    // Charge-jump rate from a tomography record
    {
        const double rate = 0.002;
        TomographySettings ts;
        ts.duration = 1e5;
        JumpProcess jp;
        jp.rate = rate;
        RandomStream mags(21);
        for (int k = 0; k < 200; ++k) {
            const double m = 0.18 + 0.06 * mags.uniform();
            jp.magnitudes.push_back(k % 2 ? m : -m);
        }
        RandomStream r(22);
        const auto stream = synth_tomography_stream(jp, ts, r);
        std::vector<TomographyFit> fits;
        std::vector<double> times;
        for (const auto& s : stream.scans) {
            fits.push_back(fit_tomography(s));
            times.push_back(s.time);
        }
        const auto dq = diff_series(fits);
        const auto jumps = detect_jumps_threshold(dq, 0.15, "Q2", times);
        const RateEstimate est = jump_rate(jumps, ts.duration);
        o.detail << fmt("Gc planted %.4f, measured %.5f [%.5f, %.5f] (%zu planted); ", rate, est.rate, est.lower,
                        est.upper, stream.jumps.size());
        o.check(est.lower <= rate && rate <= est.upper, "Gc inside the Poisson interval");
    }

    // Poisoning profile through charge-step detection, masking, HMM and coincidences
    {
        CouplingSettings cs;
        cs.charge.samples = cs.parity.samples = 1000000;
        cs.parity.fidelity = 0.95;
        cs.qubits = {"Q1", "Q2", "Q3", "Q4"};
        cs.gammas = {1, 1, 1, 1};
        cs.p_poison = {1.0, 0.8, 0.5, 0.2};
        std::vector<std::size_t> counts(4), unmasked(4);
        std::vector<double> bkgd(4);
        const int runs = 9;
        for (int run = 0; run < runs; ++run) {
            std::vector<std::size_t> idx;
            std::vector<double> shift;
            RandomStream r(100 + run);
            for (std::size_t k = 1000; k < 999000; k += 2500 + static_cast<std::size_t>(r.uniform() * 2500)) {
                idx.push_back(k);
                const double m = 0.15 + 0.3 * r.uniform();
                shift.push_back(r.uniform() < 0.5 ? m : -m);
            }
            const CoupledRecords rec = events_to_records(shift, idx, cs, 200 + run);
            const auto jumps = detect_steps_singleshot(rec.charge, StepOptions{}, "Q2");
            std::vector<MaskedDigitalTrace> decoded;
            for (const auto& p : rec.parity) {
                const auto m = mask_trace(p.samples, 1.0, p.dt, p.fidelity);
                decoded.push_back(hmm_decode(p.samples, m, p.dt));
            }
            const auto stats = coincidence_scan(jumps, decoded, cs.qubits, 100);
            for (std::size_t q = 0; q < 4; ++q) {
                counts[q] += stats.qubits[q].counts;
                unmasked[q] += stats.qubits[q].unmasked;
                bkgd[q] += stats.qubits[q].p_bkgd / runs;
            }
        }
        for (std::size_t q = 0; q < 4; ++q) {
            const auto pe = poisoning_probability(static_cast<double>(counts[q]) / unmasked[q], bkgd[q], unmasked[q]);
            o.detail << fmt("p%zu %.3f/%.2f (%zu windows) ", q + 1, pe.raw, cs.p_poison[q], unmasked[q]);
            o.check(std::abs(pe.raw - cs.p_poison[q]) <= 0.05, fmt("p_poison of qubit %zu", q + 1));
        }
    }
}

void masking(Outcome& o)
{
    using Big = boost::multiprecision::cpp_bin_float_50;
    double worst = 0.0;
    for (int k = 0; k <= 499; ++k) {
        const double f = 0.5 + 0.499 * k / 499.0;
        const Big e = boost::math::erf_inv(Big(f)) * boost::multiprecision::sqrt(Big(40));
        const Big s(3.29);
        const Big ref = boost::multiprecision::sqrt((1 + s * s / 4) / (1 + 2 * e * e));
        worst = std::max(worst, std::abs(masking_alpha(f, 40, 3.29) - ref.convert_to<double>()));
    }
    o.check(worst <= 1e-6, "alpha vs high-precision oracle");

    ParitySettings ps;
    ps.gamma = 1.0;
    ps.fidelity = 0.95;
    ps.samples = 1000000;
    // Episodes span many masking windows (1000 samples at this rate)
    std::vector<DegeneracyEpisode> ep;
    for (std::size_t k = 0; k < 10; ++k)
        ep.push_back({50000 + k * 95000, 20000, 1.0});
    RandomStream r(17);
    const auto tr = synth_parity_trace(ps, ep, r);
    const auto mask = mask_trace(tr.samples, 1.0, ps.dt, ps.fidelity);
    std::vector<std::uint8_t> truth(mask.size(), 0);
    for (const auto& e : ep)
        std::fill(truth.begin() + e.start, truth.begin() + e.start + e.length, 1);
    double in = 0, in_masked = 0, out = 0, out_kept = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (truth[i]) {
            ++in;
            in_masked += mask[i];
        } else {
            ++out;
            out_kept += !mask[i];
        }
    }
    o.detail << fmt("max |alpha - oracle| = %.2e; episodes masked %.3f, clean kept %.3f", worst, in_masked / in,
                    out_kept / out);
    o.check(in_masked / in >= 0.9, "episodes >= 90% masked");
    o.check(out_kept / out >= 0.95, "clean segments >= 95% unmasked");
}

void correlations(Outcome& o)
{
    auto planted = [](double p_own, double p_common, std::size_t n, std::uint64_t seed) {
        RandomStream r(seed);
        std::pair<std::vector<double>, std::vector<double>> s;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) + 0.5;
            const bool c = r.uniform() < p_common;
            if (c || r.uniform() < p_own)
                s.first.push_back(t);
            if (c || r.uniform() < p_own)
                s.second.push_back(t);
        }
        return s;
    };
    // 0.1 s windows over ~12 h of jumps at ~0.02 /s per stream
    const std::size_t bins = 432000;
    const auto a = planted(0.002, 0.0, bins, 1);
    const double same = correlation_probability(a.first, a.first, bins, 1.0).p_corr;
    const double indep = correlation_probability(a.first, a.second, bins, 1.0).p_corr;
    const double common = 0.25 * 0.02;
    const auto c = planted((0.02 - common) / (1.0 - common), common, bins, 2);
    const PairStats pc = correlation_probability(c.first, c.second, bins, 1.0);

    // Reference transport parameters of the default configuration
    const ExperimentConfig cfg = default_config();
    const auto sim = impacts_from_deposits(cfg, qpgamma::testing::default_table(), distance_sweep().log_20cm);
    const auto js = jump_statistics(sim);
    const std::size_t q2 = cfg.qubit_index("Q2"), q4 = cfg.qubit_index("Q4"), q5 = cfg.qubit_index("Q5");
    const double p24 = js.p_corr(q2, q4), p25 = js.p_corr(q2, q5);
    const double e24 = js.p_corr_error(q2, q4), e25 = js.p_corr_error(q2, q5);

    o.detail << fmt("identical %.6f, independent %.4f, planted %.4f; simulated p24 %.3f +- %.3f, far pair "
                    "Q2Q5 %.4f +- %.4f",
                    same, indep, pc.p_corr, p24, e24, p25, e25);
    o.check(same == 1.0, "identical streams give exactly 1");
    o.check(std::abs(indep) < 0.02, "independent streams");
    o.check(std::abs(pc.p_corr - 0.25) <= 0.02, "planted 0.25");
    o.check(std::abs(p24 - 0.23) <= 0.05, "p_corr of the 2.04 mm pair");
    o.check(std::abs(p25) <= 2.0 * e25, "far pair consistent with 0");
}

void invariants(Outcome& o)
{
    RandomStream r(2024);
    std::size_t cases = 0;

    // Aliasing idempotence and integer invariance
    bool alias_ok = true;
    for (int k = 0; k < 1000; ++k, ++cases) {
        const double q = 20.0 * (r.uniform() - 0.5);
        const double a = alias_charge(q);
        alias_ok = alias_ok && alias_charge(a) == a && a > -0.5 && a <= 0.5
                   && std::abs(alias_charge(q + 3.0) - a) < 1e-12;
    }
    o.check(alias_ok, "aliasing");

    // Weighting-potential maximum principle on every node
    const auto& table = qpgamma::testing::default_table();
    bool wp_ok = table.info().bound_violation < 1e-6;
    for (double v : table.values())
        wp_ok = wp_ok && v >= 0.0 && v <= 1.0;
    cases += table.values().size();
    o.check(wp_ok, "maximum principle");

    // Linearity of the induced charge
    const Box sub = default_config().geometry.substrate_box();
    bool lin_ok = true;
    for (int k = 0; k < 1000; ++k, ++cases) {
        std::vector<ChargeCarrier> a, b;
        for (int n = 0; n < 20; ++n) {
            ChargeCarrier c;
            c.species = r.uniform() < 0.5 ? Species::Electron : Species::Hole;
            c.weight = 1.0 + std::floor(10 * r.uniform());
            c.final = {(r.uniform() - 0.5) * 4e-3, (r.uniform() - 0.5) * 4e-3, sub.lo.z + r.uniform() * (sub.hi.z - sub.lo.z)};
            (n % 2 ? a : b).push_back(c);
        }
        std::vector<ChargeCarrier> all = a;
        all.insert(all.end(), b.begin(), b.end());
        const Vec2 island{(r.uniform() - 0.5) * 2e-3, (r.uniform() - 0.5) * 2e-3};
        const double qa = induced_charge(a, table, island), qb = induced_charge(b, table, island);
        lin_ok = lin_ok && std::abs(induced_charge(all, table, island) - (qa + qb)) < 1e-12;
        for (auto& c : a)
            c.weight *= 3.0;
        lin_ok = lin_ok && std::abs(induced_charge(a, table, island) - 3.0 * qa) < 1e-9;
    }
    o.check(lin_ok, "linearity");

    // Downsampling equivalence: k_ds = 1 and 10 agree in the mean
    {
        EnergyDeposit d;
        d.energy_kev = 150.0;
        d.position = {0, 0, -120e-6};
        const std::vector<EnergyDeposit> deps{d};
        double m[2] = {0, 0}, v[2] = {0, 0};
        const int n = 40;
        for (int s = 0; s < 2; ++s) {
            TransportParams p;
            p.downsample = s == 0 ? 1 : 10;
            std::vector<double> q;
            for (int k = 0; k < n; ++k, ++cases)
                q.push_back(induced_charge(transport_event(deps, p, sub, 5000 + k).carriers, table, {0, 0}));
            m[s] = qpgamma::testing::mean(q);
            v[s] = std::pow(qpgamma::testing::stddev(q), 2) / n;
        }
        o.check(std::abs(m[0] - m[1]) <= 3.0 * std::sqrt(v[0] + v[1]), "downsampling equivalence");
    }

    // Poisson footprint: probability never increases with distance
    bool mono = true;
    for (int k = 0; k < 1000; ++k, ++cases) {
        FootprintModel fm;
        fm.family = ProfileFamily::Exponential;
        fm.amplitude = 0.1 + 5.0 * r.uniform();
        fm.threshold = 0.1 + 2.0 * r.uniform();
        fm.decay_length = 0.1e-3 + 3e-3 * r.uniform();
        const double ang = 2.0 * M_PI * r.uniform();
        std::vector<Vec2> pts;
        for (int s = 0; s < 8; ++s)
            pts.push_back({s * 0.8e-3 * std::cos(ang), s * 0.8e-3 * std::sin(ang)});
        const auto p = footprint_model_eval(fm, {0, 0}, pts);
        for (std::size_t s = 1; s < p.size(); ++s)
            mono = mono && p[s] <= p[s - 1] + 1e-12;
    }
    o.check(mono, "footprint monotonicity");

    // Determinism under worker-count changes
    BatchOptions b1, b4;
    b1.bias_cone_fraction = b4.bias_cone_fraction = 0.99;
    b4.jobs = 4;
    const auto l1 = run_decay_batch(default_config(), 50000, b1);
    const auto l4 = run_decay_batch(default_config(), 50000, b4);
    bool det = l1.deposits.size() == l4.deposits.size() && l1.hit_probability == l4.hit_probability
               && l1.mean_deposit_kev == l4.mean_deposit_kev;
    for (std::size_t i = 0; det && i < l1.deposits.size(); ++i)
        det = l1.deposits[i].energy_kev == l4.deposits[i].energy_kev && l1.deposits[i].position == l4.deposits[i].position;
    cases += l1.deposits.size();
    o.check(det, "determinism across --jobs");

    o.detail << fmt("%zu property cases", cases);
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "device poisoning probabilities", device_poisoning},
        {2, "activity estimation", activity},
        {3, "threshold arithmetic", threshold},
        {4, "inverse-square scaling", inverse_square},
        {5, "mean substrate deposit", mean_deposit},
        {6, "charge-sensing footprint", footprint},
        {7, "calibration sweep", calibration},
        {8, "estimator closed loop", closed_loop},
        {9, "masking", masking},
        {10, "correlation probabilities", correlations},
        {11, "invariant suites", invariants},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s: %s (%.0f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
