#include <cmath>
#include <iostream>
#include <numeric>

#include "qpgamma/coincidence.hpp"
#include "qpgamma/csv.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/hmm.hpp"
#include "qpgamma/impact_simulation.hpp"
#include "qpgamma/masking.hpp"
#include "qpgamma/poison_footprint.hpp"
#include "qpgamma/psd.hpp"
#include "qpgamma/records_io.hpp"
#include "qpgamma/tomography.hpp"
#include "qpgamma/units.hpp"
#include "stages.hpp"

namespace qpcli {

using namespace qpgamma;
using nlohmann::json;

namespace {

const std::string kTruth = std::string(kSynthDir) + "/truth.json";
const std::string kChargeCsv = std::string(kSynthDir) + "/charge.csv";
const std::string kParityCsv = std::string(kSynthDir) + "/parity.csv";
const std::string kTomoCsv = std::string(kSynthDir) + "/tomography.csv";
const std::string kJumps = std::string(kAnalysisDir) + "/jumps.csv";
const std::string kDecoded = std::string(kAnalysisDir) + "/decoded.csv";
const std::string kParityJson = std::string(kAnalysisDir) + "/parity.json";

/// Draw raw shifts from simulated impacts on the charge-sensing qubit,
/// proportionally to the event weights.
class ShiftSampler {
  public:
    ShiftSampler(const ImpactSimulation& sim, std::size_t q)
    {
        double c = 0.0;
        for (const auto& r : sim.impacts) {
            c += r.weight;
            cumulative_.push_back(c);
            raw_.push_back(r.raw.at(q));
        }
    }
    bool empty() const noexcept { return raw_.empty(); }
    double draw(RandomStream& rng) const
    {
        const double u = rng.uniform() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return raw_[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), raw_.size() - 1)];
    }
    const std::vector<double>& values() const noexcept { return raw_; }

  private:
    std::vector<double> cumulative_, raw_;
};

double fidelity_from_hmm(const HmmParams& p)
{
    if (!(p.sigma > 0.0))
        return 1.0;
    const double s = std::abs(p.mean[1] - p.mean[0]) / p.sigma;
    return std::clamp(std::erf(s / (2.0 * std::sqrt(2.0))), 1e-6, 1.0);
}

}  // namespace

void run_synth(const GlobalOptions& g, const SynthOptions& o)
{
    Stage st("synth", g);
    const auto& cfg = st.config();
    if (o.samples < 2 || !(o.dt > 0.0) || !(o.impact_rate >= 0.0))
        throw ConfigError("synth needs at least two samples, a positive period and a non-negative impact rate");

    std::vector<std::string> qubits;
    std::vector<Vec2> centres;
    for (const auto& q : cfg.geometry.qubit_islands) {
        qubits.push_back(q.id);
        centres.push_back(q.center);
    }
    std::vector<double> gammas = parse_list(o.gammas);
    if (gammas.size() == 1)
        gammas.assign(qubits.size(), gammas.front());
    if (gammas.size() != qubits.size())
        throw ConfigError("--gamma needs one value or one per qubit");

    FootprintModel fm;
    fm.family = ProfileFamily::Exponential;
    fm.amplitude = o.poison_scale;
    fm.decay_length = o.poison_length_mm * units::mm;
    fm.threshold = 1.0;
    fm.sensing_radius = cfg.analysis.sensing_radius;
    const std::vector<double> p_poison = footprint_model_eval(fm, cfg.island(cfg.charge_sensing_qubit).center, centres);

    // Impact shifts from the simulation when available
    std::optional<ShiftSampler> sampler;
    const std::string impacts = std::string(kChargeDir) + "/" + kImpactsCsv;
    if (st.exists(impacts)) {
        st.input(impacts);
        st.input(std::string(kChargeDir) + "/" + kImpactSummary);
        const ImpactSimulation sim = read_impacts(st.dir() / kChargeDir);
        if (!sim.impacts.empty())
            sampler.emplace(sim, cfg.qubit_index(cfg.charge_sensing_qubit));
    }

    RandomStream rng = rng_substream(domain_key(cfg.rng.master_seed, StreamDomain::Synthesis), 77);
    std::vector<std::size_t> index;
    std::vector<double> shift;
    if (o.impact_rate > 0.0) {
        const double T = static_cast<double>(o.samples) * o.dt;
        for (double t = rng.exponential() / o.impact_rate; t < T; t += rng.exponential() / o.impact_rate) {
            index.push_back(static_cast<std::size_t>(t / o.dt));
            shift.push_back(sampler ? sampler->draw(rng) : 0.5 - rng.uniform());
        }
    }

    CouplingSettings cs;
    cs.charge.dt = o.dt;
    cs.charge.samples = o.samples;
    cs.charge.reset_interval = static_cast<std::size_t>(cfg.analysis.reset_interval);
    cs.parity.dt = o.dt;
    cs.parity.samples = o.samples;
    cs.parity.fidelity = o.fidelity;
    cs.qubits = qubits;
    cs.gammas = gammas;
    cs.p_poison = p_poison;
    const CoupledRecords rec = events_to_records(shift, index, cs, cfg.rng.master_seed);

    CsvWriter ch(st.output(kChargeCsv), {"index", "shot"});
    for (std::size_t i = 0; i < o.samples; ++i) {
        ch.cell(static_cast<unsigned long long>(i)).cell(static_cast<int>(rec.charge.signal[i]));
        ch.end_row();
    }
    ch.close();
    std::vector<std::string> header{"index"};
    header.insert(header.end(), qubits.begin(), qubits.end());
    CsvWriter pa(st.output(kParityCsv), header);
    for (std::size_t i = 0; i < o.samples; ++i) {
        pa.cell(static_cast<unsigned long long>(i));
        for (const auto& tr : rec.parity)
            pa.cell(tr.samples[i]);
        pa.end_row();
    }
    pa.close();

    // Slow tomography record of the charge-sensing qubit
    JumpProcess jp;
    jp.rate = o.tomo_rate;
    if (sampler)
        jp.magnitudes = sampler->values();
    TomographySettings ts;
    ts.duration = o.tomo_duration;
    RandomStream trng = rng_substream(domain_key(cfg.rng.master_seed, StreamDomain::Synthesis), 78);
    const TomographyStream tomo = synth_tomography_stream(jp, ts, trng);
    CsvWriter tc(st.output(kTomoCsv), {"scan", "time", "ng_ext", "p1", "true_offset"});
    for (std::size_t s = 0; s < tomo.scans.size(); ++s) {
        const auto& sc = tomo.scans[s];
        for (std::size_t k = 0; k < sc.ng_ext.size(); ++k) {
            tc.cell(static_cast<unsigned long long>(s)).cell(sc.time).cell(sc.ng_ext[k]).cell(sc.p1[k]);
            tc.cell(sc.true_offset);
            tc.end_row();
        }
    }
    tc.close();

    json truth;
    truth["dt"] = o.dt;
    truth["samples"] = o.samples;
    truth["reset_interval"] = cs.charge.reset_interval;
    truth["charge"] = {{"d", cs.charge.d}, {"nu", cs.charge.nu}, {"bias", cs.charge.bias}};
    truth["charge_qubit"] = cfg.charge_sensing_qubit;
    truth["qubits"] = qubits;
    truth["gamma"] = gammas;
    truth["p_poison"] = p_poison;
    truth["fidelity"] = o.fidelity;
    truth["impact_index"] = index;
    truth["impact_shift"] = shift;
    std::vector<std::size_t> switches, poisoned;
    for (std::size_t q = 0; q < qubits.size(); ++q) {
        switches.push_back(rec.parity[q].true_switches);
        poisoned.push_back(rec.poisoned[q].size());
    }
    truth["true_switches"] = switches;
    truth["poisoned_impacts"] = poisoned;
    truth["tomography"] = {{"scan_interval", ts.scan_interval}, {"jumps", tomo.jumps.size()}};
    write_json(truth, st.output(kTruth));
    st.parameters() = {{"samples", o.samples},        {"dt", o.dt},
                       {"impact_rate", o.impact_rate}, {"fidelity", o.fidelity},
                       {"gammas", o.gammas},           {"poison_scale", o.poison_scale},
                       {"poison_length_mm", o.poison_length_mm}};
    st.commit();
    std::cout << "synthesised " << o.samples << " samples with " << index.size() << " impacts\n";
}

void run_analyze(const GlobalOptions& g)
{
    Stage st("analyze", g);
    const auto& cfg = st.config();
    const json truth = read_json(st.input(kTruth));
    const CsvTable charge = read_csv(st.input(kChargeCsv));
    const CsvTable parity = read_csv(st.input(kParityCsv));
    const CsvTable tomo = read_csv(st.input(kTomoCsv));

    const double dt = truth.at("dt").get<double>();
    const auto qubits = truth.at("qubits").get<std::vector<std::string>>();
    const std::string cq = truth.at("charge_qubit").get<std::string>();

    // Charge jumps from single-shot monitoring
    OffsetChargeSeries series;
    series.dt = dt;
    series.d = truth.at("charge").at("d").get<double>();
    series.nu = truth.at("charge").at("nu").get<double>();
    series.bias = truth.at("charge").at("bias").get<double>();
    series.signal = charge.numbers("shot");
    const auto reset = truth.at("reset_interval").get<std::size_t>();
    if (reset == 0)
        throw DataError("reset interval must be positive");
    for (std::size_t i = 0; i < series.signal.size(); i += reset)
        series.resets.push_back(i);
    StepOptions so;
    so.average = static_cast<std::size_t>(cfg.analysis.step_average);
    so.kernel = static_cast<std::size_t>(cfg.analysis.step_kernel);
    const auto jumps = detect_steps_singleshot(series, so, cq);
    write_jumps(jumps, st.output(kJumps));

    // Tomography fits and threshold jumps
    const auto scan_id = tomo.numbers("scan"), time = tomo.numbers("time"), ng = tomo.numbers("ng_ext");
    const auto p1 = tomo.numbers("p1"), true_off = tomo.numbers("true_offset");
    std::vector<TomographyScan> scans;
    for (std::size_t i = 0; i < scan_id.size(); ++i) {
        if (i == 0 || scan_id[i] != scan_id[i - 1]) {
            scans.emplace_back();
            scans.back().time = time[i];
            scans.back().true_offset = true_off[i];
        }
        scans.back().ng_ext.push_back(ng[i]);
        scans.back().p1.push_back(p1[i]);
    }
    CsvWriter tf(st.output(std::string(kAnalysisDir) + "/tomography_fits.csv"),
                 {"time", "offset", "nu", "rms", "true_offset"});
    std::vector<TomographyFit> fits;
    std::vector<double> fit_times;
    for (const auto& sc : scans) {
        try {
            const TomographyFit f = fit_tomography(sc);
            fits.push_back(f);
            fit_times.push_back(sc.time);
            tf.cell(sc.time).cell(f.offset).cell(f.nu).cell(f.rms).cell(sc.true_offset);
            tf.end_row();
        } catch (const NumericalError&) {
            // scan without significant modulation: skipped
        }
    }
    tf.close();
    const auto dq = diff_series(fits);
    const auto tjumps = detect_jumps_threshold(dq, cfg.analysis.jump_threshold, cq, fit_times);
    write_jumps(tjumps, st.output(std::string(kAnalysisDir) + "/tomography_jumps.csv"));

    // Parity: PSD fit, masking and HMM decoding per qubit
    json pj;
    std::vector<MaskedDigitalTrace> decoded;
    std::vector<std::vector<double>> psd_power;
    std::vector<double> psd_freq;
    for (const auto& q : qubits) {
        const auto x = parity.numbers(q);
        const auto dig = digitize(x, readout_threshold(x));
        const Spectrum spec = compute_psd(dig, dt, static_cast<std::size_t>(cfg.analysis.psd_segment));
        psd_freq = spec.frequency;
        psd_power.push_back(spec.power);
        json qj;
        PsdFit fit;
        bool fitted = false;
        try {
            fit = fit_lorentzian(spec);
            fitted = true;
            qj["psd"] = {{"gamma", fit.gamma},
                         {"gamma_error", std::sqrt(fit.covariance[0][0])},
                         {"fidelity", fit.fidelity},
                         {"floor", fit.floor},
                         {"chi2_per_dof", fit.chi2_per_dof},
                         {"resolvable", fit.resolvable},
                         {"note", fit.note}};
        } catch (const NumericalError& e) {
            qj["psd"] = {{"error", e.what()}};
        }
        const std::vector<std::uint8_t> none(x.size(), 0);
        const MaskedDigitalTrace first = hmm_decode(x, none, dt);
        const bool use_psd = fitted && fit.resolvable;
        const double gamma = use_psd ? fit.gamma : first.switching_rate;
        const double fidelity = use_psd ? fit.fidelity : fidelity_from_hmm(first.params);
        MaskOptions mo;
        mo.n_average = cfg.analysis.parity_average;
        mo.s_threshold = cfg.analysis.separation_parity;
        std::vector<std::uint8_t> mask = none;
        if (gamma > 0.0 && std::llround(1.0 / (gamma * dt)) <= static_cast<long long>(x.size()))
            mask = mask_trace(x, gamma, dt, std::min(fidelity, 0.999999), mo);
        HmmOptions ho;
        ho.gamma_prior = gamma;
        MaskedDigitalTrace tr = hmm_decode(x, mask, dt, ho);
        qj["mask_gamma"] = gamma;
        qj["mask_fidelity"] = fidelity;
        qj["unmasked_fraction"] = unmasked_fraction(mask);
        qj["hmm_rate"] = tr.switching_rate;
        qj["hmm_transitions"] = tr.transitions;
        qj["hmm_iterations"] = tr.iterations;
        pj[q] = qj;
        decoded.push_back(std::move(tr));
    }
    std::vector<std::string> header{"index"};
    for (const auto& q : qubits) {
        header.push_back(q + "_mask");
        header.push_back(q + "_parity");
    }
    CsvWriter dc(st.output(kDecoded), header);
    const std::size_t n = decoded.empty() ? 0 : decoded.front().parity.size();
    for (std::size_t i = 0; i < n; ++i) {
        dc.cell(static_cast<unsigned long long>(i));
        for (const auto& tr : decoded)
            dc.cell(static_cast<int>(tr.mask[i])).cell(static_cast<int>(tr.parity[i]));
        dc.end_row();
    }
    dc.close();
    std::vector<std::string> ph{"frequency_hz"};
    ph.insert(ph.end(), qubits.begin(), qubits.end());
    CsvWriter ps(st.output(std::string(kAnalysisDir) + "/psd.csv"), ph);
    for (std::size_t k = 0; k < psd_freq.size(); ++k) {
        ps.cell(psd_freq[k]);
        for (const auto& p : psd_power)
            ps.cell(p[k]);
        ps.end_row();
    }
    ps.close();
    json summary;
    summary["dt"] = dt;
    summary["charge_jumps"] = jumps.size();
    summary["tomography_jumps"] = tjumps.size();
    summary["qubits"] = pj;
    write_json(summary, st.output(kParityJson));
    st.commit();
    std::cout << "charge jumps " << jumps.size() << ", tomography jumps " << tjumps.size() << "\n";
    for (std::size_t q = 0; q < qubits.size(); ++q)
        std::cout << qubits[q] << ": decoded rate " << decoded[q].switching_rate << " /s, unmasked "
                  << unmasked_fraction(decoded[q].mask) << "\n";
}

void run_coincide(const GlobalOptions& g, const CoincideOptions& o)
{
    Stage st("coincide", g);
    const auto& cfg = st.config();
    const json summary = read_json(st.input(kParityJson));
    const auto jumps = read_jumps(st.input(kJumps));
    const CsvTable dec = read_csv(st.input(kDecoded));
    const double dt = summary.at("dt").get<double>();

    std::vector<std::string> qubits;
    std::vector<MaskedDigitalTrace> traces;
    for (const auto& [q, v] : summary.at("qubits").items()) {
        qubits.push_back(q);
        MaskedDigitalTrace t;
        t.dt = dt;
        for (double m : dec.numbers(q + "_mask"))
            t.mask.push_back(static_cast<std::uint8_t>(m != 0.0));
        for (double p : dec.numbers(q + "_parity"))
            t.parity.push_back(static_cast<std::uint8_t>(p != 0.0));
        t.switching_rate = v.at("hmm_rate").get<double>();
        t.transitions = v.at("hmm_transitions").get<std::size_t>();
        t.unmasked_samples = static_cast<std::size_t>(std::count(t.mask.begin(), t.mask.end(), 0));
        traces.push_back(std::move(t));
    }
    const std::size_t window = static_cast<std::size_t>(o.window > 0 ? o.window : cfg.analysis.coincidence_window);
    const CoincidenceStats cs = coincidence_scan(jumps, traces, qubits, window);

    const std::string cd = kCoincideDir;
    CsvWriter poison_csv(st.output(cd + "/poisoning.csv"),
                 {"qubit", "counts", "unmasked", "p_obs", "p_obs_low", "p_obs_high", "p_bkgd", "p_poison",
                  "p_poison_error"});
    json j;
    j["window_samples"] = cs.window_samples;
    j["window_seconds"] = cs.window_seconds;
    j["jumps"] = cs.jumps;
    for (const auto& c : cs.qubits) {
        const bool ok = c.unmasked > 0 && c.p_bkgd < 0.5;
        poison_csv.cell(c.qubit).cell(static_cast<unsigned long long>(c.counts)).cell(static_cast<unsigned long long>(c.unmasked));
        poison_csv.cell(c.p_obs).cell(c.p_obs_ci.lower).cell(c.p_obs_ci.upper).cell(c.p_bkgd);
        poison_csv.cell(ok ? c.p_poison.value : std::nan("")).cell(ok ? c.p_poison.error : std::nan(""));
        poison_csv.end_row();
        j["qubits"][c.qubit] = {{"counts", c.counts},         {"unmasked", c.unmasked},
                                {"p_obs", c.p_obs},           {"p_bkgd", c.p_bkgd},
                                {"background_rate", c.background_rate},
                                {"p_poison", c.p_poison.value}, {"p_poison_error", c.p_poison.error}};
    }
    poison_csv.close();

    CsvWriter pr(st.output(cd + "/pair_rates.csv"),
                 {"qubit_i", "qubit_j", "observed_per_s", "observed_error", "background_per_s", "coincidences"});
    const std::size_t pw = static_cast<std::size_t>(cfg.analysis.parity_average);
    for (const auto& [a, b] : cfg.pairs) {
        const auto ia = std::find(qubits.begin(), qubits.end(), a), ib = std::find(qubits.begin(), qubits.end(), b);
        if (ia == qubits.end() || ib == qubits.end())
            continue;
        const ParityPairRate r = pairwise_parity_rate(traces[static_cast<std::size_t>(ia - qubits.begin())],
                                                      traces[static_cast<std::size_t>(ib - qubits.begin())], pw);
        pr.cell(a).cell(b).cell(r.observed).cell(r.observed_error).cell(r.background);
        pr.cell(static_cast<unsigned long long>(r.coincidences));
        pr.end_row();
    }
    pr.close();
    write_json(j, st.output(cd + "/coincidence.json"));
    st.parameters() = {{"window", window}};
    st.commit();
    for (const auto& c : cs.qubits)
        std::cout << c.qubit << ": " << c.counts << "/" << c.unmasked << " p_poison " << c.p_poison.value << "\n";
}

}  // namespace qpcli
