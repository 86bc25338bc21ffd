#include <cmath>
#include <iostream>
#include <map>

#include "qpgamma/calibration.hpp"
#include "qpgamma/coincidence.hpp"
#include "qpgamma/csv.hpp"
#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/impact_simulation.hpp"
#include "qpgamma/poison_footprint.hpp"
#include "qpgamma/records_io.hpp"
#include "qpgamma/units.hpp"
#include "stages.hpp"

namespace qpcli {

using namespace qpgamma;
using nlohmann::json;

namespace {

InducedChargeTable load_table(Stage& st)
{
    auto table = InducedChargeTable::load(st.input(kTableFile));
    const std::string want = table_geometry_hash(st.config().geometry, table.info().spec);
    if (table.info().geometry_hash != want)
        throw DataError("weighting-potential table was built for another geometry; rerun build-table");
    return table;
}

double pair_distance(const ExperimentConfig& c, const std::string& a, const std::string& b)
{
    const Vec2 p = c.island(a).center, q = c.island(b).center;
    return std::hypot(p.x - q.x, p.y - q.y);
}

}  // namespace

void run_simulate_decays(const GlobalOptions& g, const DecayOptions& o)
{
    Stage st("simulate-decays", g);
    BatchOptions b;
    b.first_event = o.first_event;
    b.jobs = st.jobs();
    if (o.bias >= 0.0)
        b.bias_cone_fraction = o.bias;
    const DepositLog log = run_decay_batch(st.config(), o.decays, b);

    const std::string d = kDecayDir;
    for (const char* f : {kDepositsCsv, kEventsCsv, kDepositSummary})
        st.output(d + "/" + f);
    write_deposit_log(log, st.dir() / d);
    st.parameters() = {{"decays", o.decays}, {"first_event", o.first_event}, {"bias", o.bias}};
    st.commit();
    std::cout << "decays " << log.n_decays << ", substrate hits " << log.substrate_hits << ", hit rate "
              << log.substrate_hit_rate << " /s, mean deposit " << log.mean_deposit_kev << " keV\n";
}

void run_build_table(const GlobalOptions& g, const TableOptions& o)
{
    Stage st("build-table", g);
    GridSpec spec;
    spec.refinement = o.refinement;
    const InducedChargeTable table = o.cache.empty()
                                         ? solve_weighting_potential(st.config().geometry, spec)
                                         : cached_weighting_potential(st.config().geometry, spec, o.cache);
    table.save(st.output(kTableFile));
    const auto& info = table.info();
    json j;
    j["geometry_hash"] = info.geometry_hash;
    j["nodes"] = {table.xs().size(), table.ys().size(), table.zs().size()};
    j["iterations"] = info.iterations;
    j["relative_residual"] = info.residual;
    j["bound_violation"] = info.bound_violation;
    j["lateral_extent_m"] = table.lateral_extent();
    write_json(j, st.output(kTableInfo));
    st.parameters() = {{"refinement", o.refinement}};
    st.commit();
    std::cout << "table " << table.xs().size() << "x" << table.ys().size() << "x" << table.zs().size()
              << " nodes, residual " << info.residual << "\n";
}

void run_transport_charges(const GlobalOptions& g, const TransportOptions& o)
{
    Stage st("transport-charges", g);
    const auto& cfg = st.config();
    const std::string dd = kDecayDir;
    for (const char* f : {kDepositsCsv, kEventsCsv, kDepositSummary})
        st.input(dd + "/" + f);
    const DepositLog log = read_deposit_log(st.dir() / dd);
    const InducedChargeTable table = load_table(st);

    // Carrier log for the first few substrate events
    std::map<std::uint64_t, std::vector<EnergyDeposit>> by_event;
    for (const auto& d : log.deposits) {
        if (d.volume != VolumeKind::Substrate)
            continue;
        if (by_event.size() >= o.carrier_events && !by_event.count(d.event_index))
            continue;
        by_event[d.event_index].push_back(d);
    }
    std::vector<ChargeState> states;
    for (const auto& [idx, deps] : by_event)
        states.push_back(transport_event(deps, cfg.transport, cfg.geometry.substrate_box(),
                                         carrier_event_key(cfg.rng.master_seed, idx), idx));
    const std::string cd = kChargeDir;
    write_charge_states(states, st.output(cd + "/carriers.csv"));

    const ImpactSimulation sim = impacts_from_deposits(cfg, table, log, st.jobs());
    st.output(cd + "/" + kImpactsCsv);
    st.output(cd + "/" + kImpactSummary);
    write_impacts(sim, st.dir() / cd);

    const double thr = cfg.analysis.jump_threshold;
    const JumpStatistics js = jump_statistics(sim, thr);
    json stats;
    stats["impacts"] = js.impacts;
    stats["threshold_e"] = thr;
    for (std::size_t q = 0; q < sim.qubits.size(); ++q)
        stats["jump_rate_per_s"][sim.qubits[q]] = sim.jump_rate(q, thr);
    if (js.total > 0) {
        stats["positive_fraction"] = js.asymmetry();
        stats["positive_fraction_error"] = js.asymmetry_error();
    }
    CsvWriter pc(st.output(cd + "/pcorr.csv"), {"qubit_i", "qubit_j", "distance_m", "p_corr", "p_corr_error"});
    for (const auto& [a, b] : cfg.pairs) {
        const std::size_t i = cfg.qubit_index(a), j = cfg.qubit_index(b);
        const bool any = js.counts[i] + js.counts[j] > 0;
        pc.cell(a).cell(b).cell(pair_distance(cfg, a, b));
        pc.cell(any ? js.p_corr(i, j) : std::nan("")).cell(any ? js.p_corr_error(i, j) : std::nan(""));
        pc.end_row();
    }
    pc.close();

    if (!o.distances.empty()) {
        const auto distances = parse_list(o.distances);
        std::vector<double> hit, hit_err, gc, gc_err;
        CsvWriter rv(st.output(cd + "/rate_vs_distance.csv"),
                     {"distance_m", "hit_rate", "hit_rate_error", "gamma_c", "gamma_c_error", "jumps"});
        for (double r : distances) {
            ExperimentConfig c = cfg;
            c.geometry.source_distance = r;
            ImpactOptions io;
            io.jobs = st.jobs();
            const ImpactSimulation s = simulate_impacts(c, table, o.sweep_decays, io);
            const std::size_t q = c.qubit_index(c.charge_sensing_qubit);
            std::size_t jumps = 0;
            for (const auto& rec : s.impacts)
                jumps += std::abs(alias_charge(rec.raw[q])) > thr;
            const double rate = s.jump_rate(q, thr);
            hit.push_back(s.substrate_hit_rate());
            hit_err.push_back(s.hit_probability_error * s.decays_per_second);
            gc.push_back(rate);
            gc_err.push_back(jumps ? rate / std::sqrt(static_cast<double>(jumps)) : 0.0);
            rv.cell(r).cell(hit.back()).cell(hit_err.back()).cell(rate).cell(gc_err.back());
            rv.cell(static_cast<unsigned long long>(jumps));
            rv.end_row();
        }
        rv.close();
        if (distances.size() >= 2) {
            const PowerLaw ph = rate_vs_distance(hit, distances, hit_err);
            stats["hit_rate_exponent"] = {ph.exponent, ph.exponent_error};
            bool all_positive = true;
            for (double v : gc)
                all_positive = all_positive && v > 0.0;
            if (all_positive) {
                const PowerLaw pg = rate_vs_distance(gc, distances, gc_err);
                stats["gamma_c_exponent"] = {pg.exponent, pg.exponent_error};
            }
        }
    }
    write_json(stats, st.output(cd + "/jump_statistics.json"));
    st.parameters() = {{"carrier_events", o.carrier_events}, {"distances", o.distances},
                       {"sweep_decays", o.sweep_decays}};
    st.commit();
    std::cout << "impacts " << sim.impacts.size() << ", jumps above " << thr << "e on "
              << cfg.charge_sensing_qubit << ": " << js.counts[cfg.qubit_index(cfg.charge_sensing_qubit)] << "\n";
}

void run_footprint(const GlobalOptions& g, const FootprintRunOptions& o)
{
    Stage st("footprint", g);
    const auto& cfg = st.config();
    const InducedChargeTable table = load_table(st);
    const ChargeCloud burst = characteristic_burst(cfg, cfg.transport, o.burst_events,
                                                   derive_key(cfg.rng.master_seed, 7));
    qpgamma::FootprintOptions fo;
    fo.spacing = o.spacing_um * units::um;
    const SensingFootprint fp = sensing_footprint(burst, table, fo);

    const std::string fd = kFootprintDir;
    CsvWriter map(st.output(fd + "/sensing_map.csv"), {"x_m", "y_m", "charge_e"});
    const std::size_t n = fp.axis.size();
    for (std::size_t iy = 0; iy < n; ++iy)
        for (std::size_t ix = 0; ix < n; ++ix) {
            map.cell(fp.axis[ix]).cell(fp.axis[iy]).cell(fp.charge[iy * n + ix]);
            map.end_row();
        }
    map.close();
    CsvWriter con(st.output(fd + "/contours.csv"), {"level_e", "line", "x_m", "y_m"});
    json j;
    for (const auto& lvl : fp.contours) {
        j["mean_radius_m"][format_double(lvl.level)] = lvl.mean_radius;
        for (std::size_t l = 0; l < lvl.polylines.size(); ++l)
            for (const auto& p : lvl.polylines[l]) {
                con.cell(lvl.level).cell(static_cast<unsigned long long>(l)).cell(p.x).cell(p.y);
                con.end_row();
            }
    }
    con.close();
    j["burst_events"] = o.burst_events;
    j["burst_net_charge"] = burst.net_charge();

    // Poisoning footprint from measured coincidences, when available
    const std::string pois = std::string(kCoincideDir) + "/poisoning.csv";
    if (st.exists(pois)) {
        const CsvTable t = read_csv(st.input(pois));
        const auto ids = t.strings("qubit");
        const auto p = t.numbers("p_poison");
        std::vector<Vec2> pts;
        std::vector<double> vals;
        const Vec2 centre = cfg.island(cfg.charge_sensing_qubit).center;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (std::isnan(p[i]))
                continue;
            pts.push_back(cfg.island(ids[i]).center);
            vals.push_back(p[i]);
        }
        for (auto family : {ProfileFamily::Uniform, ProfileFamily::Exponential}) {
            FootprintModel start;
            start.family = family;
            start.sensing_radius = cfg.analysis.sensing_radius;
            start.decay_length = 2e-3;
            const std::string key = family == ProfileFamily::Uniform ? "uniform" : "exponential";
            try {
                const FootprintFit f = fit_footprint(start, centre, pts, vals);
                j["poison_fit"][key] = {{"threshold", f.model.threshold},
                                        {"decay_length_m", f.model.decay_length},
                                        {"predicted", f.predicted},
                                        {"rms", f.rms}};
            } catch (const DataError& e) {
                j["poison_fit"][key] = {{"error", e.what()}};
            }
        }
        if (pts.size() >= 4) {
            const GridField m = interpolate_poison_map(pts, vals);
            CsvWriter pm(st.output(fd + "/poison_map.csv"), {"x_m", "y_m", "p_poison"});
            for (std::size_t iy = 0; iy < m.ys.size(); ++iy)
                for (std::size_t ix = 0; ix < m.xs.size(); ++ix) {
                    pm.cell(m.xs[ix]).cell(m.ys[iy]).cell(m.at(ix, iy));
                    pm.end_row();
                }
            pm.close();
        }
    }
    write_json(j, st.output(fd + "/footprint.json"));
    st.parameters() = {{"burst_events", o.burst_events}, {"spacing_um", o.spacing_um}};
    st.commit();
    for (const auto& lvl : fp.contours)
        std::cout << "contour " << lvl.level << "e: mean radius " << lvl.mean_radius * 1e6 << " um\n";
}

void run_calibrate(const GlobalOptions& g, const CalibrateOptions& o)
{
    Stage st("calibrate", g);
    const auto& cfg = st.config();
    const std::string dd = kDecayDir;
    for (const char* f : {kDepositsCsv, kEventsCsv, kDepositSummary})
        st.input(dd + "/" + f);
    const DepositLog log = read_deposit_log(st.dir() / dd);
    const InducedChargeTable table = load_table(st);

    CalibrationGrid grid;
    grid.lambda_e.clear();
    for (double v : parse_list(o.lambda_e_um))
        grid.lambda_e.push_back(v * units::um);
    grid.ratio = parse_list(o.ratio);
    grid.f_q = parse_list(o.f_q);
    CalibrationOptions co;
    co.jobs = st.jobs();
    co.threshold = cfg.analysis.jump_threshold;
    const CalibrationResult res = calibrate_parameters(cfg, table, log, CalibrationTargets{}, grid, co);

    const std::string cd = kCalibrateDir;
    CsvWriter sf(st.output(cd + "/surface.csv"),
                 {"lambda_e_m", "lambda_h_m", "ratio", "f_q", "positive_fraction", "positive_fraction_error",
                  "pcorr_a", "pcorr_a_error", "pcorr_b", "pcorr_b_error", "jump_to_parity", "chi2", "jumps"});
    for (const auto& p : res.surface) {
        sf.cell(p.params.lambda_e).cell(p.params.lambda_h).cell(p.params.lambda_h / p.params.lambda_e);
        sf.cell(p.params.f_q).cell(p.asymmetry).cell(p.asymmetry_error).cell(p.pcorr_a).cell(p.pcorr_a_error);
        sf.cell(p.pcorr_b).cell(p.pcorr_b_error).cell(p.jump_to_parity).cell(p.chi2);
        sf.cell(static_cast<unsigned long long>(p.jumps));
        sf.end_row();
    }
    sf.close();
    const auto& b = res.surface.at(res.best);
    json j;
    j["impacts"] = res.impacts;
    j["best"] = {{"lambda_e_m", b.params.lambda_e}, {"lambda_h_m", b.params.lambda_h}, {"f_q", b.params.f_q},
                 {"chi2", b.chi2},          {"positive_fraction", b.asymmetry},
                 {"pcorr_a", b.pcorr_a},    {"pcorr_b", b.pcorr_b}};
    write_json(j, st.output(cd + "/calibration.json"));
    st.parameters() = {{"lambda_e_um", o.lambda_e_um}, {"ratio", o.ratio}, {"f_q", o.f_q}};
    st.commit();
    std::cout << "best: lambda_e " << b.params.lambda_e * 1e6 << " um, lambda_h " << b.params.lambda_h * 1e6
              << " um, f_q " << b.params.f_q << ", chi2 " << b.chi2 << "\n";
}

void run_nai_validate(const GlobalOptions& g, const NaIOptions& o)
{
    Stage st("nai-validate", g);
    ExperimentConfig cfg = st.config();
    if (!cfg.geometry.nai_detector) {
        // 1" cylinder on the source axis with its near face at the given distance
        NaIDetector nai;
        nai.center = {0.0, 0.0, cfg.geometry.source_distance - o.distance - 0.5 * nai.length};
        cfg.geometry.nai_detector = nai;
    }
    BatchOptions b;
    b.jobs = st.jobs();
    b.bias_cone_fraction = 0.99;
    const NaISpectrum s = nai_spectrum(cfg, o.decays, b);

    const std::string nd = kNaIDir;
    CsvWriter h(st.output(nd + "/spectrum.csv"), {"energy_low_keV", "energy_high_keV", "counts_per_decay"});
    for (std::size_t i = 0; i < s.histogram.counts.size(); ++i) {
        h.cell(s.histogram.edges[i]).cell(s.histogram.edges[i + 1]);
        h.cell(s.histogram.counts[i] / static_cast<double>(s.n_decays));
        h.end_row();
    }
    h.close();
    json j;
    j["decays"] = s.n_decays;
    j["peak_1332_counts"] = s.peak_high_counts;
    j["peak_1173_counts"] = s.peak_low_counts;
    j["total_counts"] = s.total_counts;
    j["measured_peak_rate_per_s"] = o.measured_rate;
    if (s.peak_high_counts > 0.0) {
        const ActivityEstimate a = estimate_activity(o.measured_rate, s.peak_high_counts, static_cast<double>(s.n_decays));
        j["activity_decays_per_s"] = a.decays_per_second;
        j["activity_uci"] = a.micro_curie;
    }
    write_json(j, st.output(nd + "/nai.json"));
    st.parameters() = {{"decays", o.decays}, {"distance_m", o.distance}, {"measured_rate", o.measured_rate}};
    st.commit();
    std::cout << "1.3325 MeV photopeak: " << s.peak_high_counts << " weighted counts in " << s.n_decays
              << " decays\n";
}

}  // namespace qpcli
