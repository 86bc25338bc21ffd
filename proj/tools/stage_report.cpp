#include <cmath>
#include <iostream>

#include "qpgamma/coincidence.hpp"
#include "qpgamma/csv.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/psd.hpp"
#include "qpgamma/records_io.hpp"
#include "stages.hpp"

namespace qpcli {

using namespace qpgamma;
using nlohmann::json;

void run_report(const GlobalOptions& g)
{
    Stage st("report", g);
    const auto& cfg = st.config();
    const std::string rd = kReportDir;
    json j;
    std::vector<std::string> written;

    auto copy = [&](const std::string& from, const std::string& to) {
        if (!st.exists(from))
            return false;
        const fs::path src = st.input(from);
        fs::copy_file(src, st.output(rd + "/" + to), fs::copy_options::overwrite_existing);
        written.push_back(to);
        return true;
    };

    copy(std::string(kChargeDir) + "/rate_vs_distance.csv", "rate_vs_distance.csv");
    copy(std::string(kChargeDir) + "/pcorr.csv", "pair_correlations.csv");
    copy(std::string(kAnalysisDir) + "/tomography_fits.csv", "tomography_fits.csv");
    copy(std::string(kCoincideDir) + "/poisoning.csv", "poisoning.csv");
    copy(std::string(kCoincideDir) + "/pair_rates.csv", "parity_pair_rates.csv");
    copy(std::string(kFootprintDir) + "/contours.csv", "sensing_contours.csv");
    copy(std::string(kFootprintDir) + "/poison_map.csv", "poison_map.csv");
    copy(std::string(kNaIDir) + "/spectrum.csv", "nai_spectrum.csv");
    copy(std::string(kCalibrateDir) + "/surface.csv", "calibration_surface.csv");

    // Jump magnitude histogram from both detection methods
    {
        std::vector<JumpEvent> all;
        for (const std::string f : {"jumps.csv", "tomography_jumps.csv"}) {
            const std::string rel = std::string(kAnalysisDir) + "/" + f;
            if (st.exists(rel)) {
                const auto v = read_jumps(st.input(rel));
                all.insert(all.end(), v.begin(), v.end());
            }
        }
        if (!all.empty()) {
            const auto h = Histogram::uniform(-0.5, 0.5, 50);
            std::vector<double> step(h.counts.size(), 0.0), thr(h.counts.size(), 0.0);
            for (const auto& e : all) {
                auto k = static_cast<std::size_t>(std::clamp((e.magnitude + 0.5) / h.bin_width(), 0.0, 49.0));
                (e.method == JumpMethod::Threshold ? thr : step)[k] += 1.0;
            }
            CsvWriter w(st.output(rd + "/jump_histogram.csv"),
                        {"magnitude_low", "magnitude_high", "step_convolution", "threshold"});
            for (std::size_t k = 0; k < step.size(); ++k) {
                w.cell(h.edges[k]).cell(h.edges[k + 1]).cell(step[k]).cell(thr[k]);
                w.end_row();
            }
            w.close();
            written.push_back("jump_histogram.csv");
            j["jumps"] = all.size();
        }
    }

    // PSD with the fitted Lorentzian per qubit
    const std::string psd = std::string(kAnalysisDir) + "/psd.csv";
    const std::string pjson = std::string(kAnalysisDir) + "/parity.json";
    if (st.exists(psd) && st.exists(pjson)) {
        const CsvTable t = read_csv(st.input(psd));
        const json pj = read_json(st.input(pjson));
        const auto f = t.numbers("frequency_hz");
        std::vector<std::string> header{"frequency_hz"};
        std::vector<std::vector<double>> cols;
        for (const auto& [q, v] : pj.at("qubits").items()) {
            header.push_back(q);
            header.push_back(q + "_fit");
            cols.push_back(t.numbers(q));
            std::vector<double> fit(f.size(), std::nan(""));
            if (v.at("psd").contains("gamma")) {
                const double gm = v["psd"]["gamma"].get<double>();
                const double fl = v["psd"]["floor"].get<double>();
                const double fid = v["psd"]["fidelity"].get<double>();
                for (std::size_t k = 0; k < f.size(); ++k)
                    fit[k] = lorentzian_psd(f[k], gm, 2.0 * fid * fid, fl);
            }
            cols.push_back(std::move(fit));
            j["parity"][q] = v;
        }
        CsvWriter w(st.output(rd + "/parity_psd.csv"), header);
        for (std::size_t k = 0; k < f.size(); ++k) {
            w.cell(f[k]);
            for (const auto& c : cols)
                w.cell(c[k]);
            w.end_row();
        }
        w.close();
        written.push_back("parity_psd.csv");
    }

    const std::string dsum = std::string(kDecayDir) + "/" + kDepositSummary;
    if (st.exists(dsum)) {
        const json d = read_json(st.input(dsum));
        const auto edges = d.at("histogram").at("edges_keV").get<std::vector<double>>();
        const auto counts = d.at("histogram").at("counts").get<std::vector<double>>();
        CsvWriter w(st.output(rd + "/deposit_spectrum.csv"), {"energy_low_keV", "energy_high_keV", "weighted_counts"});
        for (std::size_t k = 0; k < counts.size(); ++k) {
            w.cell(edges[k]).cell(edges[k + 1]).cell(counts[k]);
            w.end_row();
        }
        w.close();
        written.push_back("deposit_spectrum.csv");
        j["mean_deposit_keV"] = d.at("mean_deposit_keV");
        j["substrate_hit_rate_per_s"] = d.at("substrate_hit_rate");
    }
    const std::string js = std::string(kChargeDir) + "/jump_statistics.json";
    if (st.exists(js))
        j["jump_statistics"] = read_json(st.input(js));
    const std::string fj = std::string(kFootprintDir) + "/footprint.json";
    if (st.exists(fj))
        j["footprint"] = read_json(st.input(fj));

    if (written.empty())
        throw DataError("nothing to report in " + st.dir().string() + " (run the pipeline stages first)");

    // Threshold arithmetic with the background jump rate of the sensing qubit
    const double area = cfg.geometry.substrate_size.x * cfg.geometry.substrate_size.y;
    const double r_gamma = impact_rate_from_background(0.002, cfg.analysis.sensing_radius, area);
    j["threshold"] = {{"background_jump_rate", 0.002},
                      {"impact_rate", r_gamma},
                      {"p_th_at_r_th_0.01", threshold_analysis(r_gamma, 0.01)}};
    j["files"] = written;
    write_json(j, st.output(rd + "/report.json"));
    st.commit();
    std::cout << "report: " << written.size() << " tables in " << (st.dir() / rd).string() << "\n";
}

}  // namespace qpcli
