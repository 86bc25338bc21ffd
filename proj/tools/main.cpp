#include <iostream>

#include <CLI11.hpp>

#include "qpgamma/errors.hpp"
#include "stages.hpp"

int main(int argc, char** argv)
{
    using namespace qpcli;
    CLI::App app{"Gamma-impact simulation and correlated-error analysis pipeline"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
    auto* seed = app.add_option("--seed", g.seed, "Master seed (overrides the configuration)");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "Run directory (default $QPGAMMA_OUT_DIR or ./qpgamma-run)");
    app.add_flag("--force", g.force, "Ignore manifest hash and configuration checks");
    app.fallthrough();

    DecayOptions decay;
    auto* sd = app.add_subcommand("simulate-decays", "Transport 60Co photons and record energy deposits");
    sd->add_option("--decays", decay.decays, "Number of decays");
    sd->add_option("--first-event", decay.first_event, "Index of the first decay");
    sd->add_option("--bias", decay.bias, "Fraction of photons emitted toward the chip (importance sampling)");

    TableOptions table;
    auto* bt = app.add_subcommand("build-table", "Solve the island weighting potential");
    bt->add_option("--refinement", table.refinement, "Mesh refinement level");
    bt->add_option("--cache", table.cache, "Reuse or fill a cached table at this path")
        ->envname("QPGAMMA_TABLE_CACHE");

    TransportOptions transport;
    auto* tc = app.add_subcommand("transport-charges", "Carrier transport and induced offset charges");
    tc->add_option("--carrier-events", transport.carrier_events, "Events written to the carrier log");
    tc->add_option("--distances", transport.distances, "Source distances in m for the rate sweep, e.g. 0.1,0.2,0.4");
    tc->add_option("--sweep-decays", transport.sweep_decays, "Decays per sweep distance");

    SynthOptions synth;
    auto* sy = app.add_subcommand("synth", "Synthesise charge and parity records");
    sy->add_option("--samples", synth.samples, "Samples per record");
    sy->add_option("--dt", synth.dt, "Sample period in s");
    sy->add_option("--impact-rate", synth.impact_rate, "Impacts per second");
    sy->add_option("--fidelity", synth.fidelity, "Parity readout fidelity");
    sy->add_option("--gamma", synth.gammas, "Background parity switching rate(s) in 1/s");
    sy->add_option("--poison-scale", synth.poison_scale, "Mean tunnelling events at the impact");
    sy->add_option("--poison-length-mm", synth.poison_length_mm, "Decay length of the poisoning profile");
    sy->add_option("--tomo-rate", synth.tomo_rate, "Jump rate of the tomography record in 1/s");
    sy->add_option("--tomo-duration", synth.tomo_duration, "Tomography record length in s");

    auto* an = app.add_subcommand("analyze", "Jump detection, PSD fits, masking and HMM decoding");

    CoincideOptions coincide;
    auto* co = app.add_subcommand("coincide", "Charge-jump / parity-switch coincidences");
    co->add_option("--window", coincide.window, "Coincidence window in samples");

    FootprintRunOptions footprint;
    auto* fp = app.add_subcommand("footprint", "Charge-sensing and poisoning footprints");
    fp->add_option("--burst-events", footprint.burst_events, "Events in the characteristic burst");
    fp->add_option("--spacing-um", footprint.spacing_um, "Map spacing in um");

    CalibrateOptions calibrate;
    auto* ca = app.add_subcommand("calibrate", "Trapping-length and f_q sweep against the targets");
    ca->add_option("--lambda-e-um", calibrate.lambda_e_um, "Electron trapping lengths");
    ca->add_option("--ratio", calibrate.ratio, "Hole / electron trapping-length ratios");
    ca->add_option("--f-q", calibrate.f_q, "Charge production efficiencies");

    NaIOptions nai;
    auto* nv = app.add_subcommand("nai-validate", "NaI spectrum and activity estimate");
    nv->add_option("--decays", nai.decays, "Number of decays");
    nv->add_option("--distance", nai.distance, "Source to scintillator face in m");
    nv->add_option("--measured-rate", nai.measured_rate, "Measured 1.33 MeV photopeak rate in 1/s");

    auto* rp = app.add_subcommand("report", "Collect plot-ready tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    g.seed_given = seed->count() > 0;

    try {
        if (sd->parsed())
            run_simulate_decays(g, decay);
        else if (bt->parsed())
            run_build_table(g, table);
        else if (tc->parsed())
            run_transport_charges(g, transport);
        else if (sy->parsed())
            run_synth(g, synth);
        else if (an->parsed())
            run_analyze(g);
        else if (co->parsed())
            run_coincide(g, coincide);
        else if (fp->parsed())
            run_footprint(g, footprint);
        else if (ca->parsed())
            run_calibrate(g, calibrate);
        else if (nv->parsed())
            run_nai_validate(g, nai);
        else if (rp->parsed())
            run_report(g);
    } catch (const qpgamma::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const qpgamma::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const qpgamma::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
