#pragma once

#include <cstdint>
#include <string>

#include "workspace.hpp"

namespace qpcli {

// Artifact paths inside the output directory
inline constexpr const char* kDecayDir = "decays";
inline constexpr const char* kTableFile = "table/weighting_potential.bin";
inline constexpr const char* kTableInfo = "table/table.json";
inline constexpr const char* kChargeDir = "charges";
inline constexpr const char* kSynthDir = "synth";
inline constexpr const char* kAnalysisDir = "analysis";
inline constexpr const char* kCoincideDir = "coincide";
inline constexpr const char* kFootprintDir = "footprint";
inline constexpr const char* kCalibrateDir = "calibrate";
inline constexpr const char* kNaIDir = "nai";
inline constexpr const char* kReportDir = "report";

struct DecayOptions {
    std::uint64_t decays = 200000;
    std::uint64_t first_event = 0;
    double bias = -1.0;  //!< negative keeps the configured value
};

struct TableOptions {
    int refinement = 1;
    std::string cache;
};

struct TransportOptions {
    std::size_t carrier_events = 5;
    std::string distances;
    std::uint64_t sweep_decays = 100000;
};

struct SynthOptions {
    std::size_t samples = 200000;
    double dt = 1e-3;
    double impact_rate = 1.0;
    double fidelity = 0.95;
    std::string gammas = "1.0";
    double poison_scale = 3.0;
    double poison_length_mm = 3.0;
    double tomo_rate = 0.05;
    double tomo_duration = 2000.0;
};

struct CoincideOptions {
    int window = 0;  //!< 0 uses the configured coincidence window
};

struct FootprintRunOptions {
    std::size_t burst_events = 100;
    double spacing_um = 20.0;
};

struct CalibrateOptions {
    std::string lambda_e_um = "300,400,500,600,700,800,900";
    std::string ratio = "1,1.25,1.55,1.85";
    std::string f_q = "0.1,0.2,0.3,0.4,0.5";
};

struct NaIOptions {
    std::uint64_t decays = 1000000;
    double distance = 0.41;
    double measured_rate = 17.05;
};

void run_simulate_decays(const GlobalOptions& g, const DecayOptions& o);
void run_build_table(const GlobalOptions& g, const TableOptions& o);
void run_transport_charges(const GlobalOptions& g, const TransportOptions& o);
void run_synth(const GlobalOptions& g, const SynthOptions& o);
void run_analyze(const GlobalOptions& g);
void run_coincide(const GlobalOptions& g, const CoincideOptions& o);
void run_footprint(const GlobalOptions& g, const FootprintRunOptions& o);
void run_calibrate(const GlobalOptions& g, const CalibrateOptions& o);
void run_nai_validate(const GlobalOptions& g, const NaIOptions& o);
void run_report(const GlobalOptions& g);

}  // namespace qpcli
