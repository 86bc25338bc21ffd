#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpgamma/rng.hpp"

namespace qpgamma {

/// Qubit 1-state probability after the tomography sequence:
/// P1 = (d + nu cos(pi cos(2 pi n_g))) / 2.
double tomography_response(double ng, double d, double nu) noexcept;

struct TomographySettings {
    double d = 1.0;
    double nu = 0.8;
    int points = 40;           //!< gate-charge points per scan over [0, 1)
    int shots = 200;           //!< single shots per point
    double scan_interval = 10.0;  //!< seconds between scans
    double duration = 1000.0;     //!< seconds
};

struct TomographyScan {
    double time = 0.0;
    std::vector<double> ng_ext;
    std::vector<double> p1;
    double true_offset = 0.0;  //!< delta n_g at scan time, aliased to (-0.5, 0.5]
};

/// Jump process: Poisson arrivals at `rate` with magnitudes drawn from
/// `magnitudes` (empirical, raw elementary charges) or uniformly from
/// (-0.5, 0.5] when empty.
struct JumpProcess {
    double rate = 0.0;
    std::vector<double> magnitudes;
};

struct PlantedJump {
    double time = 0.0;
    double raw = 0.0;      //!< injected shift
    double aliased = 0.0;  //!< raw folded into (-0.5, 0.5]
};

struct TomographyStream {
    std::vector<TomographyScan> scans;
    std::vector<PlantedJump> jumps;
};

TomographyStream synth_tomography_stream(const JumpProcess& process, const TomographySettings& settings,
                                         RandomStream& stream);

/// Parity readout model: hidden symmetric telegraph process with switching
/// rate gamma; samples are state means (0 or separation, in units of the
/// noise sigma) plus Gaussian noise. The separation follows from the
/// state-detection error (1 - F)/2, i.e. s = 2 sqrt(2) erfinv(F).
struct ParitySettings {
    double gamma = 10.0;   //!< 1/s
    double fidelity = 0.9;
    double dt = 1e-3;
    std::size_t samples = 100000;
    double sigma = 1.0;    //!< readout noise; 0 gives a clean two-level trace
    std::string qubit = "Q1";
};

/// Interval where the two state means collapse to their midpoint.
struct DegeneracyEpisode {
    std::size_t start = 0;
    std::size_t length = 0;
    double sigma_scale = 1.0;  //!< noise multiplier inside the episode
};

struct ParityTrace {
    double dt = 0.0;
    double fidelity = 1.0;
    double separation = 0.0;
    std::string qubit;
    std::vector<double> samples;
    // Ground truth
    std::vector<std::uint8_t> hidden;
    std::size_t true_switches = 0;  //!< continuous-time flips, including unresolved ones
    std::vector<DegeneracyEpisode> episodes;
};

/// State separation in noise units for fidelity F.
double separation_from_fidelity(double fidelity);

ParityTrace synth_parity_trace(const ParitySettings& settings, const std::vector<DegeneracyEpisode>& episodes,
                               RandomStream& stream);

/// Same, with extra forced flips (each realised with probability 1/2) at the
/// given sample indices, e.g. poisoning by an impact.
ParityTrace synth_parity_trace(const ParitySettings& settings, const std::vector<DegeneracyEpisode>& episodes,
                               const std::vector<std::size_t>& forced_flip_candidates, RandomStream& stream);

/// Single-point charge monitoring between bias resets: each shot is a 0/1
/// outcome with probability P1 at (bias point + offset drift since reset).
struct SingleShotSettings {
    double d = 1.0;
    double nu = 0.8;
    double bias = 0.25;             //!< gate charge set at every reset
    std::size_t reset_interval = 5000;
    double dt = 1e-3;
    std::size_t samples = 100000;
};

struct OffsetChargeSeries {
    double dt = 0.0;
    double d = 1.0;
    double nu = 0.8;
    double bias = 0.25;
    std::vector<double> signal;          //!< single-shot outcomes (0/1)
    std::vector<std::size_t> resets;     //!< sample index of every bias reset
    std::vector<std::size_t> jump_index;  //!< ground truth
    std::vector<double> jump_raw;
};

/// Shots with jumps at the given sample indices and raw magnitudes.
OffsetChargeSeries synth_singleshot_series(const SingleShotSettings& settings,
                                           const std::vector<std::size_t>& jump_index,
                                           const std::vector<double>& jump_raw, RandomStream& stream);

}  // namespace qpgamma
