#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qpgamma/hmm.hpp"
#include "qpgamma/tomography.hpp"

namespace qpgamma {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double confidence = 0.95);

struct RateEstimate {
    double rate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double duration = 0.0;
};

/// Poisson rate with a central interval; for zero counts the upper bound
/// is the one-sided limit -ln(1 - confidence) / duration.
RateEstimate jump_rate(std::size_t count, double duration, double confidence = 0.95);
RateEstimate jump_rate(std::span<const JumpEvent> jumps, double duration, double confidence = 0.95);

struct PowerLaw {
    double exponent = 0.0;
    double exponent_error = 0.0;
    double prefactor = 0.0;
};

/// Weighted log-log fit rate = prefactor * distance^exponent. `errors` may
/// be empty (equal weights).
PowerLaw rate_vs_distance(std::span<const double> rates, std::span<const double> distances,
                          std::span<const double> errors = {});

struct PairStats {
    std::string qubit_i, qubit_j;
    std::size_t bins = 0;
    std::size_t n_i = 0, n_j = 0, n_ij = 0;
    double p_i = 0.0, p_j = 0.0, p_ij_obs = 0.0;
    double p_corr = 0.0;
    double p_corr_error = 0.0;
    double observed_rate = 0.0;    //!< coincidences per second
    double background_rate = 0.0;  //!< expected from the single-stream rates
};

/// Correlation probability of two jump-time streams using consecutive
/// windows of length `window` over [0, duration). Throws DataError if
/// neither stream has an event.
PairStats correlation_probability(std::span<const double> times_i, std::span<const double> times_j,
                                  double duration, double window);

/// p_corr = 2 N_ij / (N_i + N_j) for simulated per-impact jump indicators.
double simulated_correlation(std::size_t n_i, std::size_t n_j, std::size_t n_ij);

struct ParityPairRate {
    double observed = 0.0;
    double background = 0.0;
    double observed_error = 0.0;
    std::size_t coincidences = 0;
    double joint_time = 0.0;
};

/// Coincident decoded parity switches (within `window` samples of each other,
/// both jointly unmasked) per jointly unmasked second, and the random
/// background gamma_i gamma_j window.
ParityPairRate pairwise_parity_rate(const MaskedDigitalTrace& a, const MaskedDigitalTrace& b, std::size_t window);

struct PoisonEstimate {
    double raw = 0.0;
    double value = 0.0;   //!< clamped to [0, 1]
    double error = 0.0;
};

/// p_poison = 1 - (1 - 2 p_obs) / (1 - 2 p_bkgd). Throws ConfigError if
/// p_bkgd >= 0.5. The error propagates the binomial spread of p_obs
/// when `trials` > 0.
PoisonEstimate poisoning_probability(double p_obs, double p_bkgd, std::size_t trials = 0);

struct QubitCoincidence {
    std::string qubit;
    std::size_t counts = 0;
    std::size_t unmasked = 0;
    double p_obs = 0.0;
    Interval p_obs_ci;
    double background_rate = 0.0;  //!< decoded switches per second outside the jump windows
    double p_bkgd = 0.0;
    PoisonEstimate p_poison;
};

struct CoincidenceStats {
    std::size_t window_samples = 0;
    double window_seconds = 0.0;
    std::size_t jumps = 0;
    std::vector<QubitCoincidence> qubits;
};

/// For each charge jump, each decoded parity trace is inspected over a
/// window of `window` samples centred on the jump. Windows with any masked
/// sample are skipped; otherwise the window is unmasked and counts if the
/// parity differs between its first and last sample. p_bkgd is the switching
/// rate measured away from all jump windows times the window duration.
CoincidenceStats coincidence_scan(std::span<const JumpEvent> jumps, std::span<const MaskedDigitalTrace> traces,
                                  std::span<const std::string> qubits, std::size_t window = 100);

struct Asymmetry {
    double fraction = 0.0;
    Interval ci;
    std::size_t positive = 0;
    std::size_t total = 0;
};

/// Fraction of jumps with |magnitude| > threshold that are positive.
/// Throws DataError if none qualify.
Asymmetry jump_asymmetry(std::span<const double> magnitudes, double threshold = 0.15);
Asymmetry jump_asymmetry(std::span<const JumpEvent> jumps, double threshold = 0.15);

/// p_th = r_th / R_gamma; throws ConfigError for R_gamma <= 0.
double threshold_analysis(double r_gamma, double r_th);

/// Impact rate on a chip of area `chip_area` from a background jump rate
/// measured with a sensing disc of radius `sensing_radius`.
double impact_rate_from_background(double jump_rate, double sensing_radius, double chip_area);

}  // namespace qpgamma
