#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qpgamma {

struct HmmParams {
    double mean[2] = {0.0, 1.0};
    double sigma = 1.0;
    double flip = 0.01;  //!< per-sample switching probability
};

struct HmmOptions {
    int max_iterations = 50;
    double tolerance = 1e-6;  //!< log-likelihood change
    double gamma_prior = 0.0; //!< switching rate seeding the transition prior (1/s); 0 means unknown
};

struct MaskedDigitalTrace {
    double dt = 0.0;
    std::vector<std::uint8_t> mask;    //!< 1 = masked
    std::vector<std::uint8_t> parity;  //!< decoded 0/1 where unmasked, 0 elsewhere
    std::size_t transitions = 0;
    std::size_t unmasked_samples = 0;
    double switching_rate = 0.0;       //!< transitions per unmasked second
    HmmParams params;
    int iterations = 0;
};

/// Two-state Gaussian-emission HMM: parameters by Baum-Welch over all
/// unmasked segments, states by Viterbi per contiguous unmasked segment.
/// Throws DataError if every sample is masked.
MaskedDigitalTrace hmm_decode(std::span<const double> samples, std::span<const std::uint8_t> mask, double dt,
                              const HmmOptions& options = {});

}  // namespace qpgamma
