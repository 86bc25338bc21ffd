#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qpgamma {

struct Spectrum {
    std::vector<double> frequency;  //!< Hz
    std::vector<double> power;      //!< one-sided density, units^2/Hz
    std::size_t segments = 0;
    std::size_t segment_length = 0;
    double dt = 0.0;
};

/// Welch estimate: Hann-windowed segments with 50% overlap after removing the
/// trace mean, one-sided density. Throws DataError if the trace is shorter than
/// one segment.
Spectrum compute_psd(std::span<const double> samples, double dt, std::size_t segment = 1024);

/// Threshold halfway between the two clusters of a 1-D two-means split.
double readout_threshold(std::span<const double> samples);

/// Map samples to +1 / -1 around `threshold`.
std::vector<double> digitize(std::span<const double> samples, double threshold);

struct PsdFit {
    double gamma = 0.0;       //!< 1/s
    double amplitude = 0.0;   //!< A
    double fidelity = 0.0;    //!< sqrt(A / 2), capped at 1
    double floor = 0.0;       //!< B
    //! Covariance of (gamma, A, B)
    std::array<std::array<double, 3>, 3> covariance{};
    double chi2_per_dof = 0.0;
    bool resolvable = false;
    std::string note;
};

/// Model S(f) = A 4 gamma / (4 gamma^2 + (2 pi f)^2) + B.
double lorentzian_psd(double f, double gamma, double amplitude, double floor) noexcept;

/// Weighted least-squares fit of the Lorentzian-plus-floor model, skipping
/// the zero-frequency bin. Each bin is compared with the expected Welch value
/// of a sampled process with that spectrum (window leakage included). Rates outside [1/(segment dt), 1/(2 dt)] or with
/// no significant amplitude are returned with resolvable = false. Throws
/// NumericalError if the optimiser fails.
PsdFit fit_lorentzian(const Spectrum& spectrum);

}  // namespace qpgamma
