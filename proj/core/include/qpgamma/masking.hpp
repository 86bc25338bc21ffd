#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qpgamma {

/// Window-spread ratio below which a window counts as collapsed:
/// sqrt((1 + s^2/4) / (1 + 2 (erfinv(F) sqrt(n))^2)).
double masking_alpha(double fidelity, int n_average, double s_threshold);

/// Separation (in averaged-noise units) for a two-sided state-detection error.
double separation_for_error(double error);

/// Trailing moving average; the first n - 1 outputs average what is available.
std::vector<double> moving_average(std::span<const double> x, std::size_t n);

struct MaskOptions {
    int n_average = 40;
    double s_threshold = 3.29;
    std::optional<double> alpha_override;
};

/// Per-sample mask (1 = masked). The averaged trace is cut into windows of
/// round(1 / (gamma dt)) samples; a window stays unmasked if its mean is
/// further than its own spread from the mean of the averaged trace, or its
/// spread exceeds alpha times the spread of the whole averaged trace. Throws DataError if the window is longer
/// than the trace.
std::vector<std::uint8_t> mask_trace(std::span<const double> samples, double gamma, double dt, double fidelity,
                                     const MaskOptions& options = {});

double unmasked_fraction(std::span<const std::uint8_t> mask) noexcept;

}  // namespace qpgamma
