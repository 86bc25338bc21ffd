#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qpgamma/footprint_contour.hpp"
#include "qpgamma/geometry.hpp"

namespace qpgamma {

enum class ProfileFamily { Uniform, Exponential };

/// Quasiparticle density around an impact: x_qp(d) = amplitude for the
/// uniform family, amplitude exp(-d / decay_length) for the exponential one.
struct FootprintModel {
    ProfileFamily family = ProfileFamily::Uniform;
    double amplitude = 1.0;
    double decay_length = 1e-3;     //!< m, exponential family only
    double threshold = 1.0;         //!< x_qp giving one expected tunnelling event
    double sensing_radius = 1.06e-3;

    double density(double distance) const noexcept;
};

/// Mean number of tunnelling events at each qubit: x_qp averaged over
/// impacts uniformly distributed in the sensing disc about `impact_centre`,
/// divided by the threshold density.
std::vector<double> footprint_lambda(const FootprintModel& model, const Vec2& impact_centre,
                                     std::span<const Vec2> qubits);

/// p = 1 - exp(-lambda) per qubit.
std::vector<double> footprint_model_eval(const FootprintModel& model, const Vec2& impact_centre,
                                         std::span<const Vec2> qubits);

struct FootprintFit {
    FootprintModel model;
    std::vector<double> predicted;
    std::vector<double> residuals;
    double rms = 0.0;
};

/// Least-squares fit of the threshold density (and the decay length for the
/// exponential family) to observed poisoning probabilities. The amplitude
/// is held at `start.amplitude`. Throws DataError when there are fewer
/// observations than two or than free parameters.
FootprintFit fit_footprint(const FootprintModel& start, const Vec2& impact_centre, std::span<const Vec2> qubits,
                           std::span<const double> observed);

/// Thin-plate-spline surface through the points (with linear trend),
/// sampled on a square grid of half width `half_width` and `n` nodes per
/// side, clamped to [0, 1]. Needs at least 4 points.
GridField interpolate_poison_map(std::span<const Vec2> points, std::span<const double> values,
                                 double half_width = 4e-3, std::size_t n = 81);

}  // namespace qpgamma
