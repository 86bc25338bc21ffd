#pragma once

#include <vector>

#include "qpgamma/geometry.hpp"

namespace qpgamma {

/// Scalar field sampled on a regular grid, row-major [iy][ix].
struct GridField {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;

    double at(std::size_t ix, std::size_t iy) const noexcept { return values[iy * xs.size() + ix]; }
    /// Bilinear interpolation; NaN outside the grid.
    double sample(double x, double y) const noexcept;
};

struct ContourLevel {
    double level = 0.0;
    double mean_radius = 0.0;                 //!< about the origin
    std::vector<std::vector<Vec2>> polylines;  //!< closed ones repeat the first point
};

/// Iso-lines of the field by marching squares, chained into polylines.
std::vector<std::vector<Vec2>> iso_contours(const GridField& field, double level);

/// Mean over `n_rays` equally spaced directions of the outermost radius at
/// which the field is >= level. Rays that never reach the level count as 0.
/// Returns 0 when the level is not reached anywhere.
double mean_contour_radius(const GridField& field, double level, int n_rays = 360);

}  // namespace qpgamma
