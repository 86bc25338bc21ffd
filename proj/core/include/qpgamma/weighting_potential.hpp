#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qpgamma/config.hpp"

namespace qpgamma {

/// Graded tensor mesh for the weighting-potential solve. Spacing is `h_min`
/// at island edges and the top face and grows geometrically up to the
/// h_max values; every refinement level bisects all cells.
struct GridSpec {
    double half_extent = 3e-3;     //!< lateral table half-size about the island
    double h_min = 5e-6;
    double h_max_lateral = 100e-6;
    double h_max_depth = 25e-6;
    double growth = 1.3;
    int refinement = 1;
    double tolerance = 1e-8;       //!< relative residual
    int max_iterations = 20000;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Node coordinates of one axis of the mesh: nodes at every breakpoint,
/// graded in between.
std::vector<double> graded_axis(const std::vector<double>& breakpoints, const std::vector<double>& features,
                                double h_min, double h_max, double growth, int refinement);

//---------------------------------------------------------------------------//
/*!
 * Weighting potential w(x, y, z) of one island (unit potential on the island,
 * zero on the ground plane, the far walls and the substrate bottom). The
 * cross-shaped island is mirror symmetric, so the table stores the quadrant
 * x, y >= 0 relative to the island center; |dx| and |dy| are looked up.
 * Values beyond the lateral extent are zero.
 */
class InducedChargeTable {
  public:
    struct Info {
        GridSpec spec;
        IslandShape island;
        double thickness = 0.0;
        std::string geometry_hash;
        int iterations = 0;
        double residual = 0.0;
        //! Largest amount by which the raw solution left [0, 1] before clamping
        double bound_violation = 0.0;
    };

    InducedChargeTable() = default;
    InducedChargeTable(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs,
                       std::vector<double> values, Info info);

    /// Trilinear value at offset (dx, dy) from the island center and depth z
    /// (z in [-thickness, 0]); throws DataError for z outside the substrate.
    double operator()(double dx, double dy, double z) const;

    /// Same as operator() without the bounds check on z (clamped).
    double lookup(double dx, double dy, double z) const noexcept;

    double lateral_extent() const noexcept { return xs_.back(); }
    const Info& info() const noexcept { return info_; }
    const std::vector<double>& xs() const noexcept { return xs_; }
    const std::vector<double>& ys() const noexcept { return ys_; }
    const std::vector<double>& zs() const noexcept { return zs_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double node(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return values_[(k * ys_.size() + j) * xs_.size() + i];
    }
    bool empty() const noexcept { return values_.empty(); }

    void save(const std::filesystem::path& path) const;
    static InducedChargeTable load(const std::filesystem::path& path);

  private:
    std::vector<double> xs_, ys_, zs_;
    std::vector<double> values_;
    Info info_;
    // Per-axis bucket -> node index maps for O(1) cell location
    struct AxisIndex {
        double inv_width = 0.0;
        std::vector<std::uint32_t> first;
    };
    AxisIndex ix_, iy_, iz_;

    void build_index();
    static AxisIndex make_index(const std::vector<double>& nodes);
    static std::size_t locate(const AxisIndex& idx, const std::vector<double>& nodes, double v) noexcept;
};

/// Hash of everything that determines a table (island, substrate, grid).
std::string table_geometry_hash(const Geometry& geometry, const GridSpec& spec);

/// Finite-volume solve of Laplace's equation on the graded mesh with
/// preconditioned conjugate gradients.
InducedChargeTable solve_weighting_potential(const Geometry& geometry, const GridSpec& spec = {});

/// Same geometry one refinement level coarser (no gap-resolution check);
/// used for the discretization error estimate.
InducedChargeTable coarse_companion(const Geometry& geometry, const GridSpec& spec);

/// Discretization error estimate at probe points: |w_L - w_{L-1}| / 3 for
/// refinement levels L and L-1 (second-order convergence).
std::vector<double> discretization_error(const InducedChargeTable& fine, const InducedChargeTable& coarse,
                                         const std::vector<Vec3>& probes);

/// Load a cached table whose hash matches, or solve and write it.
InducedChargeTable cached_weighting_potential(const Geometry& geometry, const GridSpec& spec,
                                              const std::filesystem::path& cache_path);

}  // namespace qpgamma
