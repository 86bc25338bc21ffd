#include "qpgamma/weighting_potential.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "qpgamma/errors.hpp"
#include "qpgamma/manifest.hpp"

namespace qpgamma {
namespace {

constexpr char kMagic[8] = {'Q', 'P', 'W', 'T', 'A', 'B', '0', '1'};

nlohmann::json spec_json(const GridSpec& s)
{
    return {{"half_extent_m", s.half_extent}, {"h_min_m", s.h_min},
            {"h_max_lateral_m", s.h_max_lateral}, {"h_max_depth_m", s.h_max_depth},
            {"growth", s.growth}, {"refinement", s.refinement},
            {"tolerance", s.tolerance}, {"max_iterations", s.max_iterations}};
}

GridSpec spec_from_json(const nlohmann::json& j)
{
    GridSpec s;
    s.half_extent = j.at("half_extent_m").get<double>();
    s.h_min = j.at("h_min_m").get<double>();
    s.h_max_lateral = j.at("h_max_lateral_m").get<double>();
    s.h_max_depth = j.at("h_max_depth_m").get<double>();
    s.growth = j.at("growth").get<double>();
    s.refinement = j.at("refinement").get<int>();
    s.tolerance = j.at("tolerance").get<double>();
    s.max_iterations = j.at("max_iterations").get<int>();
    return s;
}

void check_spec(const GridSpec& s, const Geometry& g)
{
    const auto& is = g.island;
    if (!(s.h_min > 0 && s.h_max_lateral >= s.h_min && s.h_max_depth >= s.h_min))
        throw ConfigError("grid spacings must satisfy 0 < h_min <= h_max");
    if (!(s.growth > 1.0))
        throw ConfigError("grid growth factor must exceed 1");
    if (s.refinement < 0 || s.refinement > 4)
        throw ConfigError("grid refinement level must be in [0, 4]");
    if (!(s.tolerance > 0 && s.max_iterations > 0))
        throw ConfigError("solver tolerance and iteration limit must be positive");
    if (!(s.half_extent > is.arm_half_length + is.gap + s.h_max_lateral))
        throw ConfigError("grid extent must enclose the island and its gap");
}

/// Axis of one quadrant plus its breakpoints/features for the island edges.
std::vector<double> lateral_axis(const GridSpec& s, const IslandShape& is, int level)
{
    const double a = is.arm_half_width;
    const double l = is.arm_half_length;
    const double g = is.gap;
    std::vector<double> bp{0.0, a, a + g, l, l + g, s.half_extent};
    std::vector<double> feat{a, a + g, l, l + g};
    return graded_axis(bp, feat, s.h_min, s.h_max_lateral, s.growth, level);
}

std::vector<double> depth_axis(const GridSpec& s, double thickness, int level)
{
    return graded_axis({-thickness, 0.0}, {0.0}, s.h_min, s.h_max_depth, s.growth, level);
}

std::size_t cells_across(const std::vector<double>& nodes, double lo, double hi)
{
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (nodes[i] >= lo - 1e-15 && nodes[i + 1] <= hi + 1e-15)
            ++n;
    return n;
}

InducedChargeTable solve_impl(const Geometry& geometry, const GridSpec& spec, bool require_gap_cells)
{
    check_spec(spec, geometry);
    const IslandShape& island = geometry.island;
    const double t = geometry.substrate_size.z;

    const auto xs = lateral_axis(spec, island, spec.refinement);
    const auto& ys = xs;
    const auto zs = depth_axis(spec, t, spec.refinement);
    if (require_gap_cells
        && cells_across(xs, island.arm_half_width, island.arm_half_width + island.gap) < 2)
        throw ConfigError("grid does not resolve the island gap with at least two cells");

    const std::size_t nx = xs.size(), ny = ys.size(), nz = zs.size();
    const std::size_t n_nodes = nx * ny * nz;
    auto lin = [&](std::size_t i, std::size_t j, std::size_t k) { return (k * ny + j) * nx + i; };

    // Node classification: -1 Dirichlet 0, -2 Dirichlet 1, otherwise unknown index
    std::vector<std::int64_t> id(n_nodes, -1);
    std::int64_t n_unknown = 0;
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i) {
                std::int64_t c = -1;
                if (k == 0 || i == nx - 1 || j == ny - 1) {
                    c = -1;
                } else if (k == nz - 1) {
                    if (island.contains(xs[i], ys[j]))
                        c = -2;
                    else if (island.in_gap(xs[i], ys[j]))
                        c = n_unknown++;
                } else {
                    c = n_unknown++;
                }
                id[lin(i, j, k)] = c;
            }

    auto dual = [](const std::vector<double>& v, std::size_t i) {
        const double lo = i > 0 ? v[i - 1] : v[i];
        const double hi = i + 1 < v.size() ? v[i + 1] : v[i];
        return 0.5 * (hi - lo);
    };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_unknown) * 7);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    std::vector<double> diag(static_cast<std::size_t>(n_unknown), 0.0);

    auto couple = [&](std::size_t a, std::size_t b, double c) {
        const std::int64_t ia = id[a], ib = id[b];
        if (ia >= 0) {
            diag[ia] += c;
            if (ib >= 0)
                trip.emplace_back(ia, ib, -c);
            else if (ib == -2)
                rhs[ia] += c;
        }
        if (ib >= 0) {
            diag[ib] += c;
            if (ia >= 0)
                trip.emplace_back(ib, ia, -c);
            else if (ia == -2)
                rhs[ib] += c;
        }
    };

    for (std::size_t k = 0; k < nz; ++k) {
        const double dzk = dual(zs, k);
        for (std::size_t j = 0; j < ny; ++j) {
            const double dyj = dual(ys, j);
            for (std::size_t i = 0; i < nx; ++i) {
                const double dxi = dual(xs, i);
                const std::size_t a = lin(i, j, k);
                if (i + 1 < nx)
                    couple(a, lin(i + 1, j, k), dyj * dzk / (xs[i + 1] - xs[i]));
                if (j + 1 < ny)
                    couple(a, lin(i, j + 1, k), dxi * dzk / (ys[j + 1] - ys[j]));
                if (k + 1 < nz)
                    couple(a, lin(i, j, k + 1), dxi * dyj / (zs[k + 1] - zs[k]));
            }
        }
    }
    for (std::int64_t u = 0; u < n_unknown; ++u)
        trip.emplace_back(u, u, diag[u]);

    // Scale rows and columns to unit diagonal; keeps the system symmetric.
    Eigen::VectorXd scale(n_unknown);
    for (std::int64_t u = 0; u < n_unknown; ++u)
        scale[u] = 1.0 / std::sqrt(diag[u]);
    for (auto& tr : trip)
        tr = Eigen::Triplet<double>(tr.row(), tr.col(), tr.value() * scale[tr.row()] * scale[tr.col()]);
    Eigen::VectorXd b = rhs.cwiseProduct(scale);

    Eigen::SparseMatrix<double> A(n_unknown, n_unknown);
    A.setFromTriplets(trip.begin(), trip.end());
    trip.clear();
    trip.shrink_to_fit();

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(spec.tolerance);
    cg.setMaxIterations(spec.max_iterations);
    cg.compute(A);
    if (cg.info() != Eigen::Success)
        throw NumericalError("preconditioner factorisation failed");
    Eigen::VectorXd y = cg.solve(b);
    if (cg.info() != Eigen::Success || !(cg.error() <= spec.tolerance))
        throw NumericalError("weighting-potential solve did not converge: relative residual "
                             + std::to_string(cg.error()) + " after " + std::to_string(cg.iterations())
                             + " iterations");

    std::vector<double> values(n_nodes, 0.0);
    double violation = 0.0;
    for (std::size_t n = 0; n < n_nodes; ++n) {
        const std::int64_t c = id[n];
        if (c == -2) {
            values[n] = 1.0;
        } else if (c >= 0) {
            const double v = y[c] * scale[c];
            violation = std::max({violation, -v, v - 1.0});
            values[n] = std::clamp(v, 0.0, 1.0);
        }
    }

    InducedChargeTable::Info info;
    info.spec = spec;
    info.island = island;
    info.thickness = t;
    info.geometry_hash = table_geometry_hash(geometry, spec);
    info.iterations = static_cast<int>(cg.iterations());
    info.residual = cg.error();
    info.bound_violation = violation;
    return InducedChargeTable(xs, ys, zs, std::move(values), std::move(info));
}

}  // namespace

std::vector<double> graded_axis(const std::vector<double>& breakpoints, const std::vector<double>& features,
                                double h_min, double h_max, double growth, int refinement)
{
    if (breakpoints.size() < 2 || !std::is_sorted(breakpoints.begin(), breakpoints.end()))
        throw ConfigError("axis breakpoints must be sorted with at least two entries");
    auto spacing = [&](double x) {
        double d = std::numeric_limits<double>::infinity();
        for (double f : features)
            d = std::min(d, std::abs(x - f));
        if (features.empty())
            d = 0.0;
        return std::min(h_max, h_min + (growth - 1.0) * d);
    };

    constexpr int kSamples = 4000;
    std::vector<double> nodes{breakpoints.front()};
    for (std::size_t s = 0; s + 1 < breakpoints.size(); ++s) {
        const double a = breakpoints[s], b = breakpoints[s + 1];
        if (!(b > a))
            throw ConfigError("axis breakpoints must be strictly increasing");
        // Equidistribute 1/h over [a, b] so nodes land on both breakpoints.
        std::vector<double> cum(kSamples + 1, 0.0);
        const double dx = (b - a) / kSamples;
        for (int i = 0; i < kSamples; ++i)
            cum[i + 1] = cum[i] + dx / spacing(a + (i + 0.5) * dx);
        const int cells = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
        for (int c = 1; c < cells; ++c) {
            const double target = cum.back() * c / cells;
            const auto it = std::lower_bound(cum.begin(), cum.end(), target);
            const std::size_t hi = static_cast<std::size_t>(it - cum.begin());
            const std::size_t lo = hi - 1;
            const double f = (target - cum[lo]) / (cum[hi] - cum[lo]);
            nodes.push_back(a + (lo + f) * dx);
        }
        nodes.push_back(b);
    }
    for (int r = 0; r < refinement; ++r) {
        std::vector<double> fine;
        fine.reserve(2 * nodes.size());
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            fine.push_back(nodes[i]);
            fine.push_back(0.5 * (nodes[i] + nodes[i + 1]));
        }
        fine.push_back(nodes.back());
        nodes = std::move(fine);
    }
    return nodes;
}

//---------------------------------------------------------------------------//

InducedChargeTable::InducedChargeTable(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs,
                                       std::vector<double> values, Info info)
    : xs_(std::move(xs)), ys_(std::move(ys)), zs_(std::move(zs)), values_(std::move(values)), info_(std::move(info))
{
    if (xs_.size() < 2 || ys_.size() < 2 || zs_.size() < 2
        || values_.size() != xs_.size() * ys_.size() * zs_.size())
        throw DataError("inconsistent weighting-potential table dimensions");
    build_index();
}

InducedChargeTable::AxisIndex InducedChargeTable::make_index(const std::vector<double>& nodes)
{
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        hmin = std::min(hmin, nodes[i + 1] - nodes[i]);
    if (!(hmin > 0))
        throw DataError("weighting-potential table axis is not strictly increasing");
    AxisIndex idx;
    idx.inv_width = 1.0 / hmin;
    const auto buckets = static_cast<std::size_t>((nodes.back() - nodes.front()) * idx.inv_width) + 2;
    idx.first.resize(buckets);
    std::size_t i = 0;
    for (std::size_t b = 0; b < buckets; ++b) {
        const double v = nodes.front() + b * hmin;
        while (i + 2 < nodes.size() && nodes[i + 1] <= v)
            ++i;
        idx.first[b] = static_cast<std::uint32_t>(i);
    }
    return idx;
}

void InducedChargeTable::build_index()
{
    ix_ = make_index(xs_);
    iy_ = make_index(ys_);
    iz_ = make_index(zs_);
}

std::size_t InducedChargeTable::locate(const AxisIndex& idx, const std::vector<double>& nodes, double v) noexcept
{
    auto b = static_cast<std::size_t>((v - nodes.front()) * idx.inv_width);
    b = std::min(b, idx.first.size() - 1);
    std::size_t i = idx.first[b];
    while (i + 2 < nodes.size() && nodes[i + 1] < v)
        ++i;
    return i;
}

double InducedChargeTable::lookup(double dx, double dy, double z) const noexcept
{
    const double ax = std::abs(dx), ay = std::abs(dy);
    if (ax > xs_.back() || ay > ys_.back())
        return 0.0;
    z = std::clamp(z, zs_.front(), zs_.back());
    const std::size_t i = locate(ix_, xs_, ax);
    const std::size_t j = locate(iy_, ys_, ay);
    const std::size_t k = locate(iz_, zs_, z);
    const double fx = (ax - xs_[i]) / (xs_[i + 1] - xs_[i]);
    const double fy = (ay - ys_[j]) / (ys_[j + 1] - ys_[j]);
    const double fz = (z - zs_[k]) / (zs_[k + 1] - zs_[k]);
    const std::size_t nx = xs_.size(), nxy = nx * ys_.size();
    const double* p = values_.data() + k * nxy + j * nx + i;
    const double c00 = p[0] + fx * (p[1] - p[0]);
    const double c10 = p[nx] + fx * (p[nx + 1] - p[nx]);
    const double c01 = p[nxy] + fx * (p[nxy + 1] - p[nxy]);
    const double c11 = p[nxy + nx] + fx * (p[nxy + nx + 1] - p[nxy + nx]);
    const double c0 = c00 + fy * (c10 - c00);
    const double c1 = c01 + fy * (c11 - c01);
    return c0 + fz * (c1 - c0);
}

double InducedChargeTable::operator()(double dx, double dy, double z) const
{
    constexpr double tol = 1e-12;
    if (empty())
        throw DataError("weighting-potential table is empty");
    if (!(z >= zs_.front() - tol && z <= zs_.back() + tol))
        throw DataError("position outside the weighting-potential table (z = " + std::to_string(z) + " m)");
    return lookup(dx, dy, z);
}

void InducedChargeTable::save(const std::filesystem::path& path) const
{
    nlohmann::json h;
    h["format"] = "qpgamma-weighting-potential";
    h["grid_spec"] = spec_json(info_.spec);
    h["island"] = {{"arm_half_length_m", info_.island.arm_half_length},
                   {"arm_half_width_m", info_.island.arm_half_width},
                   {"gap_m", info_.island.gap}};
    h["thickness_m"] = info_.thickness;
    h["geometry_hash"] = info_.geometry_hash;
    h["iterations"] = info_.iterations;
    h["residual"] = info_.residual;
    h["bound_violation"] = info_.bound_violation;
    h["shape"] = {xs_.size(), ys_.size(), zs_.size()};
    const std::string header = h.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto* v : {&xs_, &ys_, &zs_, &values_})
        out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    if (!out)
        throw DataError("failed writing " + path.string());
}

InducedChargeTable InducedChargeTable::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    char magic[sizeof kMagic];
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0 || len > (1u << 20))
        throw DataError(path.string() + " is not a weighting-potential table");
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    Info info;
    std::size_t nx = 0, ny = 0, nz = 0;
    try {
        const auto h = nlohmann::json::parse(header);
        info.spec = spec_from_json(h.at("grid_spec"));
        info.island.arm_half_length = h.at("island").at("arm_half_length_m").get<double>();
        info.island.arm_half_width = h.at("island").at("arm_half_width_m").get<double>();
        info.island.gap = h.at("island").at("gap_m").get<double>();
        info.thickness = h.at("thickness_m").get<double>();
        info.geometry_hash = h.at("geometry_hash").get<std::string>();
        info.iterations = h.at("iterations").get<int>();
        info.residual = h.at("residual").get<double>();
        info.bound_violation = h.at("bound_violation").get<double>();
        const auto& s = h.at("shape");
        nx = s.at(0).get<std::size_t>();
        ny = s.at(1).get<std::size_t>();
        nz = s.at(2).get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed table header: " + e.what());
    }
    if (nx * ny * nz == 0 || nx * ny * nz > (std::size_t{1} << 31))
        throw DataError(path.string() + ": implausible table shape");
    auto read = [&](std::size_t n) {
        std::vector<double> v(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in)
            throw DataError(path.string() + ": truncated table");
        return v;
    };
    auto xs = read(nx);
    auto ys = read(ny);
    auto zs = read(nz);
    auto values = read(nx * ny * nz);
    return InducedChargeTable(std::move(xs), std::move(ys), std::move(zs), std::move(values), std::move(info));
}

std::string table_geometry_hash(const Geometry& geometry, const GridSpec& spec)
{
    // Lengths in integer picometres so unit conversions of the same geometry hash alike
    auto pm = [](double m) { return std::llround(m * 1e12); };
    nlohmann::json j;
    j["format"] = 2;
    j["island_pm"] = {pm(geometry.island.arm_half_length), pm(geometry.island.arm_half_width), pm(geometry.island.gap)};
    j["thickness_pm"] = pm(geometry.substrate_size.z);
    j["grid"] = spec_json(spec);
    return sha256_hex(j.dump());
}

InducedChargeTable solve_weighting_potential(const Geometry& geometry, const GridSpec& spec)
{
    return solve_impl(geometry, spec, true);
}

std::vector<double> discretization_error(const InducedChargeTable& fine, const InducedChargeTable& coarse,
                                         const std::vector<Vec3>& probes)
{
    std::vector<double> err;
    err.reserve(probes.size());
    for (const auto& p : probes)
        err.push_back(std::abs(fine(p.x, p.y, p.z) - coarse(p.x, p.y, p.z)) / 3.0);
    return err;
}

InducedChargeTable coarse_companion(const Geometry& geometry, const GridSpec& spec)
{
    if (spec.refinement < 1)
        throw ConfigError("error estimate needs refinement level >= 1");
    GridSpec c = spec;
    c.refinement -= 1;
    return solve_impl(geometry, c, false);
}

InducedChargeTable cached_weighting_potential(const Geometry& geometry, const GridSpec& spec,
                                              const std::filesystem::path& cache_path)
{
    const std::string hash = table_geometry_hash(geometry, spec);
    if (std::filesystem::exists(cache_path)) {
        try {
            auto t = InducedChargeTable::load(cache_path);
            if (t.info().geometry_hash == hash)
                return t;
        } catch (const DataError&) {
            // fall through and rebuild
        }
    }
    auto t = solve_weighting_potential(geometry, spec);
    if (cache_path.has_parent_path())
        std::filesystem::create_directories(cache_path.parent_path());
    t.save(cache_path);
    return t;
}

}  // namespace qpgamma
