#include "qpgamma/electrostatics.hpp"


#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include "qpgamma/errors.hpp"
#include "fftw_support.hpp"

namespace qpgamma {
namespace {

using detail::fftw_array;
using detail::FftwPlan;

std::size_t nice_fft_size(std::size_t n)
{
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2, 3, 5, 7})
            while (r % p == 0)
                r /= p;
        if (r == 1)
            return m;
    }
}

}  // namespace

double alias_charge(double q) noexcept
{
    return q - std::ceil(q - 0.5);
}

void ChargeAccumulator::add(double term) noexcept
{
    acc_ += static_cast<Wide>(std::ldexp(static_cast<long double>(term), 64));
}

double ChargeAccumulator::value() const noexcept
{
    return static_cast<double>(std::ldexp(static_cast<long double>(acc_), -64));
}

namespace {

constexpr double kSurfaceTol = 1e-12;

bool on_top_face(const ChargeCarrier& c) noexcept
{
    return c.final.z >= -kSurfaceTol;
}

double offset_unchecked(const ChargeCarrier& c, const InducedChargeTable& table, double dx, double dy) noexcept
{
    if (on_top_face(c) && table.info().island.contains(dx, dy))
        return 0.0;
    return -c.charge() * table.lookup(dx, dy, c.final.z);
}

}  // namespace

double carrier_offset(const ChargeCarrier& c, const InducedChargeTable& table, const Vec2& island)
{
    const double dx = c.final.x - island.x, dy = c.final.y - island.y;
    if (on_top_face(c) && table.info().island.contains(dx, dy))
        return 0.0;
    return -c.charge() * table(dx, dy, c.final.z);
}

double induced_charge(std::span<const ChargeCarrier> carriers, const InducedChargeTable& table, const Vec2& island)
{
    ChargeAccumulator acc;
    for (const auto& c : carriers)
        acc.add(carrier_offset(c, table, island));
    return acc.value();
}

OffsetChargeShift induced_offset_charge(const ChargeState& state, const InducedChargeTable& table,
                                        std::span<const QubitIsland> qubits)
{
    OffsetChargeShift out;
    out.event_index = state.event_index;
    for (const auto& q : qubits) {
        const double raw = induced_charge(state.carriers, table, q.center);
        out.raw.push_back(raw);
        out.aliased.push_back(alias_charge(raw));
    }
    return out;
}

double ChargeCloud::net_charge() const noexcept
{
    ChargeAccumulator acc;
    for (const auto& c : carriers)
        acc.add(c.charge());
    return acc.value();
}

ChargeCloud burst_from_deposits(std::span<const EnergyDeposit> deposits, const TransportParams& params,
                                const Box& substrate, std::uint64_t seed)
{
    std::vector<EnergyDeposit> centred;
    for (const auto& d : deposits) {
        if (d.volume != VolumeKind::Substrate)
            continue;
        EnergyDeposit c = d;
        c.position.x = 0.0;
        c.position.y = 0.0;
        centred.push_back(c);
    }
    std::stable_sort(centred.begin(), centred.end(),
                     [](const EnergyDeposit& a, const EnergyDeposit& b) { return a.event_index < b.event_index; });

    ChargeCloud cloud;
    for (std::size_t i = 0; i < centred.size();) {
        std::size_t j = i;
        while (j < centred.size() && centred[j].event_index == centred[i].event_index)
            ++j;
        ++cloud.n_events;
        i = j;
    }
    if (cloud.n_events == 0)
        return cloud;
    const double scale = 1.0 / static_cast<double>(cloud.n_events);
    for (std::size_t i = 0; i < centred.size();) {
        std::size_t j = i;
        while (j < centred.size() && centred[j].event_index == centred[i].event_index)
            ++j;
        const std::span<const EnergyDeposit> ev(centred.data() + i, j - i);
        for_each_carrier(ev, params, substrate, carrier_event_key(seed, centred[i].event_index),
                         [&](ChargeCarrier c, std::size_t, std::uint64_t) {
                             c.weight *= scale;
                             cloud.carriers.push_back(c);
                         });
        i = j;
    }
    return cloud;
}

ChargeCloud characteristic_burst(const ExperimentConfig& config, const TransportParams& params,
                                 std::size_t n_events, std::uint64_t seed)
{
    if (n_events == 0)
        throw ConfigError("characteristic burst needs at least one event");
    validate(params);
    ExperimentConfig cfg = config;
    cfg.rng.master_seed = domain_key(seed, StreamDomain::Burst);

    constexpr std::uint64_t kBatch = 20000;
    constexpr std::uint64_t kMaxDecays = 1ull << 32;
    std::vector<EnergyDeposit> hits;
    std::size_t found = 0;
    BatchOptions opt;
    opt.bias_cone_fraction = 0.99;
    for (std::uint64_t first = 0; found < n_events; first += kBatch) {
        if (first >= kMaxDecays)
            throw NumericalError("characteristic burst: too few substrate hits");
        opt.first_event = first;
        const auto log = run_decay_batch(cfg, kBatch, opt);
        for (const auto& e : log.events) {
            if (!(e.substrate_kev > 0.0))
                continue;
            if (found == n_events)
                break;
            ++found;
            for (const auto& d : log.deposits)
                if (d.event_index == e.event_index && d.volume == VolumeKind::Substrate)
                    hits.push_back(d);
        }
    }
    return burst_from_deposits(hits, params, config.geometry.substrate_box(), cfg.rng.master_seed);
}

double footprint_value_direct(const ChargeCloud& burst, const InducedChargeTable& table, const Vec2& offset)
{
    ChargeAccumulator acc;
    for (const auto& c : burst.carriers)
        acc.add(offset_unchecked(c, table, c.final.x - offset.x, c.final.y - offset.y));
    return acc.value();
}

SensingFootprint sensing_footprint(const ChargeCloud& burst, const InducedChargeTable& table,
                                   const FootprintOptions& opt)
{
    if (table.empty())
        throw DataError("sensing footprint needs a weighting-potential table");
    if (!(opt.spacing > 0 && opt.map_half_width >= opt.spacing))
        throw ConfigError("footprint spacing and map width must be positive");
    const double h = opt.spacing;
    const auto& zs = table.zs();
    const long K = static_cast<long>(std::ceil(table.lateral_extent() / h));
    const long Mh = static_cast<long>(std::ceil(opt.map_half_width / h));

    double reach = 0.0;
    for (const auto& c : burst.carriers)
        reach = std::max({reach, std::abs(c.final.x), std::abs(c.final.y)});
    const long C = std::min(static_cast<long>(std::ceil(reach / h)) + 1, Mh + K + 1);
    const auto N = static_cast<long>(nice_fft_size(static_cast<std::size_t>(Mh + C + K + 2)));
    const long Nc = N / 2 + 1;
    auto wrap = [N](long i) { return static_cast<std::size_t>(((i % N) + N) % N); };

    // Bulk carriers per z cell; top-face carriers form their own layer
    std::vector<std::vector<std::size_t>> by_cell(zs.size());
    std::vector<std::size_t> surface;
    for (std::size_t n = 0; n < burst.carriers.size(); ++n) {
        if (on_top_face(burst.carriers[n])) {
            surface.push_back(n);
            continue;
        }
        const double z = std::clamp(burst.carriers[n].final.z, zs.front(), zs.back());
        auto it = std::upper_bound(zs.begin(), zs.end(), z);
        const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - zs.begin()), 1, zs.size() - 1) - 1;
        by_cell[k].push_back(n);
    }
    const IslandShape& island = table.info().island;

    const std::size_t nreal = static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
    const std::size_t ncomplex = static_cast<std::size_t>(N) * static_cast<std::size_t>(Nc);
    auto raster = fftw_array<double>(nreal);
    auto kernel = fftw_array<double>(nreal);
    auto raster_hat = fftw_array<fftw_complex>(ncomplex);
    auto kernel_hat = fftw_array<fftw_complex>(ncomplex);
    auto accum = fftw_array<fftw_complex>(ncomplex);
    std::fill_n(&accum[0][0], 2 * ncomplex, 0.0);

    const FftwPlan fwd([&] {
        return fftw_plan_dft_r2c_2d(static_cast<int>(N), static_cast<int>(N), raster.get(), raster_hat.get(),
                                    FFTW_ESTIMATE);
    });

    bool any = false;
    for (std::size_t k = 0; k < zs.size(); ++k) {
        std::fill_n(raster.get(), nreal, 0.0);
        bool populated = false;
        auto deposit = [&](std::size_t n, double zweight) {
            const auto& c = burst.carriers[n];
            const double ux = c.final.x / h, uy = c.final.y / h;
            const long ix = static_cast<long>(std::floor(ux)), iy = static_cast<long>(std::floor(uy));
            if (std::abs(ix) > C || std::abs(iy) > C)
                return;
            const double fx = ux - ix, fy = uy - iy;
            const double q = -c.charge() * zweight;
            raster[wrap(iy) * N + wrap(ix)] += q * (1 - fx) * (1 - fy);
            raster[wrap(iy) * N + wrap(ix + 1)] += q * fx * (1 - fy);
            raster[wrap(iy + 1) * N + wrap(ix)] += q * (1 - fx) * fy;
            raster[wrap(iy + 1) * N + wrap(ix + 1)] += q * fx * fy;
            populated = true;
        };
        if (k > 0) {
            for (std::size_t n : by_cell[k - 1]) {
                const double z = std::clamp(burst.carriers[n].final.z, zs.front(), zs.back());
                deposit(n, (z - zs[k - 1]) / (zs[k] - zs[k - 1]));
            }
        }
        if (k + 1 < zs.size()) {
            for (std::size_t n : by_cell[k]) {
                const double z = std::clamp(burst.carriers[n].final.z, zs.front(), zs.back());
                deposit(n, (zs[k + 1] - z) / (zs[k + 1] - zs[k]));
            }
        }
        if (!populated)
            continue;

        std::fill_n(kernel.get(), nreal, 0.0);
        bool nonzero = false;
        for (long j = -K; j <= K; ++j) {
            for (long i = -K; i <= K; ++i) {
                const double w = table.lookup(i * h, j * h, zs[k]);
                if (w != 0.0) {
                    kernel[wrap(j) * N + wrap(i)] = w;
                    nonzero = true;
                }
            }
        }
        if (!nonzero)
            continue;
        any = true;
        fftw_execute_dft_r2c(fwd.get(), raster.get(), raster_hat.get());
        fftw_execute_dft_r2c(fwd.get(), kernel.get(), kernel_hat.get());
        for (std::size_t n = 0; n < ncomplex; ++n) {
            const double ar = raster_hat[n][0], ai = raster_hat[n][1];
            const double br = kernel_hat[n][0], bi = kernel_hat[n][1];
            accum[n][0] += ar * br - ai * bi;
            accum[n][1] += ar * bi + ai * br;
        }
    }

    SensingFootprint out;
    out.spacing = h;
    for (long i = -Mh; i <= Mh; ++i)
        out.axis.push_back(i * h);
    out.charge.assign(out.axis.size() * out.axis.size(), 0.0);
    if (any) {
        const FftwPlan inv([&] {
            return fftw_plan_dft_c2r_2d(static_cast<int>(N), static_cast<int>(N), accum.get(), raster.get(),
                                        FFTW_ESTIMATE);
        });
        fftw_execute(inv.get());
        const double norm = 1.0 / static_cast<double>(nreal);
        std::size_t m = 0;
        for (long j = -Mh; j <= Mh; ++j)
            for (long i = -Mh; i <= Mh; ++i)
                out.charge[m++] = raster[wrap(j) * N + wrap(i)] * norm;
    }

    // Top-face carriers only see the thin gap band around the island, which
    // the map raster cannot resolve; add them exactly where they can matter.
    const double band = island.arm_half_length + island.gap + 2.0 * h;
    const long span = static_cast<long>(std::ceil(band / h));
    for (std::size_t n : surface) {
        const auto& c = burst.carriers[n];
        const long cx = std::lround(c.final.x / h), cy = std::lround(c.final.y / h);
        for (long j = std::max(cy - span, -Mh); j <= std::min(cy + span, Mh); ++j)
            for (long i = std::max(cx - span, -Mh); i <= std::min(cx + span, Mh); ++i) {
                const double v = offset_unchecked(c, table, c.final.x - i * h, c.final.y - j * h);
                if (v != 0.0)
                    out.charge[static_cast<std::size_t>(j + Mh) * out.axis.size() + static_cast<std::size_t>(i + Mh)] += v;
            }
    }

    GridField field{out.axis, out.axis, out.charge};
    const double peak = *std::max_element(field.values.begin(), field.values.end());
    for (double level : opt.levels) {
        if (!(peak >= level))
            throw DataError("footprint contour absent: induced charge never reaches " + std::to_string(level) + " e");
        ContourLevel c;
        c.level = level;
        c.mean_radius = mean_contour_radius(field, level);
        c.polylines = iso_contours(field, level);
        out.contours.push_back(std::move(c));
    }
    return out;
}

}  // namespace qpgamma
