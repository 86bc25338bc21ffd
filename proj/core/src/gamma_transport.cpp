#include "qpgamma/gamma_transport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "qpgamma/errors.hpp"
#include "qpgamma/parallel.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {
namespace {

constexpr double kNudge = 1e-9;
constexpr int kMaxSteps = 100000;
constexpr double kElectronCutoffKev = 1.0;

RayInterval shape_interval(const TransportGeometry::Volume& v, const Vec3& p, const Vec3& d)
{
    return std::visit([&](const auto& s) { return intersect(s, p, d); }, v.shape);
}

Vec3 isotropic(RandomStream& rng)
{
    const double mu = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * units::pi * rng.uniform();
    return direction_from(mu, phi);
}

}  // namespace

std::string_view to_string(VolumeKind v) noexcept
{
    switch (v) {
    case VolumeKind::Substrate: return "substrate";
    case VolumeKind::NaI: return "NaI";
    case VolumeKind::Shield: return "shield";
    }
    return "?";
}

std::string_view to_string(Mechanism m) noexcept
{
    return m == Mechanism::Photoelectric ? "photoelectric" : "compton";
}

RandomStream decay_stream(std::uint64_t master_seed, std::uint64_t event_index) noexcept
{
    return RandomStream{derive_key(domain_key(master_seed, StreamDomain::Decay), event_index)};
}

//---------------------------------------------------------------------------//
// EMISSION
//---------------------------------------------------------------------------//

EmissionBias EmissionBias::toward(const Vec3& source, const Vec3& target, double radius, double fraction)
{
    EmissionBias b;
    const Vec3 d = target - source;
    const double dist = norm(d);
    b.axis = normalized(d);
    b.cone_fraction = fraction;
    b.cos_half_angle = radius >= dist ? -1.0 : std::cos(std::asin(radius / dist));
    return b;
}

double EmissionBias::weight(const Vec3& dir) const noexcept
{
    if (cone_fraction <= 0.0)
        return 1.0;
    const double iso = 1.0 / (4.0 * units::pi);
    const double omega = 2.0 * units::pi * (1.0 - cos_half_angle);
    const bool in_cone = dot(dir, axis) >= cos_half_angle;
    const double pdf = (in_cone ? cone_fraction / omega : 0.0) + (1.0 - cone_fraction) * iso;
    return iso / pdf;
}

DecayEvent sample_decay(RandomStream& stream, std::uint64_t index, const Vec3& source,
                        double secondary_branch, const EmissionBias& bias)
{
    DecayEvent ev;
    ev.index = index;
    const bool low = stream.uniform() < secondary_branch;
    auto emit = [&](double e) {
        Photon p;
        p.energy_mev = e;
        p.position = source;
        if (bias.cone_fraction > 0.0 && stream.uniform() < bias.cone_fraction) {
            const double c = 1.0 - stream.uniform() * (1.0 - bias.cos_half_angle);
            p.direction = rotate(bias.axis, c, 2.0 * units::pi * stream.uniform());
        } else {
            p.direction = isotropic(stream);
        }
        p.weight = bias.weight(p.direction);
        ev.weight *= p.weight;
        ev.photons.push_back(p);
    };
    emit(kLineHigh);
    if (low)
        emit(kLineLow);
    return ev;
}

double sample_klein_nishina(double energy_mev, RandomStream& rng) noexcept
{
    // Butcher-Messel composition-rejection on eps = E'/E
    const double k = energy_mev / units::electron_mass_mev;
    const double eps0 = 1.0 / (1.0 + 2.0 * k);
    const double eps0sq = eps0 * eps0;
    const double alpha1 = -std::log(eps0);
    const double alpha2 = alpha1 + 0.5 * (1.0 - eps0sq);
    double eps, epssq, greject;
    do {
        if (alpha1 > alpha2 * rng.uniform()) {
            eps = std::exp(-alpha1 * rng.uniform());
            epssq = eps * eps;
        } else {
            epssq = eps0sq + (1.0 - eps0sq) * rng.uniform();
            eps = std::sqrt(epssq);
        }
        const double onecost = (1.0 - eps) / (eps * k);
        const double sint2 = onecost * (2.0 - onecost);
        greject = 1.0 - eps * sint2 / (1.0 + epssq);
    } while (greject < rng.uniform());
    return std::clamp(eps, eps0, 1.0);
}

//---------------------------------------------------------------------------//
// GEOMETRY
//---------------------------------------------------------------------------//

TransportGeometry::TransportGeometry(const Geometry& g)
{
    add({VolumeKind::Substrate, Material::Silicon, g.substrate_box(), 10e-6});
    for (const auto& s : g.shield_slabs) {
        Box b{{-s.half_width, -s.half_width, s.standoff},
              {s.half_width, s.half_width, s.standoff + s.thickness}};
        add({VolumeKind::Shield, s.material, b, 0.0});
    }
    if (g.nai_detector) {
        const auto& n = *g.nai_detector;
        add({VolumeKind::NaI, Material::SodiumIodide, ZCylinder{n.center, 0.5 * n.diameter, 0.5 * n.length},
             0.5e-3});
    }
}

void TransportGeometry::add(Volume v)
{
    volumes_.push_back(std::move(v));
}

double TransportGeometry::deposit_electron(const Volume& v, Vec3 pos, Vec3 dir, double kev, Mechanism mech,
                                           std::uint64_t event_index, RandomStream& rng,
                                           std::vector<EnergyDeposit>& out, bool record) const
{
    auto emit = [&](const Vec3& p, double de) {
        if (de > 0.0 && record)
            out.push_back({event_index, v.kind, p, de, mech});
    };
    if (kev <= 0.0)
        return 0.0;
    if (v.electron_step <= 0.0) {
        emit(pos, kev);
        return 0.0;
    }
    // Condensed history: straight steps with continuous energy loss, then a
    // Gaussian multiple-scattering deflection.
    const double min_step = 0.05 * v.electron_step;
    double e = kev;
    for (int it = 0; it < kMaxSteps; ++it) {
        const double range = electron_range(v.material, e);
        const double exit = std::max(0.0, shape_interval(v, pos, dir).exit);
        if (e < kElectronCutoffKev || range <= min_step) {
            if (range < exit) {
                emit(pos + (0.5 * range) * dir, e);
                return 0.0;
            }
        }
        const double step = std::max(min_step, std::min(v.electron_step, 0.25 * range));
        if (step >= exit) {
            const double left = electron_energy_after(v.material, e, exit);
            emit(pos + (0.5 * exit) * dir, e - left);
            return left;
        }
        if (step >= range) {
            emit(pos + (0.5 * range) * dir, e);
            return 0.0;
        }
        const double left = electron_energy_after(v.material, e, step);
        emit(pos + (0.5 * step) * dir, e - left);
        pos = pos + step * dir;
        const double theta0 = highland_theta0(v.material, 0.5 * (e + left), step, range);
        const double theta = theta0 * std::sqrt(-2.0 * std::log(rng.uniform_open0()));
        dir = rotate(dir, std::cos(std::min(theta, units::pi)), 2.0 * units::pi * rng.uniform());
        e = left;
    }
    throw NumericalError("electron tracking did not terminate");
}

double TransportGeometry::trace(const Photon& photon, RandomStream& rng, std::uint64_t event_index,
                                std::vector<EnergyDeposit>& out, bool record_shields) const
{
    if (!(photon.energy_mev > 0.0 && photon.energy_mev <= 3.0))
        throw DataError("photon energy outside (0, 3] MeV");

    Vec3 pos = photon.position;
    Vec3 dir = photon.direction;
    double e = photon.energy_mev;
    double escaped_kev = 0.0;

    for (int step = 0; step < kMaxSteps; ++step) {
        // Locate the volume containing the ray start
        const Volume* inside = nullptr;
        double exit = 0.0;
        const Volume* next = nullptr;
        double enter = std::numeric_limits<double>::infinity();
        for (const auto& v : volumes_) {
            const auto iv = shape_interval(v, pos, dir);
            if (!iv.hit() || iv.exit <= 0.0)
                continue;
            if (iv.enter <= 0.0) {
                if (inside)
                    throw DataError("geometry traversal failure: overlapping volumes");
                inside = &v;
                exit = iv.exit;
            } else if (iv.enter < enter) {
                enter = iv.enter;
                next = &v;
            }
        }

        if (!inside) {
            if (!next) {
                escaped_kev += e * units::kev_per_mev;
                return escaped_kev;
            }
            pos = pos + (enter + kNudge) * dir;
            continue;
        }

        const bool record = record_shields || inside->kind != VolumeKind::Shield;
        const Attenuation mu = attenuation(inside->material, e);
        const double s = std::isinf(mu.total()) ? 0.0 : rng.exponential() / mu.total();
        if (s >= exit) {
            pos = pos + (exit + kNudge) * dir;
            continue;
        }
        pos = pos + s * dir;

        const bool photo = std::isinf(mu.photoelectric) || rng.uniform() * mu.total() < mu.photoelectric;
        if (photo) {
            const Vec3 e_dir = isotropic(rng);
            escaped_kev += deposit_electron(*inside, pos, e_dir, e * units::kev_per_mev,
                                            Mechanism::Photoelectric, event_index, rng, out, record);
            return escaped_kev;
        }

        const double eps = sample_klein_nishina(e, rng);
        const double e_out = eps * e;
        const double cos_theta = 1.0 - (1.0 - eps) / (eps * e / units::electron_mass_mev);
        const Vec3 new_dir = rotate(dir, std::clamp(cos_theta, -1.0, 1.0), 2.0 * units::pi * rng.uniform());
        const Vec3 p_e = e * dir - e_out * new_dir;
        const double t_kev = (e - e_out) * units::kev_per_mev;
        const double pn = norm(p_e);
        const Vec3 e_dir = pn > 0.0 ? (1.0 / pn) * p_e : new_dir;
        escaped_kev += deposit_electron(*inside, pos, e_dir, t_kev, Mechanism::Compton, event_index, rng,
                                        out, record);
        dir = new_dir;
        e = e_out;

        if (e < kPhotonCutoff) {
            if (record)
                out.push_back({event_index, inside->kind, pos, e * units::kev_per_mev, Mechanism::Photoelectric});
            return escaped_kev;
        }
    }
    throw NumericalError("geometry traversal failure: step limit exceeded");
}

std::vector<EnergyDeposit> trace_photon(const Photon& photon, const TransportGeometry& geometry,
                                        RandomStream& stream)
{
    std::vector<EnergyDeposit> out;
    geometry.trace(photon, stream, 0, out);
    return out;
}

//---------------------------------------------------------------------------//
// BATCHES
//---------------------------------------------------------------------------//

Histogram Histogram::uniform(double lo, double hi, std::size_t bins)
{
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins, 0.0);
    return h;
}

void Histogram::fill(double x, double w) noexcept
{
    if (x < edges.front() || x >= edges.back())
        return;
    const auto i = static_cast<std::size_t>((x - edges.front()) / bin_width());
    counts[std::min(i, counts.size() - 1)] += w;
}

namespace {

struct ChunkResult {
    std::vector<EnergyDeposit> deposits;
    std::vector<EventSummary> events;
    // Per stored event and emission line: weight of the photon if it
    // deposited, and whether an emitted photon left no deposit
    std::vector<std::array<double, 2>> line_weight;
    std::vector<std::array<std::uint8_t, 2>> line_missed;
    std::array<std::uint64_t, 2> emitted{};
    std::array<std::uint64_t, 2> deposited{};
};

struct BatchEvents {
    std::vector<EnergyDeposit> deposits;
    std::vector<EventSummary> events;
};

EmissionBias substrate_bias(const Geometry& g, double fraction)
{
    const Box b = g.substrate_box();
    const double radius = 0.5 * norm(b.hi - b.lo);
    return EmissionBias::toward(g.source_position(), 0.5 * (b.lo + b.hi), radius, fraction);
}

BatchEvents run_chunks(const ExperimentConfig& config, std::uint64_t n, const BatchOptions& opt,
                       const EmissionBias& bias)
{
    const TransportGeometry geo(config.geometry);
    const unsigned chunks = chunk_count(n, opt.jobs);
    std::vector<ChunkResult> results(chunks);
    parallel_chunks(n, chunks, [&](std::size_t c, std::size_t begin, std::size_t end) {
        auto& r = results[c];
        std::vector<EnergyDeposit> buf;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t idx = opt.first_event + i;
            RandomStream rng = decay_stream(config.rng.master_seed, idx);
            DecayEvent ev = sample_decay(rng, idx, config.geometry.source_position(), config.secondary_branch, bias);
            buf.clear();
            std::array<double, 2> lw{};
            std::array<std::uint8_t, 2> missed{};
            double weight = 1.0;
            for (std::size_t k = 0; k < ev.photons.size(); ++k) {
                auto& p = ev.photons[k];
                if (opt.fixed_direction) {
                    p.direction = normalized(*opt.fixed_direction);
                    p.weight = 1.0;
                }
                const std::size_t line = p.energy_mev == kLineHigh ? 0 : 1;
                const std::size_t before = buf.size();
                geo.trace(p, rng, idx, buf, opt.record_shields);
                bool deposited = false;
                for (std::size_t d = before; d < buf.size(); ++d)
                    deposited = deposited || buf[d].volume != VolumeKind::Shield;
                ++r.emitted[line];
                if (deposited) {
                    weight *= p.weight;
                    lw[line] = p.weight;
                    ++r.deposited[line];
                } else {
                    missed[line] = 1;
                }
            }
            EventSummary s{idx, weight, 0.0, 0.0};
            for (const auto& d : buf) {
                if (d.volume == VolumeKind::Substrate)
                    s.substrate_kev += d.energy_kev;
                else if (d.volume == VolumeKind::NaI)
                    s.nai_kev += d.energy_kev;
            }
            if (!buf.empty())
                r.deposits.insert(r.deposits.end(), buf.begin(), buf.end());
            if (s.substrate_kev > 0.0 || s.nai_kev > 0.0) {
                r.events.push_back(s);
                r.line_weight.push_back(lw);
                r.line_missed.push_back(missed);
            }
        }
    });

    // A photon without a deposit carries the likelihood ratio of its outcome,
    // (1 - a) / (1 - b), where a and b are the deposit probabilities of its
    // line under analog and biased emission. Both are estimated from the
    // batch; for analog emission the factor is exactly one.
    std::array<std::uint64_t, 2> emitted{}, deposited{};
    std::array<double, 2> analog{};
    for (const auto& r : results) {
        for (std::size_t l = 0; l < 2; ++l) {
            emitted[l] += r.emitted[l];
            deposited[l] += r.deposited[l];
        }
        for (const auto& w : r.line_weight) {
            analog[0] += w[0];
            analog[1] += w[1];
        }
    }
    std::array<double, 2> factor{1.0, 1.0};
    for (std::size_t l = 0; l < 2; ++l) {
        if (emitted[l] == 0 || deposited[l] == emitted[l])
            continue;
        const double ne = static_cast<double>(emitted[l]);
        factor[l] = (1.0 - analog[l] / ne) / (1.0 - static_cast<double>(deposited[l]) / ne);
    }

    BatchEvents out;
    for (auto& r : results) {
        out.deposits.insert(out.deposits.end(), r.deposits.begin(), r.deposits.end());
        for (std::size_t e = 0; e < r.events.size(); ++e) {
            EventSummary s = r.events[e];
            for (std::size_t l = 0; l < 2; ++l) {
                if (r.line_missed[e][l])
                    s.weight *= factor[l];
            }
            out.events.push_back(s);
        }
    }
    return out;
}

}  // namespace

DepositLog run_decay_batch(const ExperimentConfig& config, std::uint64_t n, const BatchOptions& opt)
{
    if (n == 0)
        throw ConfigError("run_decay_batch requires at least one decay");
    const double fraction = opt.bias_cone_fraction.value_or(config.geometry.bias_cone_fraction);
    auto batch = run_chunks(config, n, opt, substrate_bias(config.geometry, fraction));

    DepositLog log;
    log.n_decays = n;
    log.deposit_histogram = Histogram::uniform(0.0, 1500.0, 150);
    log.deposits = std::move(batch.deposits);
    log.events = std::move(batch.events);
    double w_hits = 0.0, w2_hits = 0.0, w_energy = 0.0;
    // Sums run in event order so the result does not depend on the chunking
    for (const auto& e : log.events) {
        if (e.substrate_kev > 0.0) {
            log.deposit_histogram.fill(e.substrate_kev, e.weight);
            w_hits += e.weight;
            w2_hits += e.weight * e.weight;
            w_energy += e.weight * e.substrate_kev;
            ++log.substrate_hits;
        }
    }
    log.hit_probability = w_hits / static_cast<double>(n);
    log.hit_probability_error = std::sqrt(w2_hits) / static_cast<double>(n);
    log.substrate_hit_rate = log.hit_probability * config.geometry.source_activity;
    log.mean_deposit_kev = w_hits > 0.0 ? w_energy / w_hits : 0.0;
    return log;
}

ActivityEstimate estimate_activity(double measured_peak_rate, double photoabsorption_count, double trials)
{
    if (!(trials > 0.0))
        throw DataError("activity estimate requires a positive number of trials");
    if (!(photoabsorption_count >= 0.0) || !(measured_peak_rate >= 0.0))
        throw DataError("activity estimate requires non-negative rate and count");
    if (photoabsorption_count == 0.0)
        throw DataError("activity estimate undefined for zero photoabsorption count");
    ActivityEstimate a;
    a.decays_per_second = measured_peak_rate / (photoabsorption_count / trials);
    a.micro_curie = a.decays_per_second / units::decays_per_curie * 1e6;
    return a;
}

NaISpectrum nai_spectrum(const ExperimentConfig& config, std::uint64_t n, const BatchOptions& opt)
{
    if (!config.geometry.nai_detector)
        throw ConfigError("nai_spectrum requires a configured NaI detector");
    NaISpectrum out;
    out.n_decays = n;
    out.histogram = Histogram::uniform(0.0, 3000.0, 600);
    if (n == 0)
        return out;

    const auto& nai = *config.geometry.nai_detector;
    const double fraction = opt.bias_cone_fraction.value_or(config.geometry.bias_cone_fraction);
    const double radius = 0.5 * std::hypot(nai.diameter, nai.length) * 1.2;
    const auto bias = EmissionBias::toward(config.geometry.source_position(), nai.center, radius, fraction);
    const auto batch = run_chunks(config, n, opt, bias);

    const double half_bin = 0.5 * out.histogram.bin_width();
    for (const auto& e : batch.events) {
        if (e.nai_kev <= 0.0)
            continue;
        out.histogram.fill(e.nai_kev, e.weight);
        out.total_counts += e.weight;
        if (std::abs(e.nai_kev - kLineHigh * units::kev_per_mev) <= half_bin)
            out.peak_high_counts += e.weight;
        if (std::abs(e.nai_kev - kLineLow * units::kev_per_mev) <= half_bin)
            out.peak_low_counts += e.weight;
    }
    return out;
}

}  // namespace qpgamma
