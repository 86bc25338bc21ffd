#include "qpgamma/timeseries.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {

double tomography_response(double ng, double d, double nu) noexcept
{
    return 0.5 * (d + nu * std::cos(units::pi * std::cos(2.0 * units::pi * ng)));
}

TomographyStream synth_tomography_stream(const JumpProcess& process, const TomographySettings& s,
                                         RandomStream& rng)
{
    if (!(process.rate >= 0.0))
        throw ConfigError("jump rate must be non-negative");
    if (s.points < 2 || s.shots < 1 || !(s.scan_interval > 0) || !(s.duration > 0))
        throw ConfigError("tomography settings need >= 2 points, >= 1 shot and positive timing");
    const double lo = 0.5 * (s.d - std::abs(s.nu)), hi = 0.5 * (s.d + std::abs(s.nu));
    if (lo < 0.0 || hi > 1.0)
        throw ConfigError("tomography response leaves [0, 1] for the given d and nu");

    TomographyStream out;
    if (process.rate > 0.0) {
        for (double t = rng.exponential() / process.rate; t < s.duration; t += rng.exponential() / process.rate) {
            double raw;
            if (process.magnitudes.empty()) {
                raw = 0.5 - rng.uniform();
            } else {
                const auto k = static_cast<std::size_t>(rng.uniform() * process.magnitudes.size());
                raw = process.magnitudes[std::min(k, process.magnitudes.size() - 1)];
            }
            out.jumps.push_back({t, raw, alias_charge(raw)});
        }
    }

    const double initial = rng.uniform();
    std::size_t next_jump = 0;
    double offset = initial;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * s.scan_interval;
        if (t >= s.duration)
            break;
        while (next_jump < out.jumps.size() && out.jumps[next_jump].time <= t)
            offset += out.jumps[next_jump++].raw;
        TomographyScan scan;
        scan.time = t;
        scan.true_offset = alias_charge(offset);
        for (int j = 0; j < s.points; ++j) {
            const double ng = static_cast<double>(j) / s.points;
            const double p = std::clamp(tomography_response(ng + offset, s.d, s.nu), 0.0, 1.0);
            boost::random::binomial_distribution<int> bin(s.shots, p);
            scan.ng_ext.push_back(ng);
            scan.p1.push_back(static_cast<double>(bin(rng)) / s.shots);
        }
        out.scans.push_back(std::move(scan));
    }
    return out;
}

double separation_from_fidelity(double fidelity)
{
    if (!(fidelity > 0.0 && fidelity <= 1.0))
        throw ConfigError("readout fidelity must lie in (0, 1]");
    if (fidelity == 1.0)
        return std::numeric_limits<double>::infinity();
    return 2.0 * std::sqrt(2.0) * boost::math::erf_inv(fidelity);
}

ParityTrace synth_parity_trace(const ParitySettings& s, const std::vector<DegeneracyEpisode>& episodes,
                               RandomStream& rng)
{
    return synth_parity_trace(s, episodes, {}, rng);
}

ParityTrace synth_parity_trace(const ParitySettings& s, const std::vector<DegeneracyEpisode>& episodes,
                               const std::vector<std::size_t>& forced, RandomStream& rng)
{
    if (!(s.gamma >= 0.0))
        throw ConfigError("parity switching rate must be non-negative");
    if (!(s.dt > 0.0) || s.samples == 0)
        throw ConfigError("parity trace needs a positive period and at least one sample");
    if (!(s.sigma >= 0.0))
        throw ConfigError("noise scale must be non-negative");

    ParityTrace tr;
    tr.dt = s.dt;
    tr.fidelity = s.fidelity;
    tr.separation = separation_from_fidelity(s.fidelity);
    tr.qubit = s.qubit;
    tr.episodes = episodes;
    tr.samples.resize(s.samples);
    tr.hidden.resize(s.samples);

    // States at 0 and 1; the noise sigma is 1/separation so that the
    // separation in noise units is s.
    const double noise = std::isinf(tr.separation) ? 0.0 : s.sigma / tr.separation;
    std::vector<double> collapse(s.samples, 0.0);
    for (const auto& e : episodes) {
        for (std::size_t i = e.start; i < std::min(s.samples, e.start + e.length); ++i)
            collapse[i] = std::max(e.sigma_scale, 1e-300);
    }
    std::vector<std::size_t> forced_sorted = forced;
    std::sort(forced_sorted.begin(), forced_sorted.end());
    std::size_t next_forced = 0;

    const double mean_flips = s.gamma * s.dt;
    boost::random::poisson_distribution<int> flips(mean_flips > 0 ? mean_flips : 1.0);
    std::uint8_t state = rng.uniform() < 0.5 ? 0 : 1;
    for (std::size_t i = 0; i < s.samples; ++i) {
        if (i > 0 && mean_flips > 0.0) {
            const int k = flips(rng);
            tr.true_switches += static_cast<std::size_t>(k);
            if (k % 2 == 1)
                state ^= 1;
        }
        while (next_forced < forced_sorted.size() && forced_sorted[next_forced] <= i) {
            if (forced_sorted[next_forced] == i && rng.uniform() < 0.5) {
                state ^= 1;
                ++tr.true_switches;
            }
            ++next_forced;
        }
        tr.hidden[i] = state;
        const double z = rng.normal();
        if (collapse[i] > 0.0)
            tr.samples[i] = 0.5 + collapse[i] * noise * z;
        else
            tr.samples[i] = static_cast<double>(state) + noise * z;
    }
    return tr;
}

OffsetChargeSeries synth_singleshot_series(const SingleShotSettings& s, const std::vector<std::size_t>& jump_index,
                                           const std::vector<double>& jump_raw, RandomStream& rng)
{
    if (jump_index.size() != jump_raw.size())
        throw ConfigError("jump index and magnitude lists differ in length");
    if (s.reset_interval == 0 || s.samples == 0 || !(s.dt > 0))
        throw ConfigError("single-shot settings need positive reset interval, length and period");
    OffsetChargeSeries out;
    out.dt = s.dt;
    out.d = s.d;
    out.nu = s.nu;
    out.bias = s.bias;
    out.signal.resize(s.samples);

    std::vector<std::size_t> order(jump_index.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return jump_index[a] < jump_index[b]; });
    for (std::size_t i : order) {
        out.jump_index.push_back(jump_index[i]);
        out.jump_raw.push_back(jump_raw[i]);
    }

    std::size_t next = 0;
    double drift = 0.0;  // offset accumulated since the last reset
    for (std::size_t i = 0; i < s.samples; ++i) {
        if (i % s.reset_interval == 0) {
            out.resets.push_back(i);
            drift = 0.0;
        }
        while (next < out.jump_index.size() && out.jump_index[next] <= i)
            drift += out.jump_raw[next++];
        const double p = std::clamp(tomography_response(s.bias + drift, s.d, s.nu), 0.0, 1.0);
        out.signal[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace qpgamma
