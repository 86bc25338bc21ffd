#include "qpgamma/coincidence.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {

Interval wilson_interval(std::size_t k, std::size_t n, double confidence)
{
    if (n == 0)
        return {0.0, 1.0};
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
    const double nn = static_cast<double>(n), p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

RateEstimate jump_rate(std::size_t count, double duration, double confidence)
{
    if (!(duration > 0))
        throw ConfigError("rate duration must be positive");
    RateEstimate r;
    r.count = count;
    r.duration = duration;
    r.rate = static_cast<double>(count) / duration;
    const double alpha = 1.0 - confidence;
    if (count == 0) {
        r.lower = 0.0;
        r.upper = -std::log(alpha) / duration;
    } else {
        const double k = static_cast<double>(count);
        r.lower = boost::math::quantile(boost::math::chi_squared(2 * k), alpha / 2) / (2 * duration);
        r.upper = boost::math::quantile(boost::math::chi_squared(2 * k + 2), 1 - alpha / 2) / (2 * duration);
    }
    return r;
}

RateEstimate jump_rate(std::span<const JumpEvent> jumps, double duration, double confidence)
{
    return jump_rate(jumps.size(), duration, confidence);
}

PowerLaw rate_vs_distance(std::span<const double> rates, std::span<const double> distances,
                          std::span<const double> errors)
{
    if (rates.size() != distances.size() || rates.size() < 2)
        throw DataError("power-law fit needs at least two matching rate/distance points");
    if (!errors.empty() && errors.size() != rates.size())
        throw DataError("rate errors must match the rates");
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] > 0 && distances[i] > 0))
            throw DataError("power-law fit needs positive rates and distances");
        const double x = std::log(distances[i]), y = std::log(rates[i]);
        double w = 1.0;
        if (!errors.empty()) {
            const double rel = errors[i] / rates[i];
            w = rel > 0 ? 1.0 / (rel * rel) : 1.0;
        }
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 0))
        throw DataError("power-law fit needs distinct distances");
    PowerLaw out;
    out.exponent = (sw * sxy - sx * sy) / det;
    out.prefactor = std::exp((sy - out.exponent * sx) / sw);
    if (!errors.empty()) {
        out.exponent_error = std::sqrt(sw / det);
    } else if (rates.size() > 2) {
        double ss = 0;
        for (std::size_t i = 0; i < rates.size(); ++i) {
            const double r = std::log(rates[i]) - std::log(out.prefactor) - out.exponent * std::log(distances[i]);
            ss += r * r;
        }
        out.exponent_error = std::sqrt(ss / (static_cast<double>(rates.size()) - 2.0) * sw / det);
    }
    return out;
}

PairStats correlation_probability(std::span<const double> ti, std::span<const double> tj, double duration,
                                  double window)
{
    if (!(duration > 0 && window > 0))
        throw ConfigError("correlation needs positive duration and window");
    const auto nbins = static_cast<std::size_t>(std::ceil(duration / window));
    std::vector<std::uint8_t> bi(nbins, 0), bj(nbins, 0);
    auto mark = [&](std::span<const double> t, std::vector<std::uint8_t>& b) {
        for (double v : t) {
            if (v < 0 || v >= duration)
                continue;
            b[std::min(nbins - 1, static_cast<std::size_t>(v / window))] = 1;
        }
    };
    mark(ti, bi);
    mark(tj, bj);
    PairStats s;
    s.bins = nbins;
    for (std::size_t k = 0; k < nbins; ++k) {
        s.n_i += bi[k];
        s.n_j += bj[k];
        s.n_ij += bi[k] & bj[k];
    }
    if (s.n_i + s.n_j == 0)
        throw DataError("correlation probability undefined: both streams are empty");
    const auto N = static_cast<std::int64_t>(nbins), ni = static_cast<std::int64_t>(s.n_i),
               nj = static_cast<std::int64_t>(s.n_j), nij = static_cast<std::int64_t>(s.n_ij);
    const std::int64_t rest = N + nij - ni - nj;
    if (rest <= 0)
        throw DataError("correlation probability undefined: every window holds an event");
    const auto num = static_cast<double>(2 * (N * nij - ni * nj));
    const auto den = static_cast<double>(rest * (ni + nj));
    s.p_i = static_cast<double>(ni) / N;
    s.p_j = static_cast<double>(nj) / N;
    s.p_ij_obs = static_cast<double>(nij) / N;
    s.p_corr = num / den;
    s.p_corr_error = 2.0 * std::sqrt(std::max<double>(static_cast<double>(nij), 1.0)) * static_cast<double>(N) / den;
    s.observed_rate = static_cast<double>(nij) / duration;
    s.background_rate = static_cast<double>(ni) * static_cast<double>(nj) / N / duration;
    return s;
}

double simulated_correlation(std::size_t n_i, std::size_t n_j, std::size_t n_ij)
{
    if (n_i + n_j == 0)
        throw DataError("correlation probability undefined: no jumps on either qubit");
    return 2.0 * static_cast<double>(n_ij) / static_cast<double>(n_i + n_j);
}

namespace {

std::vector<std::size_t> switches(const MaskedDigitalTrace& t)
{
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k < t.parity.size(); ++k)
        if (!t.mask[k] && !t.mask[k - 1] && t.parity[k] != t.parity[k - 1])
            out.push_back(k);
    return out;
}

}  // namespace

ParityPairRate pairwise_parity_rate(const MaskedDigitalTrace& a, const MaskedDigitalTrace& b, std::size_t window)
{
    if (a.mask.size() != b.mask.size())
        throw DataError("parity traces have different lengths");
    if (!(a.dt > 0) || std::abs(a.dt - b.dt) > 1e-12 * a.dt)
        throw DataError("parity traces have different sample periods");
    std::size_t joint = 0;
    for (std::size_t k = 0; k < a.mask.size(); ++k)
        joint += !a.mask[k] && !b.mask[k];
    if (joint == 0)
        throw DataError("no jointly unmasked time");

    auto jointly = [&](std::size_t k) { return !a.mask[k] && !b.mask[k]; };
    std::vector<std::size_t> sa, sb;
    for (auto k : switches(a))
        if (jointly(k))
            sa.push_back(k);
    for (auto k : switches(b))
        if (jointly(k))
            sb.push_back(k);

    ParityPairRate out;
    out.joint_time = static_cast<double>(joint) * a.dt;
    const std::size_t half = window / 2;
    std::size_t j = 0;
    for (std::size_t k : sa) {
        while (j < sb.size() && sb[j] + half < k)
            ++j;
        if (j < sb.size() && sb[j] <= k + half) {
            ++out.coincidences;
            ++j;
        }
    }
    out.observed = static_cast<double>(out.coincidences) / out.joint_time;
    out.observed_error = std::sqrt(static_cast<double>(out.coincidences)) / out.joint_time;
    out.background = a.switching_rate * b.switching_rate * static_cast<double>(window) * a.dt;
    return out;
}

PoisonEstimate poisoning_probability(double p_obs, double p_bkgd, std::size_t trials)
{
    if (!(p_bkgd < 0.5))
        throw ConfigError("background switching probability must be below 0.5");
    PoisonEstimate e;
    e.raw = 1.0 - (1.0 - 2.0 * p_obs) / (1.0 - 2.0 * p_bkgd);
    e.value = std::clamp(e.raw, 0.0, 1.0);
    if (trials > 0) {
        const double sp = std::sqrt(std::clamp(p_obs, 0.0, 1.0) * (1.0 - std::clamp(p_obs, 0.0, 1.0))
                                    / static_cast<double>(trials));
        e.error = 2.0 * sp / (1.0 - 2.0 * p_bkgd);
    }
    return e;
}

CoincidenceStats coincidence_scan(std::span<const JumpEvent> jumps, std::span<const MaskedDigitalTrace> traces,
                                  std::span<const std::string> qubits, std::size_t window)
{
    if (window < 2)
        throw ConfigError("coincidence window must span at least two samples");
    if (qubits.size() != traces.size())
        throw DataError("one qubit id is needed per parity trace");
    CoincidenceStats out;
    out.window_samples = window;
    out.jumps = jumps.size();
    out.window_seconds = traces.empty() ? 0.0 : static_cast<double>(window) * traces.front().dt;
    for (std::size_t q = 0; q < traces.size(); ++q) {
        const auto& t = traces[q];
        QubitCoincidence c;
        c.qubit = qubits[q];
        std::vector<std::uint8_t> near(t.parity.size(), 0);
        for (const auto& jmp : jumps) {
            if (jmp.index < window / 2)
                continue;
            const std::size_t b = jmp.index - window / 2, e = b + window;
            for (std::size_t k = b; k < std::min(e, near.size()); ++k)
                near[k] = 1;
            if (e > t.parity.size())
                continue;
            bool clean = true;
            for (std::size_t k = b; k < e && clean; ++k)
                clean = !t.mask[k];
            if (!clean)
                continue;
            ++c.unmasked;
            if (t.parity[b] != t.parity[e - 1])
                ++c.counts;
        }
        c.p_obs = c.unmasked ? static_cast<double>(c.counts) / static_cast<double>(c.unmasked) : 0.0;
        c.p_obs_ci = wilson_interval(c.counts, c.unmasked);

        // Background switching away from the jump windows
        std::size_t flips = 0, quiet = 0;
        for (std::size_t k = 0; k < t.parity.size(); ++k) {
            if (t.mask[k] || near[k])
                continue;
            ++quiet;
            if (k > 0 && !t.mask[k - 1] && !near[k - 1] && t.parity[k] != t.parity[k - 1])
                ++flips;
        }
        c.background_rate = quiet ? static_cast<double>(flips) / (static_cast<double>(quiet) * t.dt) : t.switching_rate;
        c.p_bkgd = c.background_rate * static_cast<double>(window) * t.dt;
        if (c.p_bkgd < 0.5)
            c.p_poison = poisoning_probability(c.p_obs, c.p_bkgd, c.unmasked);
        out.qubits.push_back(std::move(c));
    }
    return out;
}

Asymmetry jump_asymmetry(std::span<const double> magnitudes, double threshold)
{
    Asymmetry a;
    for (double m : magnitudes) {
        if (std::abs(m) > threshold) {
            ++a.total;
            a.positive += m > 0;
        }
    }
    if (a.total == 0)
        throw DataError("no jumps above threshold for the asymmetry");
    a.fraction = static_cast<double>(a.positive) / static_cast<double>(a.total);
    a.ci = wilson_interval(a.positive, a.total);
    return a;
}

Asymmetry jump_asymmetry(std::span<const JumpEvent> jumps, double threshold)
{
    std::vector<double> m;
    for (const auto& j : jumps)
        m.push_back(j.magnitude);
    return jump_asymmetry(m, threshold);
}

double threshold_analysis(double r_gamma, double r_th)
{
    if (!(r_gamma > 0))
        throw ConfigError("impact rate must be positive");
    return r_th / r_gamma;
}

double impact_rate_from_background(double jump_rate, double sensing_radius, double chip_area)
{
    if (!(sensing_radius > 0 && chip_area > 0))
        throw ConfigError("sensing radius and chip area must be positive");
    return jump_rate * chip_area / (units::pi * sensing_radius * sensing_radius);
}

}  // namespace qpgamma
