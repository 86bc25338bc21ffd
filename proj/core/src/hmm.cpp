#include "qpgamma/hmm.hpp"

#include <algorithm>
#include <cmath>

#include "qpgamma/errors.hpp"

namespace qpgamma {
namespace {

struct Range {
    std::size_t begin, end;
};

std::vector<Range> unmasked_segments(std::span<const std::uint8_t> mask, std::size_t n)
{
    std::vector<Range> out;
    std::size_t i = 0;
    while (i < n) {
        while (i < n && mask[i])
            ++i;
        const std::size_t b = i;
        while (i < n && !mask[i])
            ++i;
        if (i > b)
            out.push_back({b, i});
    }
    return out;
}

// Emission likelihoods scaled so the larger one is 1; returns the log of the scale.
double emissions(double x, const HmmParams& p, double e[2]) noexcept
{
    const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
    const double d0 = (x - p.mean[0]) * (x - p.mean[0]) * inv;
    const double d1 = (x - p.mean[1]) * (x - p.mean[1]) * inv;
    const double dm = std::min(d0, d1);
    e[0] = std::exp(dm - d0);
    e[1] = std::exp(dm - d1);
    return -dm - std::log(p.sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

}  // namespace

MaskedDigitalTrace hmm_decode(std::span<const double> x, std::span<const std::uint8_t> mask, double dt,
                              const HmmOptions& opt)
{
    if (mask.size() != x.size())
        throw DataError("mask and trace lengths differ");
    if (!(dt > 0))
        throw ConfigError("sample period must be positive");
    const auto segs = unmasked_segments(mask, x.size());
    if (segs.empty())
        throw DataError("trace is fully masked");

    MaskedDigitalTrace out;
    out.dt = dt;
    out.mask.assign(mask.begin(), mask.end());
    out.parity.assign(x.size(), 0);
    for (const auto& s : segs)
        out.unmasked_samples += s.end - s.begin;

    // Two-means split of the unmasked samples
    double lo = x[segs[0].begin], hi = lo;
    for (const auto& s : segs)
        for (std::size_t i = s.begin; i < s.end; ++i) {
            lo = std::min(lo, x[i]);
            hi = std::max(hi, x[i]);
        }
    HmmParams p;
    if (lo == hi) {
        out.params.mean[0] = out.params.mean[1] = lo;
        out.params.sigma = 0.0;
        out.params.flip = 0.0;
        return out;
    }
    double c0 = lo, c1 = hi;
    std::size_t crossings = 0;
    for (int it = 0; it < 100; ++it) {
        const double t = 0.5 * (c0 + c1);
        double s0 = 0, s1 = 0;
        std::size_t n0 = 0, n1 = 0;
        for (const auto& s : segs)
            for (std::size_t i = s.begin; i < s.end; ++i) {
                if (x[i] < t) {
                    s0 += x[i];
                    ++n0;
                } else {
                    s1 += x[i];
                    ++n1;
                }
            }
        const double m0 = n0 ? s0 / n0 : c0, m1 = n1 ? s1 / n1 : c1;
        if (m0 == c0 && m1 == c1)
            break;
        c0 = m0;
        c1 = m1;
    }
    double ss = 0;
    const double t = 0.5 * (c0 + c1);
    for (const auto& s : segs)
        for (std::size_t i = s.begin; i < s.end; ++i) {
            const double c = x[i] < t ? c0 : c1;
            ss += (x[i] - c) * (x[i] - c);
            if (i > s.begin && ((x[i] < t) != (x[i - 1] < t)))
                ++crossings;
        }
    const double sigma_floor = 1e-6 * (c1 - c0);
    p.mean[0] = c0;
    p.mean[1] = c1;
    p.sigma = std::max(std::sqrt(ss / static_cast<double>(out.unmasked_samples)), sigma_floor);
    if (opt.gamma_prior > 0)
        p.flip = 0.5 * (1.0 - std::exp(-2.0 * opt.gamma_prior * dt));
    else
        p.flip = static_cast<double>(crossings) / static_cast<double>(out.unmasked_samples);
    p.flip = std::clamp(p.flip, 1e-9, 0.49);

    // Baum-Welch
    std::size_t longest = 0;
    for (const auto& s : segs)
        longest = std::max(longest, s.end - s.begin);
    std::vector<double> a0(longest), a1(longest), sc(longest);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        double ll = 0, w0 = 0, w1 = 0, sx0 = 0, sx1 = 0, sxx0 = 0, sxx1 = 0, xi_flip = 0, xi_all = 0;
        const double q = p.flip, stay = 1.0 - q;
        for (const auto& s : segs) {
            const std::size_t n = s.end - s.begin;
            double e[2];
            for (std::size_t k = 0; k < n; ++k) {
                ll += emissions(x[s.begin + k], p, e);
                double f0, f1;
                if (k == 0) {
                    f0 = 0.5 * e[0];
                    f1 = 0.5 * e[1];
                } else {
                    f0 = (a0[k - 1] * stay + a1[k - 1] * q) * e[0];
                    f1 = (a0[k - 1] * q + a1[k - 1] * stay) * e[1];
                }
                const double c = f0 + f1;
                sc[k] = c;
                ll += std::log(c);
                a0[k] = f0 / c;
                a1[k] = f1 / c;
            }
            double b0 = 1.0, b1 = 1.0;
            for (std::size_t k = n; k-- > 0;) {
                const double xk = x[s.begin + k];
                const double g0 = a0[k] * b0, g1 = a1[k] * b1, gs = g0 + g1;
                const double p0 = g0 / gs, p1 = g1 / gs;
                w0 += p0;
                w1 += p1;
                sx0 += p0 * xk;
                sx1 += p1 * xk;
                sxx0 += p0 * xk * xk;
                sxx1 += p1 * xk * xk;
                if (k == 0)
                    break;
                // Transition k-1 -> k
                emissions(xk, p, e);
                const double t00 = a0[k - 1] * stay * e[0] * b0, t01 = a0[k - 1] * q * e[1] * b1;
                const double t10 = a1[k - 1] * q * e[0] * b0, t11 = a1[k - 1] * stay * e[1] * b1;
                const double tz = t00 + t01 + t10 + t11;
                xi_flip += (t01 + t10) / tz;
                xi_all += 1.0;
                const double nb0 = (stay * e[0] * b0 + q * e[1] * b1) / sc[k];
                const double nb1 = (q * e[0] * b0 + stay * e[1] * b1) / sc[k];
                const double norm = std::max(nb0, nb1);
                b0 = nb0 / norm;
                b1 = nb1 / norm;
            }
        }
        out.iterations = iter + 1;
        if (w0 > 0)
            p.mean[0] = sx0 / w0;
        if (w1 > 0)
            p.mean[1] = sx1 / w1;
        const double var = (sxx0 - 2 * p.mean[0] * sx0 + p.mean[0] * p.mean[0] * w0 + sxx1 - 2 * p.mean[1] * sx1
                            + p.mean[1] * p.mean[1] * w1)
                           / (w0 + w1);
        p.sigma = std::max(std::sqrt(std::max(var, 0.0)), sigma_floor);
        if (xi_all > 0)
            p.flip = std::clamp(xi_flip / xi_all, 1e-12, 0.49);
        if (std::abs(ll - prev_ll) < opt.tolerance * std::max(1.0, std::abs(ll)))
            break;
        prev_ll = ll;
    }
    if (p.mean[0] > p.mean[1])
        std::swap(p.mean[0], p.mean[1]);
    out.params = p;

    // Viterbi per segment
    const double lstay = std::log(1.0 - p.flip), lflip = std::log(p.flip);
    std::vector<std::uint8_t> back;
    for (const auto& s : segs) {
        const std::size_t n = s.end - s.begin;
        back.assign(2 * n, 0);
        const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
        auto le = [&](double v, int st) { return -(v - p.mean[st]) * (v - p.mean[st]) * inv; };
        double v0 = le(x[s.begin], 0), v1 = le(x[s.begin], 1);
        for (std::size_t k = 1; k < n; ++k) {
            const double xk = x[s.begin + k];
            const double c00 = v0 + lstay, c10 = v1 + lflip, c01 = v0 + lflip, c11 = v1 + lstay;
            const double n0 = std::max(c00, c10) + le(xk, 0);
            const double n1 = std::max(c01, c11) + le(xk, 1);
            back[2 * k] = c10 > c00 ? 1 : 0;
            back[2 * k + 1] = c11 >= c01 ? 1 : 0;
            const double shift = std::max(n0, n1);
            v0 = n0 - shift;
            v1 = n1 - shift;
        }
        std::uint8_t st = v1 > v0 ? 1 : 0;
        for (std::size_t k = n; k-- > 0;) {
            out.parity[s.begin + k] = st;
            if (k > 0) {
                const std::uint8_t prev = back[2 * k + st];
                if (prev != st)
                    ++out.transitions;
                st = prev;
            }
        }
    }
    out.switching_rate = static_cast<double>(out.transitions) / (static_cast<double>(out.unmasked_samples) * dt);
    return out;
}

}  // namespace qpgamma
