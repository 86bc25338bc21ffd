#include "qpgamma/masking.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>

#include "qpgamma/errors.hpp"

namespace qpgamma {

double masking_alpha(double fidelity, int n, double s)
{
    if (!(fidelity > 0.0 && fidelity < 1.0))
        throw ConfigError("masking needs a fidelity in (0, 1)");
    if (n < 1)
        throw ConfigError("moving-average length must be positive");
    const double e = boost::math::erf_inv(fidelity) * std::sqrt(static_cast<double>(n));
    return std::sqrt((1.0 + s * s / 4.0) / (1.0 + 2.0 * e * e));
}

double separation_for_error(double error)
{
    if (!(error > 0.0 && error < 0.5))
        throw ConfigError("state-detection error must lie in (0, 0.5)");
    return 2.0 * std::sqrt(2.0) * boost::math::erf_inv(1.0 - 2.0 * error);
}

std::vector<double> moving_average(std::span<const double> x, std::size_t n)
{
    if (n == 0)
        throw ConfigError("moving-average length must be positive");
    std::vector<double> out(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += x[i];
        if (i >= n)
            sum -= x[i - n];
        out[i] = sum / static_cast<double>(std::min(i + 1, n));
    }
    return out;
}

std::vector<std::uint8_t> mask_trace(std::span<const double> samples, double gamma, double dt, double fidelity,
                                     const MaskOptions& opt)
{
    if (!(gamma > 0.0) || !(dt > 0.0))
        throw ConfigError("masking needs positive switching rate and sample period");
    const double alpha = opt.alpha_override ? *opt.alpha_override
                                            : masking_alpha(fidelity, opt.n_average, opt.s_threshold);
    const double wlen = std::round(1.0 / (gamma * dt));
    if (!(wlen >= 2.0) || wlen > static_cast<double>(samples.size()))
        throw DataError("masking window longer than the trace");
    const auto L = static_cast<std::size_t>(wlen);

    const auto m = moving_average(samples, static_cast<std::size_t>(opt.n_average));
    const std::size_t nw = m.size() / L;
    std::vector<double> mu(nw), sd(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        double s = 0, ss = 0;
        for (std::size_t i = w * L; i < (w + 1) * L; ++i)
            s += m[i];
        const double mean = s / static_cast<double>(L);
        for (std::size_t i = w * L; i < (w + 1) * L; ++i)
            ss += (m[i] - mean) * (m[i] - mean);
        mu[w] = mean;
        sd[w] = std::sqrt(ss / static_cast<double>(L));
    }
    double mu_bar = 0, sd_bar = 0;
    for (double v : m)
        mu_bar += v;
    mu_bar /= static_cast<double>(m.size());
    for (double v : m)
        sd_bar += (v - mu_bar) * (v - mu_bar);
    sd_bar = std::sqrt(sd_bar / static_cast<double>(m.size()));

    std::vector<std::uint8_t> mask(samples.size(), 1);
    for (std::size_t w = 0; w < nw; ++w) {
        const bool keep = std::abs(mu[w] - mu_bar) > sd[w] || sd[w] > alpha * sd_bar;
        // A trailing partial window follows the verdict of the last full one
        const std::size_t end = w + 1 == nw ? samples.size() : (w + 1) * L;
        if (keep)
            std::fill(mask.begin() + static_cast<std::ptrdiff_t>(w * L), mask.begin() + static_cast<std::ptrdiff_t>(end), 0);
    }
    return mask;
}

double unmasked_fraction(std::span<const std::uint8_t> mask) noexcept
{
    if (mask.empty())
        return 0.0;
    std::size_t n = 0;
    for (auto v : mask)
        n += v == 0;
    return static_cast<double>(n) / static_cast<double>(mask.size());
}

}  // namespace qpgamma
