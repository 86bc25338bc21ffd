#include "qpgamma/tomography.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {

std::string_view to_string(JumpMethod m) noexcept
{
    return m == JumpMethod::Threshold ? "threshold" : "step-convolution";
}

namespace {

struct LinearFit {
    double a = 0, b = 0, sse = 0, b_var = 0;
};

// P1 = a + b g(x + delta) by linear least squares in (a, b)
LinearFit fit_at(const TomographyScan& s, double delta)
{
    const std::size_t n = s.p1.size();
    double sg = 0, sgg = 0, sy = 0, sgy = 0;
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
        g[j] = std::cos(units::pi * std::cos(2.0 * units::pi * (s.ng_ext[j] + delta)));
        sg += g[j];
        sgg += g[j] * g[j];
        sy += s.p1[j];
        sgy += g[j] * s.p1[j];
    }
    LinearFit f;
    const double nn = static_cast<double>(n);
    const double det = nn * sgg - sg * sg;
    if (!(det > 1e-12 * nn * nn)) {
        f.a = sy / nn;
        for (std::size_t j = 0; j < n; ++j)
            f.sse += (s.p1[j] - f.a) * (s.p1[j] - f.a);
        return f;
    }
    f.b = (nn * sgy - sg * sy) / det;
    f.a = (sy - f.b * sg) / nn;
    for (std::size_t j = 0; j < n; ++j) {
        const double r = s.p1[j] - f.a - f.b * g[j];
        f.sse += r * r;
    }
    const double dof = std::max(1.0, nn - 3.0);
    f.b_var = f.sse / dof * nn / det;
    return f;
}

}  // namespace

TomographyFit fit_tomography(const TomographyScan& scan)
{
    const std::size_t n = scan.p1.size();
    if (n < 4 || scan.ng_ext.size() != n)
        throw DataError("tomography scan needs at least 4 matching points");
    const auto [lo, hi] = std::minmax_element(scan.ng_ext.begin(), scan.ng_ext.end());
    // Points must cover a full period (1/2), allowing for the last step
    if (*hi - *lo + (*hi - *lo) / static_cast<double>(n - 1) < 0.5 - 1e-9)
        throw DataError("tomography scan spans less than one period of the response");

    constexpr int kGrid = 500;
    constexpr double kStep = 0.5 / kGrid;
    double best = -1.0, best_sse = 0.0;
    for (int k = 0; k < kGrid; ++k) {
        const double delta = k * kStep;
        const LinearFit f = fit_at(scan, delta);
        if (f.b > 0.0 && (best < 0 || f.sse < best_sse)) {
            best = delta;
            best_sse = f.sse;
        }
    }
    if (best < 0)
        throw NumericalError("tomography fit failed: no positive modulation amplitude");

    auto objective = [&](double delta) { return fit_at(scan, delta).sse; };
    const auto [delta, sse] = boost::math::tools::brent_find_minima(objective, best - kStep, best + kStep, 50);
    (void)sse;
    const LinearFit f = fit_at(scan, delta);
    const double sigma_b = std::sqrt(std::max(0.0, f.b_var));
    if (!(f.b > 0.0) || f.b < 5.0 * sigma_b)
        throw NumericalError("tomography fit failed: modulation amplitude below noise");

    TomographyFit out;
    out.offset = delta - 0.5 * std::floor(delta / 0.5);
    if (out.offset >= 0.5)
        out.offset -= 0.5;
    out.d = 2.0 * f.a;
    out.nu = 2.0 * f.b;
    out.nu_error = 2.0 * sigma_b;
    out.rms = std::sqrt(f.sse / static_cast<double>(n));
    return out;
}

double wrap_half_period(double x) noexcept
{
    return x - 0.5 * std::ceil(x / 0.5 - 0.5);
}

std::vector<double> diff_series(std::span<const TomographyFit> fits)
{
    std::vector<double> out;
    for (std::size_t i = 1; i < fits.size(); ++i)
        out.push_back(wrap_half_period(fits[i].offset - fits[i - 1].offset));
    return out;
}

std::vector<double> diff_series(std::span<const TomographyScan> scans)
{
    std::vector<TomographyFit> fits;
    fits.reserve(scans.size());
    for (const auto& s : scans)
        fits.push_back(fit_tomography(s));
    return diff_series(fits);
}

std::vector<JumpEvent> detect_jumps_threshold(std::span<const double> dq, double threshold, const std::string& qubit,
                                              std::span<const double> times)
{
    std::vector<JumpEvent> out;
    for (std::size_t k = 0; k < dq.size(); ++k) {
        const double a = alias_charge(dq[k]);
        if (std::abs(a) > threshold) {
            JumpEvent e;
            e.index = k + 1;
            e.time = k + 1 < times.size() ? times[k + 1] : static_cast<double>(k + 1);
            e.magnitude = a;
            e.method = JumpMethod::Threshold;
            e.qubit = qubit;
            out.push_back(e);
        }
    }
    return out;
}

double offset_from_level(double level, double d, double nu) noexcept
{
    if (!(nu != 0.0))
        return 0.0;
    const double c = std::clamp((2.0 * level - d) / nu, -1.0, 1.0);
    const double a = std::clamp(std::acos(c) / units::pi, 0.0, 1.0);
    return std::asin(a) / (2.0 * units::pi);
}

std::vector<JumpEvent> detect_steps_singleshot(const OffsetChargeSeries& series, const StepOptions& opt,
                                               const std::string& qubit)
{
    if (opt.average == 0 || opt.kernel < 2 || opt.kernel % 2 != 0)
        throw ConfigError("step detection needs a positive average and an even kernel width");
    const auto& x = series.signal;
    const std::size_t n = x.size();
    const std::size_t A = opt.average, H = opt.kernel / 2;

    std::vector<std::size_t> bounds = series.resets;
    if (bounds.empty() || bounds.front() != 0)
        bounds.insert(bounds.begin(), 0);
    bounds.push_back(n);

    std::vector<double> px(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        px[i + 1] = px[i] + x[i];

    struct Segment {
        std::size_t begin, end;       // sample range
        std::vector<double> response;  // filter output for j in [begin + H, begin + H + size)
    };
    std::vector<Segment> segments;
    std::vector<double> pooled;
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
        Segment seg{bounds[s], bounds[s + 1], {}};
        if (seg.end <= seg.begin || seg.end - seg.begin < A + 2 * H) {
            segments.push_back(std::move(seg));
            continue;
        }
        // m[j] = mean(x[j, j + A)) for j in [begin, end - A]
        const std::size_t nm = seg.end - seg.begin - A + 1;
        std::vector<double> pm(nm + 1, 0.0);
        for (std::size_t j = 0; j < nm; ++j) {
            const double m = (px[seg.begin + j + A] - px[seg.begin + j]) / static_cast<double>(A);
            pm[j + 1] = pm[j] + m;
        }
        for (std::size_t j = H; j + H <= nm; ++j) {
            const double right = (pm[j + H] - pm[j]) / static_cast<double>(H);
            const double left = (pm[j] - pm[j - H]) / static_cast<double>(H);
            seg.response.push_back(right - left);
        }
        pooled.insert(pooled.end(), seg.response.begin(), seg.response.end());
        segments.push_back(std::move(seg));
    }
    if (pooled.empty())
        return {};

    auto median = [](std::vector<double> v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    const double med = median(pooled);
    for (double& v : pooled)
        v = std::abs(v - med);
    const double sigma = 1.4826 * median(pooled);
    const double threshold = opt.threshold_sigma * std::max(sigma, 1e-12);

    std::vector<JumpEvent> out;
    for (const auto& seg : segments) {
        std::vector<std::size_t> cand;
        for (std::size_t j = 0; j < seg.response.size(); ++j)
            if (std::abs(seg.response[j] - med) > threshold)
                cand.push_back(j);
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(seg.response[a] - med) > std::abs(seg.response[b] - med);
        });
        std::vector<std::size_t> accepted;
        for (std::size_t j : cand) {
            bool clear = true;
            for (std::size_t a : accepted)
                if ((j > a ? j - a : a - j) < opt.kernel)
                    clear = false;
            if (clear)
                accepted.push_back(j);
        }
        std::sort(accepted.begin(), accepted.end());
        // Response index j sits at m index j + H; a step at sample k peaks at m index k - A/2
        std::vector<std::size_t> ks;
        for (std::size_t j : accepted)
            ks.push_back(seg.begin + j + H + A / 2);
        // Refine each location by a two-level Bernoulli likelihood split
        // between the neighbouring steps
        auto loglik = [&](std::size_t a, std::size_t b) {
            if (b <= a)
                return 0.0;
            const double m = static_cast<double>(b - a);
            const double p = (px[b] - px[a]) / m;
            double l = 0.0;
            if (p > 0.0)
                l += m * p * std::log(p);
            if (p < 1.0)
                l += m * (1.0 - p) * std::log(1.0 - p);
            return l;
        };
        for (std::size_t a = 0; a < ks.size(); ++a) {
            const std::size_t lo = std::max(a > 0 ? ks[a - 1] : seg.begin, ks[a] > 2 * H ? ks[a] - 2 * H : 0);
            const std::size_t hi = std::min(a + 1 < ks.size() ? ks[a + 1] : seg.end, ks[a] + 2 * H);
            const std::size_t from = std::max(lo + 1, ks[a] > H ? ks[a] - H : 0);
            const std::size_t to = std::min(hi, ks[a] + H);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = ks[a];
            for (std::size_t c = from; c < to; ++c) {
                const double l = loglik(lo, c) + loglik(c, hi);
                if (l > best) {
                    best = l;
                    arg = c;
                }
            }
            ks[a] = arg;
        }
        for (std::size_t a = 0; a < ks.size(); ++a) {
            const std::size_t k = ks[a];
            std::size_t stop = std::min(seg.end, n);
            if (opt.level_samples > 0)
                stop = std::min(stop, k + opt.level_samples);
            if (a + 1 < ks.size())
                stop = std::min(stop, ks[a + 1]);
            if (stop <= k)
                continue;
            const double level = (px[stop] - px[k]) / static_cast<double>(stop - k);
            const double mag = offset_from_level(level, series.d, series.nu);
            if (!(mag > 0.0))
                continue;
            JumpEvent e;
            e.index = k;
            e.time = static_cast<double>(k) * series.dt;
            e.magnitude = std::min(mag, 0.25);
            e.method = JumpMethod::StepConvolution;
            e.qubit = qubit;
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace qpgamma
