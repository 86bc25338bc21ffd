#include "qpgamma/psd.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <memory>

#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"
#include "fftw_support.hpp"

namespace qpgamma {

Spectrum compute_psd(std::span<const double> x, double dt, std::size_t L)
{
    if (!(dt > 0))
        throw ConfigError("sample period must be positive");
    if (L < 4 || L % 2 != 0)
        throw ConfigError("PSD segment length must be even and >= 4");
    if (x.size() < L)
        throw DataError("trace shorter than one PSD segment");

    std::vector<double> window(L);
    double wss = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * units::pi * static_cast<double>(i) / static_cast<double>(L)));
        wss += window[i] * window[i];
    }

    const std::size_t nc = L / 2 + 1;
    auto in = detail::fftw_array<double>(L);
    auto out = detail::fftw_array<fftw_complex>(nc);
    const detail::FftwPlan plan(
        [&] { return fftw_plan_dft_r2c_1d(static_cast<int>(L), in.get(), out.get(), FFTW_ESTIMATE); });

    Spectrum s;
    s.dt = dt;
    s.segment_length = L;
    s.power.assign(nc, 0.0);
    const std::size_t hop = L / 2;
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(x.size());
    for (std::size_t start = 0; start + L <= x.size(); start += hop) {
        for (std::size_t i = 0; i < L; ++i)
            in[i] = (x[start + i] - mean) * window[i];
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < nc; ++k)
            s.power[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        ++s.segments;
    }

    const double scale = dt / (wss * static_cast<double>(s.segments));
    for (std::size_t k = 0; k < nc; ++k) {
        s.power[k] *= scale;
        if (k != 0 && k != nc - 1)
            s.power[k] *= 2.0;
        s.frequency.push_back(static_cast<double>(k) / (static_cast<double>(L) * dt));
    }
    return s;
}

double readout_threshold(std::span<const double> x)
{
    if (x.empty())
        throw DataError("cannot calibrate a readout threshold on an empty trace");
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    double c0 = *lo, c1 = *hi;
    if (c0 == c1)
        return c0;
    for (int it = 0; it < 100; ++it) {
        const double t = 0.5 * (c0 + c1);
        double s0 = 0, s1 = 0;
        std::size_t n0 = 0, n1 = 0;
        for (double v : x) {
            if (v < t) {
                s0 += v;
                ++n0;
            } else {
                s1 += v;
                ++n1;
            }
        }
        const double m0 = n0 ? s0 / n0 : c0, m1 = n1 ? s1 / n1 : c1;
        if (m0 == c0 && m1 == c1)
            break;
        c0 = m0;
        c1 = m1;
    }
    return 0.5 * (c0 + c1);
}

std::vector<double> digitize(std::span<const double> x, double threshold)
{
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] >= threshold ? 1.0 : -1.0;
    return out;
}

double lorentzian_psd(double f, double gamma, double amplitude, double floor) noexcept
{
    const double w = 2.0 * units::pi * f;
    return amplitude * 4.0 * gamma / (4.0 * gamma * gamma + w * w) + floor;
}

namespace {

std::vector<double> hann(std::size_t L)
{
    std::vector<double> w(L);
    for (std::size_t i = 0; i < L; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * units::pi * static_cast<double>(i) / static_cast<double>(L)));
    return w;
}

// Expected Welch estimate of a sampled process with autocorrelation
// R(tau) = (A/2) rho^|tau| + B/(2 dt) delta(tau), rho = exp(-2 gamma dt):
// E[P_k] = c_k (dt / sum w^2) sum_tau c_w(tau) R(tau) cos(2 pi k tau / L).
// The lag sum is the real part of a length-L DFT.
class ExpectedPeriodogram {
  public:
    ExpectedPeriodogram(std::size_t L, double dt, std::vector<std::size_t> bins)
        : L_(L), dt_(dt), bins_(std::move(bins)), lag_(detail::fftw_array<double>(L)),
          spec_(detail::fftw_array<fftw_complex>(L / 2 + 1)),
          plan_([&] { return fftw_plan_dft_r2c_1d(static_cast<int>(L), lag_.get(), spec_.get(), FFTW_ESTIMATE); })
    {
        // Window autocorrelation by zero-padded FFT
        const auto w = hann(L);
        const std::size_t M = 2 * L;
        auto pad = detail::fftw_array<double>(M);
        auto hat = detail::fftw_array<fftw_complex>(M / 2 + 1);
        {
            const detail::FftwPlan fwd(
                [&] { return fftw_plan_dft_r2c_1d(static_cast<int>(M), pad.get(), hat.get(), FFTW_ESTIMATE); });
            const detail::FftwPlan inv(
                [&] { return fftw_plan_dft_c2r_1d(static_cast<int>(M), hat.get(), pad.get(), FFTW_ESTIMATE); });
            std::fill_n(pad.get(), M, 0.0);
            std::copy(w.begin(), w.end(), pad.get());
            fftw_execute(fwd.get());
            for (std::size_t k = 0; k <= M / 2; ++k) {
                hat[k][0] = hat[k][0] * hat[k][0] + hat[k][1] * hat[k][1];
                hat[k][1] = 0.0;
            }
            fftw_execute(inv.get());
        }
        double wss = 0.0;
        for (double v : w)
            wss += v * v;
        coef_.resize(L);
        for (std::size_t t = 0; t < L; ++t)
            coef_[t] = dt / wss * (t == 0 ? 1.0 : 2.0) * pad[t] / static_cast<double>(M);
        side_.resize(bins_.size());
        for (std::size_t b = 0; b < bins_.size(); ++b)
            side_[b] = (bins_[b] == 0 || bins_[b] == L / 2) ? 1.0 : 2.0;
    }

    // Returns (lorentzian part per unit A, white part per unit B)
    void basis(double gamma, std::vector<double>& lor, std::vector<double>& white) const
    {
        const double rho = std::exp(-2.0 * gamma * dt_);
        double p = 0.5;
        for (std::size_t t = 0; t < L_; ++t) {
            lag_[t] = coef_[t] * p;
            p *= rho;
        }
        fftw_execute(plan_.get());
        lor.assign(bins_.size(), 0.0);
        white.assign(bins_.size(), 0.0);
        for (std::size_t b = 0; b < bins_.size(); ++b) {
            lor[b] = side_[b] * spec_[bins_[b]][0];
            white[b] = side_[b] * coef_[0] / (2.0 * dt_);
        }
    }

  private:
    std::size_t L_;
    double dt_;
    std::vector<std::size_t> bins_;
    std::vector<double> coef_;
    std::vector<double> side_;
    detail::FftwPtr<double> lag_;
    detail::FftwPtr<fftw_complex> spec_;
    detail::FftwPlan plan_;
};

struct Residuals {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const ExpectedPeriodogram* model;
    const std::vector<double>* p;
    double weight;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(p->size()); }

    int operator()(const Eigen::VectorXd& th, Eigen::VectorXd& r) const
    {
        std::vector<double> lor, white;
        model->basis(std::exp(th[0]), lor, white);
        const double a = std::exp(th[1]), b = std::exp(th[2]);
        for (std::size_t k = 0; k < p->size(); ++k) {
            const double m = a * lor[k] + b * white[k];
            r[static_cast<Eigen::Index>(k)] = weight * ((*p)[k] - m) / m;
        }
        return 0;
    }
};

}  // namespace

PsdFit fit_lorentzian(const Spectrum& s)
{
    if (s.frequency.size() < 8 || s.segments == 0)
        throw DataError("spectrum too short for a Lorentzian fit");
    std::vector<std::size_t> bins;
    std::vector<double> p;
    for (std::size_t k = 1; k < s.power.size(); ++k) {
        bins.push_back(k);
        p.push_back(std::max(s.power[k], 1e-300));
    }
    const ExpectedPeriodogram model(s.segment_length, s.dt, bins);

    const double f_lo = 1.0 / (static_cast<double>(s.segment_length) * s.dt);
    const double f_hi = 1.0 / (2.0 * s.dt);

    // Coarse scan in gamma with weighted linear solves for (A, B)
    double best_cost = -1, g0 = f_lo, a0 = 0, b0 = 0;
    std::vector<double> lor, white;
    for (int k = 0; k <= 80; ++k) {
        const double g = 0.1 * f_lo * std::pow(100.0 * f_hi / f_lo, k / 80.0);
        model.basis(g, lor, white);
        Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double l = lor[i] / p[i], one = white[i] / p[i];
            M(0, 0) += l * l;
            M(0, 1) += l * one;
            M(1, 1) += one * one;
            v(0) += l;
            v(1) += one;
        }
        M(1, 0) = M(0, 1);
        const Eigen::Vector2d ab = M.ldlt().solve(v);
        const double a = std::max(ab(0), 1e-9), b = std::max(ab(1), 1e-12 * p.back() / white.back());
        double cost = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double r = (p[i] - a * lor[i] - b * white[i]) / p[i];
            cost += r * r;
        }
        if (best_cost < 0 || cost < best_cost) {
            best_cost = cost;
            g0 = g;
            a0 = a;
            b0 = b;
        }
    }

    Residuals fun{&model, &p, std::sqrt(static_cast<double>(s.segments))};
    Eigen::NumericalDiff<Residuals> nd(fun);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> lm(nd);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;
    Eigen::VectorXd th(3);
    th << std::log(g0), std::log(a0), std::log(b0);
    const auto status = lm.minimize(th);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !th.allFinite())
        throw NumericalError("Lorentzian fit did not converge");

    PsdFit out;
    out.gamma = std::exp(th[0]);
    out.amplitude = std::exp(th[1]);
    out.floor = std::exp(th[2]);
    out.fidelity = std::min(1.0, std::sqrt(out.amplitude / 2.0));

    Eigen::VectorXd r(static_cast<Eigen::Index>(p.size()));
    fun(th, r);
    const double dof = static_cast<double>(p.size()) - 3.0;
    out.chi2_per_dof = r.squaredNorm() / dof;
    Eigen::MatrixXd J(static_cast<Eigen::Index>(p.size()), 3);
    nd.df(th, J);
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    Eigen::Matrix3d cov_log = Eigen::Matrix3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::FullPivLU<Eigen::Matrix3d> lu(JtJ);
    if (lu.isInvertible())
        cov_log = lu.inverse() * std::max(1.0, out.chi2_per_dof);
    const double scale[3] = {out.gamma, out.amplitude, out.floor};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.covariance[i][j] = cov_log(i, j) * scale[i] * scale[j];

    const double rel_a = std::sqrt(std::max(0.0, cov_log(1, 1)));
    if (!(rel_a < 1.0 / 3.0)) {
        out.note = "no significant Lorentzian component";
    } else if (out.gamma < f_lo || out.gamma > f_hi) {
        out.note = "switching rate outside resolvable band";
    } else {
        out.resolvable = true;
    }
    return out;
}

}  // namespace qpgamma
