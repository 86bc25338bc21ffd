#include "qpgamma/poison_footprint.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>

#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {

double FootprintModel::density(double d) const noexcept
{
    if (family == ProfileFamily::Uniform)
        return amplitude;
    return amplitude * std::exp(-d / decay_length);
}

std::vector<double> footprint_lambda(const FootprintModel& m, const Vec2& c, std::span<const Vec2> qubits)
{
    if (!(m.threshold > 0))
        throw ConfigError("threshold density must be positive");
    if (!(m.sensing_radius > 0))
        throw ConfigError("sensing radius must be positive");
    if (m.family == ProfileFamily::Exponential && !(m.decay_length > 0))
        throw ConfigError("decay length must be positive");
    constexpr int kAngles = 96;
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const double R = m.sensing_radius;
    std::vector<double> out;
    for (const auto& q : qubits) {
        double total = 0.0;
        if (m.family == ProfileFamily::Uniform) {
            total = m.amplitude;
        } else {
            auto radial = [&](double r) {
                double s = 0.0;
                for (int a = 0; a < kAngles; ++a) {
                    const double phi = 2.0 * units::pi * (a + 0.5) / kAngles;
                    const double x = c.x + r * std::cos(phi), y = c.y + r * std::sin(phi);
                    s += m.density(std::hypot(q.x - x, q.y - y));
                }
                return r * s / kAngles;
            };
            total = 2.0 * Rule::integrate(radial, 0.0, R) / (R * R);
        }
        out.push_back(std::max(0.0, total) / m.threshold);
    }
    return out;
}

std::vector<double> footprint_model_eval(const FootprintModel& m, const Vec2& c, std::span<const Vec2> qubits)
{
    auto out = footprint_lambda(m, c, qubits);
    for (double& v : out)
        v = 1.0 - std::exp(-v);
    return out;
}

namespace {

struct FitFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    FootprintModel base;
    Vec2 centre;
    std::span<const Vec2> qubits;
    std::span<const double> observed;
    int n_params;

    int inputs() const { return n_params; }
    int values() const { return static_cast<int>(observed.size()); }

    FootprintModel model(const Eigen::VectorXd& th) const
    {
        FootprintModel m = base;
        m.threshold = std::exp(th[0]);
        if (n_params > 1)
            m.decay_length = std::exp(th[1]);
        return m;
    }
    int operator()(const Eigen::VectorXd& th, Eigen::VectorXd& r) const
    {
        const auto p = footprint_model_eval(model(th), centre, qubits);
        for (std::size_t i = 0; i < p.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = p[i] - observed[i];
        return 0;
    }
};

}  // namespace

FootprintFit fit_footprint(const FootprintModel& start, const Vec2& centre, std::span<const Vec2> qubits,
                           std::span<const double> observed)
{
    if (qubits.size() != observed.size())
        throw DataError("one observation is needed per qubit position");
    const int n_params = start.family == ProfileFamily::Exponential ? 2 : 1;
    if (observed.size() < 2 || static_cast<int>(observed.size()) < n_params)
        throw DataError("footprint fit is under-determined");
    for (double p : observed)
        if (!(p >= 0.0 && p <= 1.0))
            throw DataError("poisoning probabilities must lie in [0, 1]");

    FitFunctor fun{start, centre, qubits, observed, n_params};
    Eigen::VectorXd r(static_cast<Eigen::Index>(observed.size()));
    // Coarse start over a log grid
    Eigen::VectorXd best(n_params);
    double best_cost = -1;
    const int nl = n_params > 1 ? 40 : 1;
    for (int i = 0; i < 60; ++i) {
        for (int j = 0; j < nl; ++j) {
            Eigen::VectorXd th(n_params);
            th[0] = std::log(start.amplitude) + std::log(1e-3) + i * std::log(1e5) / 59.0;
            if (n_params > 1)
                th[1] = std::log(1e-4) + j * std::log(1e3) / (nl - 1);
            fun(th, r);
            const double cost = r.squaredNorm();
            if (best_cost < 0 || cost < best_cost) {
                best_cost = cost;
                best = th;
            }
        }
    }
    Eigen::NumericalDiff<FitFunctor> nd(fun);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FitFunctor>> lm(nd);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 4000;
    Eigen::VectorXd th = best;
    lm.minimize(th);
    if (!th.allFinite())
        throw NumericalError("footprint fit diverged");
    fun(th, r);
    if (r.squaredNorm() > best_cost) {
        th = best;
        fun(th, r);
    }

    FootprintFit out;
    out.model = fun.model(th);
    out.predicted = footprint_model_eval(out.model, centre, qubits);
    for (std::size_t i = 0; i < observed.size(); ++i)
        out.residuals.push_back(out.predicted[i] - observed[i]);
    out.rms = std::sqrt(r.squaredNorm() / static_cast<double>(observed.size()));
    return out;
}

GridField interpolate_poison_map(std::span<const Vec2> pts, std::span<const double> values, double half_width,
                                 std::size_t n)
{
    if (pts.size() != values.size())
        throw DataError("one value is needed per point");
    if (pts.size() < 4)
        throw DataError("surface interpolation needs at least 4 points");
    if (n < 2 || !(half_width > 0))
        throw ConfigError("map grid needs at least 2 nodes and a positive extent");
    const auto m = static_cast<Eigen::Index>(pts.size());
    // Work in millimetres for conditioning
    auto phi = [](double r) { return r > 0 ? r * r * std::log(r) : 0.0; };
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 3, m + 3);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 3);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double xi = pts[i].x / units::mm, yi = pts[i].y / units::mm;
        for (Eigen::Index j = 0; j < m; ++j)
            A(i, j) = phi(std::hypot(xi - pts[j].x / units::mm, yi - pts[j].y / units::mm));
        A(i, m) = 1.0;
        A(i, m + 1) = xi;
        A(i, m + 2) = yi;
        A(m, i) = 1.0;
        A(m + 1, i) = xi;
        A(m + 2, i) = yi;
        b(i) = values[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        throw DataError("interpolation points are degenerate (collinear or repeated)");
    const Eigen::VectorXd c = lu.solve(b);

    GridField f;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = -half_width + 2.0 * half_width * static_cast<double>(k) / static_cast<double>(n - 1);
        f.xs.push_back(v);
        f.ys.push_back(v);
    }
    f.values.resize(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = f.xs[i] / units::mm, y = f.ys[j] / units::mm;
            double s = c(m) + c(m + 1) * x + c(m + 2) * y;
            for (Eigen::Index k = 0; k < m; ++k)
                s += c(k) * phi(std::hypot(x - pts[k].x / units::mm, y - pts[k].y / units::mm));
            f.values[j * n + i] = std::clamp(s, 0.0, 1.0);
        }
    }
    return f;
}

}  // namespace qpgamma
