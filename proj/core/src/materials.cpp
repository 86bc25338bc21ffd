#include "qpgamma/materials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "qpgamma/errors.hpp"
#include "qpgamma/units.hpp"

namespace qpgamma {
namespace {

// Photoelectric mass attenuation [cm^2/g]; approximate values following the
// NIST XCOM photoelectric-absorption column. Absorption edges are encoded as
// two entries at the same energy (below, above).
struct TablePoint {
    double energy_mev;
    double mu_rho;
};

constexpr std::array kSilicon = std::to_array<TablePoint>({
    {0.010, 32.6},    {0.015, 9.8},     {0.020, 4.2},      {0.030, 1.2},
    {0.040, 0.49},    {0.050, 0.245},   {0.060, 0.139},    {0.080, 0.057},
    {0.100, 0.0284},  {0.150, 0.0080},  {0.200, 0.0033},   {0.300, 9.7e-4},
    {0.400, 4.3e-4},  {0.500, 2.35e-4}, {0.600, 1.48e-4},  {0.800, 7.5e-5},
    {1.000, 4.6e-5},  {1.250, 2.9e-5},  {1.500, 2.1e-5},   {2.000, 1.3e-5},
    {3.000, 7.3e-6},
});

constexpr std::array kAluminum = std::to_array<TablePoint>({
    {0.010, 25.4},    {0.015, 7.6},     {0.020, 3.25},     {0.030, 0.92},
    {0.040, 0.37},    {0.050, 0.185},   {0.060, 0.104},    {0.080, 0.043},
    {0.100, 0.0213},  {0.150, 0.0060},  {0.200, 0.0025},   {0.300, 7.3e-4},
    {0.400, 3.2e-4},  {0.500, 1.76e-4}, {0.600, 1.1e-4},   {0.800, 5.6e-5},
    {1.000, 3.5e-5},  {1.250, 2.2e-5},  {1.500, 1.6e-5},   {2.000, 9.8e-6},
    {3.000, 5.5e-6},
});

constexpr std::array kCopper = std::to_array<TablePoint>({
    {0.010, 212.0},   {0.015, 70.0},    {0.020, 31.5},     {0.030, 10.0},
    {0.040, 4.4},     {0.050, 2.3},     {0.060, 1.35},     {0.080, 0.58},
    {0.100, 0.30},    {0.150, 0.092},   {0.200, 0.040},    {0.300, 0.0125},
    {0.400, 0.0057},  {0.500, 0.0032},  {0.600, 0.0021},   {0.800, 0.00108},
    {1.000, 6.8e-4},  {1.250, 4.4e-4},  {1.500, 3.2e-4},   {2.000, 1.9e-4},
    {3.000, 1.05e-4},
});

constexpr std::array kLead = std::to_array<TablePoint>({
    {0.010, 125.0},   {0.01304, 64.0},  {0.01304, 158.0},  {0.015, 108.0},
    {0.020, 80.0},    {0.030, 28.5},    {0.040, 13.9},     {0.050, 7.8},
    {0.060, 4.9},     {0.080, 2.3},     {0.0880, 1.75},    {0.0880, 7.35},
    {0.100, 5.23},    {0.150, 1.81},    {0.200, 0.84},     {0.300, 0.29},
    {0.400, 0.14},    {0.500, 0.081},   {0.600, 0.054},    {0.800, 0.029},
    {1.000, 0.0181},  {1.250, 0.0118},  {1.500, 0.0085},   {2.000, 0.0052},
    {3.000, 0.0028},
});

constexpr std::array kSodiumIodide = std::to_array<TablePoint>({
    {0.010, 135.0},   {0.015, 46.0},    {0.020, 21.5},     {0.030, 7.0},
    {0.03317, 5.3},   {0.03317, 30.5},  {0.040, 18.3},     {0.050, 10.3},
    {0.060, 6.3},     {0.080, 2.9},     {0.100, 1.57},     {0.150, 0.50},
    {0.200, 0.225},   {0.300, 0.073},   {0.400, 0.034},    {0.500, 0.0195},
    {0.600, 0.0128},  {0.800, 0.0067},  {1.000, 0.0042},   {1.250, 0.0027},
    {1.500, 0.0019},  {2.000, 0.00118}, {3.000, 6.4e-4},
});

struct MaterialData {
    std::string_view name;
    double density;
    double z_over_a;
    double radiation_length_g_cm2;
    double mean_excitation_ev;
    std::span<const TablePoint> photo;
};

const MaterialData& data(Material m)
{
    static const std::array<MaterialData, 5> table{{
        {"Si", 2.329, 0.49848, 21.82, 173.0, kSilicon},
        {"Al", 2.699, 0.48181, 24.01, 166.0, kAluminum},
        {"Cu", 8.96, 0.45636, 12.86, 322.0, kCopper},
        {"Pb", 11.35, 0.39575, 6.37, 823.0, kLead},
        {"NaI", 3.667, 0.42697, 9.49, 452.0, kSodiumIodide},
    }};
    return table.at(static_cast<std::size_t>(m));
}

double log_log_interp(std::span<const TablePoint> pts, double e)
{
    e = std::clamp(e, pts.front().energy_mev, pts.back().energy_mev);
    // Upper bound so that an edge energy picks the "above" entry.
    auto hi = std::upper_bound(pts.begin(), pts.end(), e, [](double v, const TablePoint& p) {
        return v < p.energy_mev;
    });
    if (hi == pts.end())
        return pts.back().mu_rho;
    if (hi == pts.begin())
        return pts.front().mu_rho;
    auto lo = hi - 1;
    if (lo->energy_mev == hi->energy_mev)
        return hi->mu_rho;
    const double t = std::log(e / lo->energy_mev) / std::log(hi->energy_mev / lo->energy_mev);
    return std::exp(std::log(lo->mu_rho) + t * std::log(hi->mu_rho / lo->mu_rho));
}

// Collision stopping power for electrons [MeV cm^2/g] (Bethe formula with
// the Rohrlich-Carlson correction term, no density effect).
double electron_stopping_power(const MaterialData& d, double t_mev)
{
    const double tau = t_mev / units::electron_mass_mev;
    const double gamma = tau + 1.0;
    const double beta2 = 1.0 - 1.0 / (gamma * gamma);
    const double i_ratio = d.mean_excitation_ev * 1e-6 / units::electron_mass_mev;
    const double f = 1.0 - beta2 + (tau * tau / 8.0 - (2.0 * tau + 1.0) * std::log(2.0)) / (gamma * gamma);
    const double bracket = std::log(tau * tau * (tau + 2.0) / (2.0 * i_ratio * i_ratio)) + f;
    return 0.153537 * d.z_over_a / beta2 * std::max(bracket, 1.0);
}

// CSDA range [g/cm^2] tabulated on a log energy grid, with its inverse.
class RangeTable {
  public:
    explicit RangeTable(const MaterialData& d)
    {
        constexpr int n = 1500;
        const double lo = std::log(kMinMev);
        const double hi = std::log(kMaxMev);
        log_e_.resize(n);
        range_.resize(n);
        for (int i = 0; i < n; ++i)
            log_e_[i] = lo + (hi - lo) * i / (n - 1);
        // Below the grid the range is taken proportional to E^2.
        range_[0] = 0.5 * kMinMev / electron_stopping_power(d, kMinMev);
        for (int i = 1; i < n; ++i) {
            const double e0 = std::exp(log_e_[i - 1]);
            const double e1 = std::exp(log_e_[i]);
            // dR = dE / S, integrated in log E: dE = E dlogE
            const double g0 = e0 / electron_stopping_power(d, e0);
            const double g1 = e1 / electron_stopping_power(d, e1);
            range_[i] = range_[i - 1] + 0.5 * (g0 + g1) * (log_e_[i] - log_e_[i - 1]);
        }
    }

    double range(double e_mev) const
    {
        if (e_mev <= 0.0)
            return 0.0;
        if (e_mev < kMinMev)
            return range_.front() * (e_mev / kMinMev) * (e_mev / kMinMev);
        const double x = std::log(std::min(e_mev, kMaxMev));
        const double pos = (x - log_e_.front()) / (log_e_[1] - log_e_[0]);
        const auto i = std::min(static_cast<std::size_t>(pos), range_.size() - 2);
        const double t = pos - static_cast<double>(i);
        return range_[i] + t * (range_[i + 1] - range_[i]);
    }

    double energy(double r) const
    {
        if (r <= 0.0)
            return 0.0;
        if (r <= range_.front())
            return kMinMev * std::sqrt(r / range_.front());
        auto it = std::lower_bound(range_.begin(), range_.end(), r);
        if (it == range_.end())
            return kMaxMev;
        const auto i = static_cast<std::size_t>(it - range_.begin());
        const double t = (r - range_[i - 1]) / (range_[i] - range_[i - 1]);
        return std::exp(log_e_[i - 1] + t * (log_e_[i] - log_e_[i - 1]));
    }

  private:
    static constexpr double kMinMev = 1e-3;
    static constexpr double kMaxMev = 5.0;
    std::vector<double> log_e_;
    std::vector<double> range_;
};

const RangeTable& range_table(Material m)
{
    static const std::array<RangeTable, 5> tables{
        RangeTable{data(Material::Silicon)}, RangeTable{data(Material::Aluminum)},
        RangeTable{data(Material::Copper)}, RangeTable{data(Material::Lead)},
        RangeTable{data(Material::SodiumIodide)}};
    return tables.at(static_cast<std::size_t>(m));
}

}  // namespace

std::string_view to_string(Material m) noexcept
{
    if (m == Material::Absorber)
        return "Absorber";
    return data(m).name;
}

Material material_from_string(std::string_view name)
{
    for (auto m : {Material::Silicon, Material::Aluminum, Material::Copper, Material::Lead,
                   Material::SodiumIodide, Material::Absorber}) {
        if (to_string(m) == name)
            return m;
    }
    throw ConfigError("unknown material '" + std::string(name) + "'");
}

double density(Material m) noexcept
{
    if (m == Material::Absorber)
        return std::numeric_limits<double>::infinity();
    return data(m).density;
}

double klein_nishina_sigma(double energy_mev) noexcept
{
    const double k = energy_mev / units::electron_mass_mev;
    const double re2 = units::classical_electron_radius_cm * units::classical_electron_radius_cm;
    const double l = std::log1p(2.0 * k);
    const double a = 1.0 + 2.0 * k;
    return 2.0 * units::pi * re2
           * ((1.0 + k) / (k * k) * (2.0 * (1.0 + k) / a - l / k) + l / (2.0 * k)
              - (1.0 + 3.0 * k) / (a * a));
}

Attenuation attenuation(Material m, double energy_mev)
{
    if (m == Material::Absorber)
        return {std::numeric_limits<double>::infinity(), 0.0};
    const auto& d = data(m);
    const double per_cm = d.density * 1e2;  // (cm^2/g)(g/cm^3) -> 1/cm -> 1/m
    Attenuation a;
    a.photoelectric = log_log_interp(d.photo, energy_mev) * per_cm;
    a.compton = units::avogadro * d.z_over_a * klein_nishina_sigma(energy_mev) * per_cm;
    return a;
}

double radiation_length(Material m) noexcept
{
    if (m == Material::Absorber)
        return 0.0;
    const auto& d = data(m);
    return d.radiation_length_g_cm2 / d.density * units::cm;
}

double highland_theta0(Material m, double energy_kev, double step, double track_length) noexcept
{
    const double x0 = radiation_length(m);
    if (!(x0 > 0.0) || !(step > 0.0) || !(energy_kev > 0.0))
        return 0.0;
    const double t = energy_kev * 1e-3;
    const double pc = std::sqrt(t * (t + 2.0 * units::electron_mass_mev));
    const double beta = pc / (t + units::electron_mass_mev);
    const double x = step / x0;
    const double l = std::max(track_length, step) / x0;
    return 13.6 / (beta * pc) * std::sqrt(x) * std::max(0.0, 1.0 + 0.038 * std::log(l));
}

double electron_range(Material m, double energy_kev)
{
    if (m == Material::Absorber)
        return 0.0;
    // g/cm^2 / (g/cm^3) = cm
    return range_table(m).range(energy_kev * 1e-3) / density(m) * units::cm;
}

double electron_energy_after(Material m, double energy_kev, double path)
{
    if (m == Material::Absorber)
        return 0.0;
    const auto& table = range_table(m);
    const double r = table.range(energy_kev * 1e-3) - path / units::cm * density(m);
    return table.energy(r) * 1e3;
}

}  // namespace qpgamma
