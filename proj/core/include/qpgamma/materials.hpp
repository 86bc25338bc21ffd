#pragma once

#include <string>
#include <string_view>

namespace qpgamma {

enum class Material {
    Silicon,
    Aluminum,
    Copper,
    Lead,
    SodiumIodide,
    //! Infinitely attenuating, fully absorbing test material
    Absorber,
};

std::string_view to_string(Material m) noexcept;
Material material_from_string(std::string_view name);

/// Mass density [g/cm^3].
double density(Material m) noexcept;

/// Linear attenuation coefficients [1/m] at photon energy E [MeV].
struct Attenuation {
    double photoelectric = 0.0;
    double compton = 0.0;
    double total() const noexcept { return photoelectric + compton; }
};

Attenuation attenuation(Material m, double energy_mev);

/// Klein-Nishina total cross section per electron [cm^2].
double klein_nishina_sigma(double energy_mev) noexcept;

/// Radiation length [m].
double radiation_length(Material m) noexcept;

/// Highland width of the projected multiple-scattering angle [rad] for an
/// electron of kinetic energy `energy_kev` crossing `step` [m]. The
/// logarithmic correction is evaluated at `track_length` so that widths of
/// consecutive steps add in quadrature.
double highland_theta0(Material m, double energy_kev, double step, double track_length) noexcept;

/// Continuous-slowing-down electron range [m] from the collision stopping power.
double electron_range(Material m, double energy_kev);

/// Electron kinetic energy [keV] left after a straight path of `path` [m].
double electron_energy_after(Material m, double energy_kev, double path);

}  // namespace qpgamma
