#pragma once

// Lengths are metres, times seconds, charges elementary charges.
// Photon energies are carried in MeV, deposits in keV, pair energies in eV;
// field names carry the unit suffix wherever it is not metres/seconds.

namespace qpgamma::units {

inline constexpr double m = 1.0;
inline constexpr double mm = 1e-3;
inline constexpr double um = 1e-6;
inline constexpr double cm = 1e-2;

inline constexpr double s = 1.0;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;

inline constexpr double kev_per_mev = 1e3;
inline constexpr double ev_per_kev = 1e3;

inline constexpr double electron_mass_mev = 0.51099895;
inline constexpr double classical_electron_radius_cm = 2.8179403262e-13;
inline constexpr double avogadro = 6.02214076e23;

/// Decays per second in one curie.
inline constexpr double decays_per_curie = 3.7e10;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace qpgamma::units
