#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "qpgamma/charge_transport.hpp"
#include "qpgamma/gamma_transport.hpp"
#include "qpgamma/impact_simulation.hpp"
#include "qpgamma/tomography.hpp"

namespace qpgamma {

// File names written by the functions below, relative to their directory.
inline constexpr const char* kDepositsCsv = "deposits.csv";
inline constexpr const char* kEventsCsv = "events.csv";
inline constexpr const char* kDepositSummary = "deposits_summary.json";
inline constexpr const char* kImpactsCsv = "impacts.csv";
inline constexpr const char* kImpactSummary = "impacts_summary.json";

/// deposits.csv (event_index, volume, x, y, z, energy_keV, mechanism),
/// events.csv (event_index, weight, substrate_keV, nai_keV) and a JSON
/// summary with the hit statistics and the deposit histogram.
void write_deposit_log(const DepositLog& log, const std::filesystem::path& dir);

/// Inverse of write_deposit_log; throws DataError on missing or malformed files.
DepositLog read_deposit_log(const std::filesystem::path& dir);

/// One row per carrier: event_index, species, weight, x_f, y_f, z_f, fate.
void write_charge_states(std::span<const ChargeState> states, const std::filesystem::path& file);

/// impacts.csv (event_index, weight, substrate_keV, one raw column per qubit)
/// plus impacts_summary.json.
void write_impacts(const ImpactSimulation& sim, const std::filesystem::path& dir);
ImpactSimulation read_impacts(const std::filesystem::path& dir);

/// index, time, magnitude, method, qubit
void write_jumps(std::span<const JumpEvent> jumps, const std::filesystem::path& file);
std::vector<JumpEvent> read_jumps(const std::filesystem::path& file);

}  // namespace qpgamma
