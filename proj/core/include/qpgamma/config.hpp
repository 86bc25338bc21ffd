#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpgamma/geometry.hpp"
#include "qpgamma/materials.hpp"

namespace qpgamma {

inline constexpr int kSchemaVersion = 1;

struct ShieldSlab {
    Material material = Material::Aluminum;
    double thickness = 0.0;   //!< along the source-chip axis [m]
    double standoff = 0.0;    //!< chip top face to near slab face [m]
    double half_width = 0.15; //!< lateral half extent [m]
};

//---------------------------------------------------------------------------//
/*!
 * X-mon cross island: the union of two perpendicular bars of half-length
 * `arm_half_length` and half-width `arm_half_width`, surrounded by a gap of
 * width `gap` cut into the ground plane.
 */
struct IslandShape {
    double arm_half_length = 180e-6;
    double arm_half_width = 15e-6;
    double gap = 5e-6;

    //! Island (metal at unit potential), closed set
    bool contains(double x, double y) const noexcept;
    //! Inside the dilated cross but not on the island
    bool in_gap(double x, double y) const noexcept;
    //! Outline polygon, counter-clockwise, 12 vertices
    std::vector<Vec2> outline() const;
};

struct QubitIsland {
    std::string id;
    Vec2 center; //!< top-face coordinates [m]
};

struct NaIDetector {
    double diameter = 25.4e-3;
    double length = 25.4e-3;
    Vec3 center;
};

struct Geometry {
    Vec3 substrate_size{8e-3, 8e-3, 525e-6};
    std::vector<ShieldSlab> shield_slabs;
    double source_distance = 0.2;  //!< source to chip top face [m]
    double source_activity = 3.552e6; //!< decays/s (96 uCi)
    IslandShape island;
    std::vector<QubitIsland> qubit_islands;
    std::optional<NaIDetector> nai_detector;
    //! Fraction of photons emitted into the cone subtending the substrate
    //! (importance sampling; 0 means analog emission).
    double bias_cone_fraction = 0.0;

    //! Substrate box in chip coordinates: top face at z = 0, centered on x = y = 0
    Box substrate_box() const noexcept;
    Vec3 source_position() const noexcept { return {0.0, 0.0, source_distance}; }
};

struct QubitParams {
    std::string id;
    double f01_ghz = 0.0;
    double fr_ghz = 0.0;
    double dispersion_mhz = 0.0;
    double ej_ec = 0.0;
    double t1_us = 0.0;
};

struct TransportParams {
    double lambda_e = 600e-6;
    double lambda_h = 930e-6;
    double f_q = 0.30;
    double pair_energy_ev = 3.8;
    int downsample = 10;

    friend bool operator==(const TransportParams&, const TransportParams&) = default;
};

struct RngPolicy {
    std::uint64_t master_seed = 20240917;
};

/// Analysis thresholds and window sizes.
struct AnalysisDefaults {
    double sensing_radius = 1060e-6;
    double jump_threshold = 0.15;
    int step_average = 100;
    int step_kernel = 200;
    int coincidence_window = 100;
    int parity_average = 40;
    int footprint_average = 100;
    double separation_parity = 3.29;
    double separation_footprint = 4.65;
    int psd_segment = 1024;
    int reset_interval = 5000;
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    Geometry geometry;
    std::vector<QubitParams> qubits;
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string charge_sensing_qubit = "Q2";
    TransportParams transport;
    RngPolicy rng;
    AnalysisDefaults analysis;
    //! Probability that a decay also emits the 1.1732 MeV photon
    double secondary_branch = 0.9986;

    const QubitIsland& island(const std::string& id) const;
    std::size_t qubit_index(const std::string& id) const;
};

/// Reference qubit parameters for the named device ("non-Cu" or "Cu").
std::vector<QubitParams> device_qubits(const std::string& device = "non-Cu");

/// Six-island layout reconstructed from the measured pair separations.
std::vector<QubitIsland> default_layout();

/// Bundled configuration: full layout, non-Cu qubit parameters, no shields.
ExperimentConfig default_config();

/// Parse a JSON document; missing fields take defaults. `base_dir` resolves
/// a relative `layout_file`.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);

/// Throws ConfigError on any invariant violation.
void validate(const ExperimentConfig& config);

void validate(const TransportParams& params);

std::vector<QubitIsland> parse_layout(const nlohmann::json& doc);

}  // namespace qpgamma
