#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qpgamma/config.hpp"
#include "qpgamma/geometry.hpp"
#include "qpgamma/materials.hpp"
#include "qpgamma/rng.hpp"

namespace qpgamma {

inline constexpr double kLineHigh = 1.3325;  //!< MeV
inline constexpr double kLineLow = 1.1732;   //!< MeV
inline constexpr double kPhotonCutoff = 0.010;  //!< MeV

enum class VolumeKind { Substrate, NaI, Shield };
enum class Mechanism { Photoelectric, Compton };

std::string_view to_string(VolumeKind v) noexcept;
std::string_view to_string(Mechanism m) noexcept;

struct Photon {
    double energy_mev = 0.0;
    Vec3 position;
    Vec3 direction;
    double weight = 1.0;
};

struct DecayEvent {
    std::uint64_t index = 0;
    std::vector<Photon> photons;
    //! Importance weight of the event (product of photon weights)
    double weight = 1.0;
};

struct EnergyDeposit {
    std::uint64_t event_index = 0;
    VolumeKind volume = VolumeKind::Substrate;
    Vec3 position;
    double energy_kev = 0.0;
    Mechanism mechanism = Mechanism::Photoelectric;
};

/// Mixture emission density: a fraction of photons go uniformly into a cone
/// about `axis`, the rest isotropically. Weights restore the analog average.
struct EmissionBias {
    double cone_fraction = 0.0;
    double cos_half_angle = 1.0;
    Vec3 axis{0, 0, -1};

    //! Cone from `source` that encloses a sphere of `radius` about `target`
    static EmissionBias toward(const Vec3& source, const Vec3& target, double radius, double fraction);
    double weight(const Vec3& dir) const noexcept;
};

/// Draw one decay: always the 1.3325 MeV line, plus 1.1732 MeV with
/// probability `secondary_branch`; directions isotropic unless biased.
DecayEvent sample_decay(RandomStream& stream, std::uint64_t index, const Vec3& source,
                        double secondary_branch, const EmissionBias& bias = {});

/// Outgoing photon energy fraction E'/E from the Klein-Nishina distribution.
double sample_klein_nishina(double energy_mev, RandomStream& stream) noexcept;

//---------------------------------------------------------------------------//
/*!
 * Set of convex material volumes for photon tracking: the substrate box, the
 * shield slabs and an optional NaI cylinder.
 */
class TransportGeometry {
  public:
    struct Volume {
        VolumeKind kind;
        Material material;
        std::variant<Box, ZCylinder> shape;
        //! Electron segment length for position-resolved deposits [m]
        double electron_step;
    };

    TransportGeometry() = default;
    explicit TransportGeometry(const Geometry& geometry);

    void add(Volume v);
    const std::vector<Volume>& volumes() const noexcept { return volumes_; }

    /// Track one photon; deposits are appended to `out`. Returns the energy
    /// [keV] leaving the geometry (photons and escaping electrons).
    double trace(const Photon& photon, RandomStream& stream, std::uint64_t event_index,
                 std::vector<EnergyDeposit>& out, bool record_shields = true) const;

  private:
    std::vector<Volume> volumes_;

    double deposit_electron(const Volume& v, Vec3 pos, Vec3 dir, double kev, Mechanism mech,
                            std::uint64_t event_index, RandomStream& rng,
                            std::vector<EnergyDeposit>& out, bool record) const;
};

std::vector<EnergyDeposit> trace_photon(const Photon& photon, const TransportGeometry& geometry,
                                        RandomStream& stream);

struct Histogram {
    std::vector<double> edges;
    std::vector<double> counts;

    static Histogram uniform(double lo, double hi, std::size_t bins);
    void fill(double x, double w = 1.0) noexcept;
    double bin_width() const noexcept { return edges[1] - edges[0]; }
};

struct EventSummary {
    std::uint64_t event_index = 0;
    double weight = 1.0;  //!< importance weight: emission weights of depositing photons times the no-deposit ratio of the others
    double substrate_kev = 0.0;
    double nai_kev = 0.0;
};

struct BatchOptions {
    std::uint64_t first_event = 0;
    unsigned jobs = 1;
    bool record_shields = false;
    //! Pencil-beam mode: every photon leaves along this direction
    std::optional<Vec3> fixed_direction;
    //! Emission bias toward the substrate (overrides the geometry setting)
    std::optional<double> bias_cone_fraction;
};

struct DepositLog {
    std::uint64_t n_decays = 0;
    std::vector<EnergyDeposit> deposits;
    //! Events with any substrate or NaI deposit, ascending index
    std::vector<EventSummary> events;

    double hit_probability = 0.0;        //!< weighted substrate hits per decay
    double hit_probability_error = 0.0;
    double substrate_hit_rate = 0.0;     //!< hits per second at the source activity
    double mean_deposit_kev = 0.0;       //!< weighted mean of per-hit totals
    std::size_t substrate_hits = 0;      //!< unweighted hit count
    Histogram deposit_histogram;
};

/// Simulate decays [first_event, first_event + n) under config.
DepositLog run_decay_batch(const ExperimentConfig& config, std::uint64_t n,
                           const BatchOptions& options = {});

struct ActivityEstimate {
    double decays_per_second = 0.0;
    double micro_curie = 0.0;
};

ActivityEstimate estimate_activity(double measured_peak_rate, double photoabsorption_count,
                                   double trials);

struct NaISpectrum {
    std::uint64_t n_decays = 0;
    Histogram histogram;          //!< per-event NaI deposit [keV], weighted
    double peak_high_counts = 0;  //!< events at the full 1.3325 MeV
    double peak_low_counts = 0;   //!< events at the full 1.1732 MeV
    double total_counts = 0;      //!< events with any NaI deposit
};

NaISpectrum nai_spectrum(const ExperimentConfig& config, std::uint64_t n,
                         const BatchOptions& options = {});

/// Stream for the photon history of one decay.
RandomStream decay_stream(std::uint64_t master_seed, std::uint64_t event_index) noexcept;

}  // namespace qpgamma
