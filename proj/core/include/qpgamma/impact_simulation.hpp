#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpgamma/config.hpp"
#include "qpgamma/gamma_transport.hpp"
#include "qpgamma/timeseries.hpp"
#include "qpgamma/weighting_potential.hpp"

namespace qpgamma {

/// Induced offset charge of one substrate-hitting decay on every qubit.
struct ImpactRecord {
    std::uint64_t event_index = 0;
    double weight = 1.0;
    double substrate_kev = 0.0;
    std::vector<double> raw;  //!< per qubit, un-aliased
};

struct ImpactSimulation {
    std::vector<std::string> qubits;
    std::uint64_t n_decays = 0;
    double decays_per_second = 0.0;
    double hit_probability = 0.0;
    double hit_probability_error = 0.0;
    std::vector<ImpactRecord> impacts;

    /// Weighted events per second whose aliased shift on qubit q exceeds threshold.
    double jump_rate(std::size_t q, double threshold = 0.15) const;
    double substrate_hit_rate() const noexcept { return hit_probability * decays_per_second; }
};

struct ImpactOptions {
    unsigned jobs = 1;
    std::uint64_t first_event = 0;
    std::optional<double> bias_cone_fraction;
};

/// Decays, photon transport, carrier transport and induced charge on every
/// configured qubit for decays [first_event, first_event + n).
ImpactSimulation simulate_impacts(const ExperimentConfig& config, const InducedChargeTable& table, std::uint64_t n,
                                  const ImpactOptions& options = {});

/// Induced charges of already simulated deposits (grouped by event).
ImpactSimulation impacts_from_deposits(const ExperimentConfig& config, const InducedChargeTable& table,
                                       const DepositLog& log, unsigned jobs = 1);

/// Per-qubit jump counts and pairwise coincidences among impacts.
struct JumpStatistics {
    std::vector<std::string> qubits;
    std::size_t impacts = 0;
    std::vector<std::size_t> counts;                 //!< per qubit
    std::vector<std::vector<std::size_t>> together;  //!< [i][j]
    std::size_t positive = 0;                        //!< over all qubits
    std::size_t total = 0;

    double p_corr(std::size_t i, std::size_t j) const;
    double p_corr_error(std::size_t i, std::size_t j) const;
    double asymmetry() const;
    double asymmetry_error() const;
};

JumpStatistics jump_statistics(const ImpactSimulation& sim, double threshold = 0.15);

/// Synthetic coupled measurement: a single-shot charge series on the
/// charge-sensing qubit plus one parity trace per qubit.
struct CouplingSettings {
    SingleShotSettings charge;
    ParitySettings parity;              //!< template; gamma and qubit are replaced per qubit
    std::vector<std::string> qubits;
    std::vector<double> gammas;         //!< background switching rate per qubit
    std::vector<double> p_poison;       //!< per qubit
};

struct CoupledRecords {
    OffsetChargeSeries charge;
    std::vector<ParityTrace> parity;
    std::vector<std::size_t> impact_index;
    //! Impacts that poisoned each qubit (before the 50% observability)
    std::vector<std::vector<std::size_t>> poisoned;
};

/// Each impact k places a charge step of `charge_shift[k]` at sample
/// `impact_index[k]` and poisons qubit q with probability p_poison[q].
CoupledRecords events_to_records(std::span<const double> charge_shift, std::span<const std::size_t> impact_index,
                                 const CouplingSettings& settings, std::uint64_t seed);

}  // namespace qpgamma
