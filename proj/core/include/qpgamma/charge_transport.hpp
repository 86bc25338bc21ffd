#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qpgamma/config.hpp"
#include "qpgamma/gamma_transport.hpp"
#include "qpgamma/geometry.hpp"
#include "qpgamma/rng.hpp"

namespace qpgamma {

enum class Species { Electron, Hole };
enum class Fate { Trapped, BoundaryAbsorbed };

std::string_view to_string(Species s) noexcept;
std::string_view to_string(Fate f) noexcept;

struct ChargeCarrier {
    Species species = Species::Electron;
    double weight = 1.0;  //!< elementary charges represented
    Vec3 birth;
    Vec3 final;
    Fate fate = Fate::Trapped;

    //! Signed charge in units of e: holes positive, electrons negative
    double charge() const noexcept { return species == Species::Hole ? weight : -weight; }
};

struct ChargeState {
    std::uint64_t event_index = 0;
    std::vector<ChargeCarrier> carriers;
    std::uint64_t total_pairs = 0;  //!< before downsampling

    double net_charge() const noexcept;
};

/// Number of tracked pairs for a deposit: round(E f_q / eps / k_ds).
std::uint64_t tracked_pairs(double energy_kev, const TransportParams& params) noexcept;

/// Co-located, unpropagated electron/hole pairs for one substrate deposit.
std::vector<ChargeCarrier> generate_pairs(const EnergyDeposit& deposit, const TransportParams& params);

/// Isotropic straight flight of length Lambda * Exp(1); stops on the
/// substrate boundary if reached first.
ChargeCarrier propagate_carrier(ChargeCarrier carrier, double lambda, const Box& substrate,
                                RandomStream& stream) noexcept;

/// Key for the carrier streams of one event.
std::uint64_t carrier_event_key(std::uint64_t master_seed, std::uint64_t event_index) noexcept;

/// Stream of one carrier: deposit `deposit_index`, pair `pair_index`.
RandomStream carrier_stream(std::uint64_t event_key, std::uint64_t deposit_index, std::uint64_t pair_index,
                            Species species) noexcept;

/// Propagate all pairs of an event's substrate deposits. Carrier k of
/// deposit d always uses the same substream, so electron histories do not
/// depend on the hole trapping length and vice versa.
ChargeState transport_event(std::span<const EnergyDeposit> deposits, const TransportParams& params,
                            const Box& substrate, std::uint64_t event_key, std::uint64_t event_index = 0);

/// Visitor form of transport_event without storing carriers:
/// fn(const ChargeCarrier&, deposit_index, pair_index).
template<class F>
void for_each_carrier(std::span<const EnergyDeposit> deposits, const TransportParams& params, const Box& substrate,
                      std::uint64_t event_key, F&& fn)
{
    for (std::size_t d = 0; d < deposits.size(); ++d) {
        const auto& dep = deposits[d];
        if (dep.volume != VolumeKind::Substrate)
            continue;
        const std::uint64_t n = tracked_pairs(dep.energy_kev, params);
        for (std::uint64_t p = 0; p < n; ++p) {
            for (Species s : {Species::Electron, Species::Hole}) {
                ChargeCarrier c;
                c.species = s;
                c.weight = params.downsample;
                c.birth = dep.position;
                RandomStream rng = carrier_stream(event_key, d, p, s);
                c = propagate_carrier(c, s == Species::Electron ? params.lambda_e : params.lambda_h, substrate, rng);
                fn(c, d, p);
            }
        }
    }
}

}  // namespace qpgamma
