#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qpgamma/charge_transport.hpp"
#include "qpgamma/footprint_contour.hpp"
#include "qpgamma/weighting_potential.hpp"

namespace qpgamma {

/// Offset charge folded into (-0.5, 0.5]: q - nearest integer.
double alias_charge(double q) noexcept;

struct OffsetChargeShift {
    std::uint64_t event_index = 0;
    std::vector<double> raw;      //!< per qubit, elementary charges
    std::vector<double> aliased;  //!< per qubit, in (-0.5, 0.5]
};

/// Order-independent accumulator for sum(s_i * weight_i * w_i): terms are
/// added in 2^-64 fixed point so concatenating clouds is exactly additive.
class ChargeAccumulator {
  public:
    void add(double term) noexcept;
    ChargeAccumulator& operator+=(const ChargeAccumulator& o) noexcept
    {
        acc_ += o.acc_;
        return *this;
    }
    double value() const noexcept;

  private:
    __extension__ typedef __int128 Wide;
    Wide acc_ = 0;
};

/// Offset-charge contribution of one carrier on an island centred at
/// `island`: -charge * w. A carrier absorbed on the island surface itself
/// has become an integer island charge and contributes nothing.
/// Throws DataError for carriers outside the table depth range.
double carrier_offset(const ChargeCarrier& carrier, const InducedChargeTable& table, const Vec2& island);

/// Raw induced offset charge on an island from the carriers (sum of
/// carrier_offset, so holes near the island give negative shifts).
double induced_charge(std::span<const ChargeCarrier> carriers, const InducedChargeTable& table, const Vec2& island);

OffsetChargeShift induced_offset_charge(const ChargeState& state, const InducedChargeTable& table,
                                        std::span<const QubitIsland> qubits);

struct ChargeCloud {
    std::vector<ChargeCarrier> carriers;
    std::size_t n_events = 0;
    double net_charge() const noexcept;
};

/// Average charge cloud of `n_events` substrate-hitting decays: every
/// deposit is moved to x = y = 0 (depth kept), carriers are transported and
/// their weights divided by n_events.
ChargeCloud characteristic_burst(const ExperimentConfig& config, const TransportParams& params,
                                 std::size_t n_events = 100, std::uint64_t seed = 0);

/// Same, from given substrate deposits grouped by event (event order kept).
ChargeCloud burst_from_deposits(std::span<const EnergyDeposit> deposits, const TransportParams& params,
                                const Box& substrate, std::uint64_t seed);

struct SensingFootprint {
    double spacing = 0.0;
    std::vector<double> axis;    //!< island-centre offsets along x and y [m]
    std::vector<double> charge;  //!< un-aliased induced charge, row-major [iy][ix]
    std::vector<ContourLevel> contours;
};

struct FootprintOptions {
    std::vector<double> levels{0.15, 0.10};
    double spacing = 10e-6;
    double map_half_width = 2.5e-3;
};

/// Induced charge as a function of island offset from the burst centre,
/// evaluated as a per-depth-layer FFT correlation of the rasterised cloud with
/// the weighting potential (carriers on the top face use a separate layer
/// whose kernel excludes the island). Contours are taken on the signed charge; throws
/// DataError when a level is never reached.
SensingFootprint sensing_footprint(const ChargeCloud& burst, const InducedChargeTable& table,
                                   const FootprintOptions& options = {});

/// Direct (slow) evaluation of the same map value at one island offset.
double footprint_value_direct(const ChargeCloud& burst, const InducedChargeTable& table, const Vec2& offset);

}  // namespace qpgamma
