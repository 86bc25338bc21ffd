#include "qpgamma/charge_transport.hpp"

#include <algorithm>
#include <cmath>

#include "qpgamma/units.hpp"

namespace qpgamma {

std::string_view to_string(Species s) noexcept
{
    return s == Species::Electron ? "electron" : "hole";
}

std::string_view to_string(Fate f) noexcept
{
    return f == Fate::Trapped ? "trapped" : "boundary";
}

double ChargeState::net_charge() const noexcept
{
    double q = 0.0;
    for (const auto& c : carriers)
        q += c.charge();
    return q;
}

std::uint64_t tracked_pairs(double energy_kev, const TransportParams& p) noexcept
{
    if (!(energy_kev > 0.0))
        return 0;
    const double n = energy_kev * units::ev_per_kev * p.f_q / p.pair_energy_ev / p.downsample;
    return static_cast<std::uint64_t>(std::llround(n));
}

std::vector<ChargeCarrier> generate_pairs(const EnergyDeposit& deposit, const TransportParams& params)
{
    const std::uint64_t n = tracked_pairs(deposit.energy_kev, params);
    std::vector<ChargeCarrier> out;
    out.reserve(2 * n);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (Species s : {Species::Electron, Species::Hole}) {
            ChargeCarrier c;
            c.species = s;
            c.weight = params.downsample;
            c.birth = deposit.position;
            c.final = deposit.position;
            out.push_back(c);
        }
    }
    return out;
}

ChargeCarrier propagate_carrier(ChargeCarrier c, double lambda, const Box& box, RandomStream& rng) noexcept
{
    const double mu = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * units::pi * rng.uniform();
    const Vec3 dir = direction_from(mu, phi);
    const double length = lambda * rng.exponential();
    const double exit = std::max(0.0, intersect(box, c.birth, dir).exit);
    if (length >= exit) {
        c.final = c.birth + exit * dir;
        c.fate = Fate::BoundaryAbsorbed;
    } else {
        c.final = c.birth + length * dir;
        c.fate = Fate::Trapped;
    }
    c.final.x = std::clamp(c.final.x, box.lo.x, box.hi.x);
    c.final.y = std::clamp(c.final.y, box.lo.y, box.hi.y);
    c.final.z = std::clamp(c.final.z, box.lo.z, box.hi.z);
    return c;
}

std::uint64_t carrier_event_key(std::uint64_t master_seed, std::uint64_t event_index) noexcept
{
    return derive_key(domain_key(master_seed, StreamDomain::Carrier), event_index);
}

RandomStream carrier_stream(std::uint64_t event_key, std::uint64_t deposit_index, std::uint64_t pair_index,
                            Species species) noexcept
{
    const std::uint64_t k = derive_key(event_key, deposit_index);
    return RandomStream{derive_key(k, 2 * pair_index + (species == Species::Hole ? 1 : 0))};
}

ChargeState transport_event(std::span<const EnergyDeposit> deposits, const TransportParams& params,
                            const Box& substrate, std::uint64_t event_key, std::uint64_t event_index)
{
    ChargeState state;
    state.event_index = event_index;
    for_each_carrier(deposits, params, substrate, event_key,
                     [&](const ChargeCarrier& c, std::size_t, std::uint64_t) { state.carriers.push_back(c); });
    state.total_pairs = state.carriers.size() / 2 * static_cast<std::uint64_t>(params.downsample);
    return state;
}

}  // namespace qpgamma
