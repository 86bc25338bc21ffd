#include "qpgamma/impact_simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpgamma/charge_transport.hpp"
#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/parallel.hpp"

namespace qpgamma {

double ImpactSimulation::jump_rate(std::size_t q, double threshold) const
{
    if (n_decays == 0)
        return 0.0;
    double w = 0.0;
    for (const auto& r : impacts)
        if (std::abs(alias_charge(r.raw.at(q))) > threshold)
            w += r.weight;
    return w / static_cast<double>(n_decays) * decays_per_second;
}

ImpactSimulation impacts_from_deposits(const ExperimentConfig& config, const InducedChargeTable& table,
                                       const DepositLog& log, unsigned jobs)
{
    ImpactSimulation sim;
    for (const auto& q : config.geometry.qubit_islands)
        sim.qubits.push_back(q.id);
    sim.n_decays = log.n_decays;
    sim.decays_per_second = config.geometry.source_activity;
    sim.hit_probability = log.hit_probability;
    sim.hit_probability_error = log.hit_probability_error;

    std::vector<std::size_t> order(log.deposits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return log.deposits[a].event_index < log.deposits[b].event_index;
    });
    struct Group {
        const EventSummary* summary;
        std::vector<EnergyDeposit> deposits;
    };
    std::vector<Group> groups;
    std::size_t pos = 0;
    for (const auto& e : log.events) {
        if (!(e.substrate_kev > 0.0))
            continue;
        while (pos < order.size() && log.deposits[order[pos]].event_index < e.event_index)
            ++pos;
        Group g{&e, {}};
        while (pos < order.size() && log.deposits[order[pos]].event_index == e.event_index) {
            const auto& d = log.deposits[order[pos]];
            if (d.volume == VolumeKind::Substrate)
                g.deposits.push_back(d);
            ++pos;
        }
        groups.push_back(std::move(g));
    }

    const Box substrate = config.geometry.substrate_box();
    const auto& islands = config.geometry.qubit_islands;
    const unsigned chunks = chunk_count(groups.size(), jobs);
    std::vector<std::vector<ImpactRecord>> parts(chunks);
    parallel_chunks(groups.size(), jobs, [&](std::size_t c, std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            const auto& grp = groups[g];
            std::vector<ChargeAccumulator> acc(islands.size());
            for_each_carrier(grp.deposits, config.transport, substrate,
                             carrier_event_key(config.rng.master_seed, grp.summary->event_index),
                             [&](const ChargeCarrier& carrier, std::size_t, std::uint64_t) {
                                 for (std::size_t q = 0; q < islands.size(); ++q)
                                     acc[q].add(carrier_offset(carrier, table, islands[q].center));
                             });
            ImpactRecord r;
            r.event_index = grp.summary->event_index;
            r.weight = grp.summary->weight;
            r.substrate_kev = grp.summary->substrate_kev;
            for (const auto& a : acc)
                r.raw.push_back(a.value());
            parts[c].push_back(std::move(r));
        }
    });
    for (auto& p : parts)
        for (auto& r : p)
            sim.impacts.push_back(std::move(r));
    return sim;
}

ImpactSimulation simulate_impacts(const ExperimentConfig& config, const InducedChargeTable& table, std::uint64_t n,
                                  const ImpactOptions& options)
{
    BatchOptions b;
    b.first_event = options.first_event;
    b.jobs = options.jobs;
    b.bias_cone_fraction = options.bias_cone_fraction;
    const DepositLog log = run_decay_batch(config, n, b);
    return impacts_from_deposits(config, table, log, options.jobs);
}

double JumpStatistics::p_corr(std::size_t i, std::size_t j) const
{
    if (counts[i] + counts[j] == 0)
        throw DataError("correlation probability undefined: no jumps on either qubit");
    return 2.0 * static_cast<double>(together[i][j]) / static_cast<double>(counts[i] + counts[j]);
}

double JumpStatistics::p_corr_error(std::size_t i, std::size_t j) const
{
    const double n = static_cast<double>(counts[i] + counts[j]);
    if (n == 0)
        return 0.0;
    // Binomial spread of the shared fraction among the jumps on the pair
    const double p = std::clamp(p_corr(i, j), 0.0, 1.0);
    return std::sqrt(std::max(p * (1.0 - p), 1.0 / n) * 2.0 / n);
}

double JumpStatistics::asymmetry() const
{
    if (total == 0)
        throw DataError("no jumps above threshold for the asymmetry");
    return static_cast<double>(positive) / static_cast<double>(total);
}

double JumpStatistics::asymmetry_error() const
{
    if (total == 0)
        return 0.0;
    const double p = asymmetry();
    return std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(total)) / static_cast<double>(total));
}

JumpStatistics jump_statistics(const ImpactSimulation& sim, double threshold)
{
    JumpStatistics s;
    const std::size_t nq = sim.qubits.size();
    s.qubits = sim.qubits;
    s.impacts = sim.impacts.size();
    s.counts.assign(nq, 0);
    s.together.assign(nq, std::vector<std::size_t>(nq, 0));
    std::vector<bool> hit(nq);
    for (const auto& r : sim.impacts) {
        for (std::size_t q = 0; q < nq; ++q) {
            const double a = alias_charge(r.raw[q]);
            hit[q] = std::abs(a) > threshold;
            if (hit[q]) {
                ++s.counts[q];
                ++s.total;
                s.positive += a > 0;
            }
        }
        for (std::size_t i = 0; i < nq; ++i)
            for (std::size_t j = 0; j < nq; ++j)
                s.together[i][j] += hit[i] && hit[j];
    }
    return s;
}

CoupledRecords events_to_records(std::span<const double> shift, std::span<const std::size_t> index,
                                 const CouplingSettings& s, std::uint64_t seed)
{
    if (shift.size() != index.size())
        throw ConfigError("one charge shift is needed per impact index");
    const std::size_t nq = s.qubits.size();
    if (s.gammas.size() != nq || s.p_poison.size() != nq)
        throw ConfigError("coupling needs a switching rate and a poisoning probability per qubit");
    for (double p : s.p_poison)
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("poisoning probabilities must lie in [0, 1]");
    if (s.charge.samples != s.parity.samples)
        throw ConfigError("charge and parity records must have the same length");

    const std::uint64_t key = domain_key(seed, StreamDomain::Synthesis);
    CoupledRecords out;
    out.impact_index.assign(index.begin(), index.end());
    {
        RandomStream rng = rng_substream(key, 0);
        out.charge = synth_singleshot_series(s.charge, out.impact_index, {shift.begin(), shift.end()}, rng);
    }
    out.poisoned.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        RandomStream pick = rng_substream(key, 1000 + 2 * q);
        for (std::size_t k : out.impact_index)
            if (pick.uniform() < s.p_poison[q])
                out.poisoned[q].push_back(k);
        ParitySettings ps = s.parity;
        ps.gamma = s.gammas[q];
        ps.qubit = s.qubits[q];
        RandomStream rng = rng_substream(key, 1001 + 2 * q);
        out.parity.push_back(synth_parity_trace(ps, {}, out.poisoned[q], rng));
    }
    return out;
}

}  // namespace qpgamma
