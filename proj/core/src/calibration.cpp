#include "qpgamma/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpgamma/charge_transport.hpp"
#include "qpgamma/electrostatics.hpp"
#include "qpgamma/errors.hpp"
#include "qpgamma/parallel.hpp"

namespace qpgamma {
namespace {

struct EventDeposits {
    std::uint64_t index;
    std::vector<EnergyDeposit> deposits;
};

std::vector<EventDeposits> group_substrate_events(const DepositLog& log)
{
    std::vector<std::size_t> order(log.deposits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return log.deposits[a].event_index < log.deposits[b].event_index;
    });
    std::vector<EventDeposits> out;
    for (std::size_t k : order) {
        const auto& d = log.deposits[k];
        if (d.volume != VolumeKind::Substrate)
            continue;
        if (out.empty() || out.back().index != d.event_index)
            out.push_back({d.event_index, {}});
        out.back().deposits.push_back(d);
    }
    return out;
}

double chi2_term(double sim, double sim_err, const Target& t)
{
    const double var = t.sigma * t.sigma + sim_err * sim_err;
    const double d = sim - t.value;
    return var > 0 ? d * d / var : (d == 0 ? 0.0 : std::numeric_limits<double>::infinity());
}

}  // namespace

void rescore(CalibrationResult& r, const CalibrationTargets& t)
{
    if (r.surface.empty())
        throw ConfigError("calibration grid is empty");
    for (auto& p : r.surface) {
        p.chi2 = chi2_term(p.asymmetry, p.asymmetry_error, t.asymmetry) + chi2_term(p.pcorr_a, p.pcorr_a_error, t.pcorr_a)
                 + chi2_term(p.pcorr_b, p.pcorr_b_error, t.pcorr_b);
        if (t.jump_to_parity)
            p.chi2 += chi2_term(p.jump_to_parity, 0.0, *t.jump_to_parity);
    }
    r.best = 0;
    for (std::size_t k = 1; k < r.surface.size(); ++k)
        if (r.surface[k].chi2 < r.surface[r.best].chi2)
            r.best = k;
}

CalibrationTargets targets_from_point(const CalibrationResult& r, std::size_t index, const CalibrationTargets& base)
{
    const auto& p = r.surface.at(index);
    CalibrationTargets t = base;
    t.asymmetry = {p.asymmetry, p.asymmetry_error};
    t.pcorr_a = {p.pcorr_a, p.pcorr_a_error};
    t.pcorr_b = {p.pcorr_b, p.pcorr_b_error};
    if (t.jump_to_parity)
        t.jump_to_parity = Target{p.jump_to_parity, t.jump_to_parity->sigma};
    return t;
}

CalibrationResult calibrate_parameters(const ExperimentConfig& config, const InducedChargeTable& table,
                                       const DepositLog& log, const CalibrationTargets& targets,
                                       const CalibrationGrid& grid, const CalibrationOptions& options)
{
    if (grid.lambda_e.empty() || grid.ratio.empty() || grid.f_q.empty())
        throw ConfigError("calibration grid is empty");
    std::vector<double> fq = grid.f_q;
    std::sort(fq.begin(), fq.end());
    for (double f : fq)
        if (!(f > 0.0 && f <= 1.0))
            throw ConfigError("f_q grid values must lie in (0, 1]");
    for (double l : grid.lambda_e)
        if (!(l > 0.0))
            throw ConfigError("trapping lengths must be positive");
    for (double r : grid.ratio)
        if (!(r > 0.0))
            throw ConfigError("trapping-length ratios must be positive");

    const auto& islands = config.geometry.qubit_islands;
    const std::size_t nq = islands.size();
    const auto qa = config.qubit_index(targets.pair_a_i), qb = config.qubit_index(targets.pair_a_j);
    const auto qc = config.qubit_index(targets.pair_b_i), qd = config.qubit_index(targets.pair_b_j);
    const auto qcharge = config.qubit_index(config.charge_sensing_qubit);

    const std::size_t ne = grid.lambda_e.size(), nr = grid.ratio.size(), nf = fq.size();
    std::vector<double> lambda_h;
    for (double le : grid.lambda_e)
        for (double r : grid.ratio)
            lambda_h.push_back(le * r);

    const auto events = group_substrate_events(log);
    const Box substrate = config.geometry.substrate_box();
    TransportParams base = config.transport;

    // raw[event][(lambda_e, ratio, f) ][q]
    const std::size_t npts = ne * nr * nf;
    std::vector<std::vector<double>> raw(events.size(), std::vector<double>(npts * nq, 0.0));

    parallel_chunks(events.size(), options.jobs, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> e_sum(ne * nf * nq), h_sum(lambda_h.size() * nf * nq), run(nq);
        for (std::size_t ev = begin; ev < end; ++ev) {
            const auto& E = events[ev];
            std::fill(e_sum.begin(), e_sum.end(), 0.0);
            std::fill(h_sum.begin(), h_sum.end(), 0.0);
            const std::uint64_t key = carrier_event_key(config.rng.master_seed, E.index);
            for (std::size_t d = 0; d < E.deposits.size(); ++d) {
                std::vector<std::uint64_t> cut(nf);
                for (std::size_t k = 0; k < nf; ++k) {
                    TransportParams p = base;
                    p.f_q = fq[k];
                    cut[k] = tracked_pairs(E.deposits[d].energy_kev, p);
                }
                auto sweep = [&](Species sp, const std::vector<double>& lambdas, std::vector<double>& sums) {
                    for (std::size_t l = 0; l < lambdas.size(); ++l) {
                        std::fill(run.begin(), run.end(), 0.0);
                        std::size_t k = 0;
                        while (k < nf && cut[k] == 0)
                            ++k;
                        for (std::uint64_t p = 0; k < nf && p < cut[nf - 1]; ++p) {
                            ChargeCarrier c;
                            c.species = sp;
                            c.weight = base.downsample;
                            c.birth = E.deposits[d].position;
                            RandomStream rng = carrier_stream(key, d, p, sp);
                            c = propagate_carrier(c, lambdas[l], substrate, rng);
                            for (std::size_t q = 0; q < nq; ++q)
                                run[q] += carrier_offset(c, table, islands[q].center);
                            while (k < nf && cut[k] == p + 1) {
                                for (std::size_t q = 0; q < nq; ++q)
                                    sums[(l * nf + k) * nq + q] += run[q];
                                ++k;
                            }
                        }
                    }
                };
                sweep(Species::Electron, grid.lambda_e, e_sum);
                sweep(Species::Hole, lambda_h, h_sum);
            }
            auto& out = raw[ev];
            for (std::size_t ie = 0; ie < ne; ++ie)
                for (std::size_t ir = 0; ir < nr; ++ir)
                    for (std::size_t k = 0; k < nf; ++k)
                        for (std::size_t q = 0; q < nq; ++q) {
                            const std::size_t pt = (ie * nr + ir) * nf + k;
                            out[pt * nq + q] = e_sum[(ie * nf + k) * nq + q] + h_sum[((ie * nr + ir) * nf + k) * nq + q];
                        }
        }
    });

    CalibrationResult result;
    result.impacts = events.size();
    for (std::size_t ie = 0; ie < ne; ++ie) {
        for (std::size_t ir = 0; ir < nr; ++ir) {
            for (std::size_t k = 0; k < nf; ++k) {
                const std::size_t pt = (ie * nr + ir) * nf + k;
                CalibrationPoint cp;
                cp.params = base;
                cp.params.lambda_e = grid.lambda_e[ie];
                cp.params.lambda_h = grid.lambda_e[ie] * grid.ratio[ir];
                cp.params.f_q = fq[k];
                std::vector<std::size_t> count(nq, 0);
                std::size_t ab = 0, cd = 0, pos = 0, tot = 0;
                for (const auto& ev : raw) {
                    std::vector<bool> hit(nq);
                    for (std::size_t q = 0; q < nq; ++q) {
                        const double a = alias_charge(ev[pt * nq + q]);
                        hit[q] = std::abs(a) > options.threshold;
                        if (hit[q]) {
                            ++count[q];
                            ++tot;
                            pos += a > 0;
                        }
                    }
                    ab += hit[qa] && hit[qb];
                    cd += hit[qc] && hit[qd];
                }
                auto pc = [](std::size_t nij, std::size_t ni, std::size_t nj, double& err) {
                    const double n = static_cast<double>(ni + nj);
                    if (n == 0) {
                        err = 1.0;
                        return 0.0;
                    }
                    const double p = 2.0 * static_cast<double>(nij) / n;
                    const double pp = std::clamp(p, 0.0, 1.0);
                    err = std::sqrt(std::max(pp * (1 - pp), 1.0 / n) * 2.0 / n);
                    return p;
                };
                cp.pcorr_a = pc(ab, count[qa], count[qb], cp.pcorr_a_error);
                cp.pcorr_b = pc(cd, count[qc], count[qd], cp.pcorr_b_error);
                cp.jumps = tot;
                if (tot > 0) {
                    cp.asymmetry = static_cast<double>(pos) / static_cast<double>(tot);
                    cp.asymmetry_error = std::sqrt(std::max(cp.asymmetry * (1 - cp.asymmetry), 1.0 / tot) / tot);
                } else {
                    cp.asymmetry = 0.5;
                    cp.asymmetry_error = 1.0;
                }
                if (!raw.empty())
                    cp.jump_to_parity = static_cast<double>(count[qcharge]) / static_cast<double>(raw.size())
                                        / targets.parity_switch_probability;
                result.surface.push_back(cp);
            }
        }
    }
    rescore(result, targets);
    return result;
}

}  // namespace qpgamma
