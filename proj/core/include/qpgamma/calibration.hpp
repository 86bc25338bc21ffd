#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpgamma/config.hpp"
#include "qpgamma/gamma_transport.hpp"
#include "qpgamma/weighting_potential.hpp"

namespace qpgamma {

struct Target {
    double value = 0.0;
    double sigma = 0.0;
};

struct CalibrationTargets {
    Target asymmetry{0.56, 0.07};
    std::string pair_a_i = "Q2", pair_a_j = "Q4";
    Target pcorr_a{0.232, 0.004};
    std::string pair_b_i = "Q3", pair_b_j = "Q5";
    Target pcorr_b{0.283, 0.004};
    //! Probability that an impact gives a jump above threshold on the charge
    //! qubit divided by the parity-switch probability (optional)
    std::optional<Target> jump_to_parity;
    double parity_switch_probability = 0.45;
};

struct CalibrationGrid {
    std::vector<double> lambda_e{300e-6, 400e-6, 500e-6, 600e-6, 700e-6, 800e-6, 900e-6};
    std::vector<double> ratio{1.0, 1.25, 1.55, 1.85};
    std::vector<double> f_q{0.1, 0.2, 0.3, 0.4, 0.5};
};

struct CalibrationPoint {
    TransportParams params;
    double asymmetry = 0.0, asymmetry_error = 0.0;
    double pcorr_a = 0.0, pcorr_a_error = 0.0;
    double pcorr_b = 0.0, pcorr_b_error = 0.0;
    double jump_to_parity = 0.0;
    double chi2 = 0.0;
    std::size_t jumps = 0;
};

struct CalibrationResult {
    std::vector<CalibrationPoint> surface;  //!< lambda_e-major, then ratio, then f_q
    std::size_t best = 0;
    std::size_t impacts = 0;
};

struct CalibrationOptions {
    unsigned jobs = 1;
    double threshold = 0.15;
};

/// Grid sweep over (lambda_e, lambda_h / lambda_e, f_q). All grid points see
/// the same substrate deposits and the same carrier random numbers; f_q
/// selects a prefix of the pair list, so the surface is smooth in the grid.
/// Throws ConfigError for an empty grid.
CalibrationResult calibrate_parameters(const ExperimentConfig& config, const InducedChargeTable& table,
                                       const DepositLog& deposits, const CalibrationTargets& targets,
                                       const CalibrationGrid& grid, const CalibrationOptions& options = {});

/// Re-score an existing surface against other targets.
void rescore(CalibrationResult& result, const CalibrationTargets& targets);

/// Targets equal to the simulated values at grid point `index`.
CalibrationTargets targets_from_point(const CalibrationResult& result, std::size_t index,
                                      const CalibrationTargets& base = {});

}  // namespace qpgamma
