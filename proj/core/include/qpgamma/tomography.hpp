#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qpgamma/timeseries.hpp"

namespace qpgamma {

enum class JumpMethod { Threshold, StepConvolution };

std::string_view to_string(JumpMethod m) noexcept;

struct JumpEvent {
    std::size_t index = 0;
    double time = 0.0;
    double magnitude = 0.0;  //!< aliased, elementary charges
    JumpMethod method = JumpMethod::Threshold;
    std::string qubit;
};

struct TomographyFit {
    double offset = 0.0;   //!< in [0, 0.5): the response has period 1/2 in n_g
    double d = 0.0;
    double nu = 0.0;
    double nu_error = 0.0;
    double rms = 0.0;
};

/// Least-squares fit of the tomography response to one scan. Throws
/// NumericalError when the modulation amplitude is not significant and
/// DataError when the scan covers less than one period.
TomographyFit fit_tomography(const TomographyScan& scan);

/// Fold into (-0.25, 0.25], the range of shifts a tomography fit can see.
double wrap_half_period(double x) noexcept;

/// Consecutive offset differences, folded by wrap_half_period.
std::vector<double> diff_series(std::span<const TomographyFit> fits);
std::vector<double> diff_series(std::span<const TomographyScan> scans);

/// Entries whose aliased magnitude exceeds `threshold`. Entry k of `dq` is
/// reported with index k + 1 (the scan after the jump) when `times` is
/// empty, else with times[k + 1].
std::vector<JumpEvent> detect_jumps_threshold(std::span<const double> dq, double threshold = 0.15,
                                              const std::string& qubit = {},
                                              std::span<const double> times = {});

struct StepOptions {
    std::size_t average = 100;
    std::size_t kernel = 200;
    double threshold_sigma = 5.0;
    //! Post-jump samples averaged for the magnitude; 0 means up to the next
    //! jump or reset
    std::size_t level_samples = 0;
};

/// Step detection in single-shot charge monitoring. Detection is confined to
/// the segments between bias resets; the peak threshold is a multiple of
/// the robust spread of the step-filter output over the whole trace.
std::vector<JumpEvent> detect_steps_singleshot(const OffsetChargeSeries& series, const StepOptions& options = {},
                                               const std::string& qubit = {});

/// |offset| in [0, 0.25] from a mean P1 level at the given bias point.
double offset_from_level(double level, double d, double nu) noexcept;

}  // namespace qpgamma
