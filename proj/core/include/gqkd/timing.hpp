#pragma once

#include <cstdint>
#include <vector>

#include "gqkd/model.hpp"

namespace gqkd {

/// Arrival-time density of signal clicks within one clock period:
/// Normal(center, sigma) plus whatever mass spills past the period edges.
struct TimingResponse {
    double sigma_ps = 0.0;
    double center_ps = 0.0;
    double period_ps = 0.0;
};

TimingResponse response_for(const SystemConfig& config, const DetectorModel& detector);

struct Histogram {
    double bin_width_ps = 0.0;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
};

/// Standard normal CDF.
double normal_cdf(double z);

/// Probability that a click lands inside [offset, offset+width] of its own
/// period. sigma == 0 is a point mass at the center.
double window_capture(const TimingResponse& response, double window_offset_ps,
                      double window_width_ps);

/// Mass of the response outside [0, period]: the fraction of clicks that
/// time-walk into a neighboring clock period.
double isi_leak_fraction(const TimingResponse& response);

/// Mass landing inside the *same* window pattern of any neighboring period,
/// i.e. the fraction of clicks a gated receiver accepts against the wrong
/// clock cycle. Equals isi_leak_fraction for an ungated receiver.
double adjacent_window_leak(const TimingResponse& response, double window_offset_ps,
                            double window_width_ps);

/// Intersymbol-interference error fraction: a leaked count lands in a slot
/// whose bit is uncorrelated, so half of them are errors.
double qber_int(double leak_fraction);

/// Synthesize a TCSPC histogram over [0, period). Expected bin content is
/// signal * duration * (response mass in bin, folded modulo the period)
/// plus a uniform dark floor; realized counts are Poisson, reproducible
/// bit-exactly for a fixed seed.
Histogram synth_histogram(const TimingResponse& response, double signal_rate_hz,
                          double dark_rate_total_hz, const ClockConfig& clock,
                          double duration_s, double bin_width_ps, std::uint64_t seed);

enum class WindowObjective { max_nbr, min_qber };

struct WindowOptOptions {
    double qber_floor = 0.0;  // distance-independent error fraction (analyzer contrast)
    double i_ae = 0.29;
    double step_ps = 1.0;
};

struct WindowChoice {
    double offset_ps = 0.0;
    double width_ps = 0.0;
    double objective_value = 0.0;
    bool degenerate = false;  // no signal, or no window achieves a positive NBR
};

/// Exhaustive grid search over (offset, width) in step_ps increments, plus
/// the exact full-period window. Ties break toward the narrower window,
/// then the smaller offset.
WindowChoice optimize_window(const TimingResponse& response, double signal_rate_hz,
                             double dark_rate_total_hz, const ClockConfig& clock,
                             WindowObjective objective,
                             const WindowOptOptions& options = {});

}  // namespace gqkd
