#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "gqkd/model.hpp"

namespace gqkd {

/// The three-term error budget and its sum.
struct QberBreakdown {
    double opt = 0.0;    // analyzer extinction, distance-independent
    double det = 0.0;    // dark counts vs. signal
    double isi = 0.0;    // intersymbol interference
    double total = 0.0;  // opt + det + isi, stored as the exact sum
    bool degenerate = false;  // zero-rate operating point; terms reported as 0
};

struct SecrecyReport {
    double qber = 0.0;
    double secrecy_efficiency = 0.0;
    double raw_rate_hz = 0.0;      // dead-time-corrected conclusive click rate
    double net_bit_rate_hz = 0.0;  // max(0, SE) * raw_rate
    bool secure = false;
};

/// eps/(1+eps) with eps = 10^(-extinction/10).
double qber_opt(double extinction_db);

/// (d/2)/(s+d): darks split evenly between detectors, half of the accepted
/// ones land on the wrong analyzer. Both rates zero -> 0 (degenerate).
double qber_det(double signal_rate_hz, double accepted_dark_rate_hz);

/// Total accepted dark rate over both detectors given the window duty cycle.
double accepted_dark_rate(const SystemConfig& config);

QberBreakdown total_qber(const SystemConfig& config);

/// Distillation efficiency of secret key as a function of the error rate
/// and the assumed Alice-Eve information; the Q log2 Q term is 0 at Q = 0.
double secrecy_efficiency(double q, double i_ae);

/// Smallest positive root of secrecy_efficiency(Q, i_ae) on [1e-6, 0.5],
/// by bisection to 1e-6 absolute. Throws std::domain_error when the
/// bracket has no sign change.
double security_threshold(double i_ae);

double net_bit_rate(double se, double raw_rate_hz);

SecrecyReport secrecy_report(const SystemConfig& config);

struct SweepRow {
    double distance_km = 0.0;
    QberBreakdown qber;
    SecrecyReport report;
};

std::vector<SweepRow> sweep(const SystemConfig& config, std::span<const double> distances_km);

struct SecureDistance {
    double km = 0.0;
    bool beyond_horizon = false;  // never crosses the threshold within 1000 km
};

/// Distance at which the total QBER crosses security_threshold(i_ae),
/// bisected to 0.01 km. Requires a secure operating point at 0 km.
SecureDistance secure_distance(const SystemConfig& config);

struct Observation {
    enum class Kind { qber, raw_rate };
    double distance_km = 0.0;
    Kind kind = Kind::qber;
    double value = 0.0;
};

struct CalibrationResult {
    SystemConfig config;
    double residual_sum_sq = 0.0;     // sum of squared relative residuals
    std::vector<double> residuals;    // relative, one per observation
    int sweeps = 0;
};

class CalibrationError : public std::runtime_error {
  public:
    CalibrationError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

  private:
    double best_residual_;
};

/// Fit coupling loss [0,10] dB, per-channel dark rate (0,10] Hz and
/// extinction [15,30] dB to the observations by full-grid coordinate
/// descent at 0.1 dB / 0.1 Hz resolution. Deterministic; a coordinate only
/// moves on strict improvement. Throws CalibrationError when the best
/// residual exceeds the feasibility cap.
CalibrationResult calibrate(const SystemConfig& config,
                            std::span<const Observation> observations);

}  // namespace gqkd
