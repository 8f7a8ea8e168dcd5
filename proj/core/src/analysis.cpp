#include "gqkd/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "gqkd/timing.hpp"

namespace gqkd {

double qber_opt(double extinction_db) {
    const double eps = std::pow(10.0, -extinction_db / 10.0);
    return eps / (1.0 + eps);
}

double qber_det(double signal_rate_hz, double accepted_dark_rate_hz) {
    if (signal_rate_hz < 0 || accepted_dark_rate_hz < 0)
        throw std::invalid_argument("qber_det: rates must be >= 0");
    const double sum = signal_rate_hz + accepted_dark_rate_hz;
    if (sum == 0) return 0.0;  // degenerate point, flagged by the caller
    return 0.5 * accepted_dark_rate_hz / sum;
}

double accepted_dark_rate(const SystemConfig& config) {
    const double duty = config.receiver.window_width_ps / config.clock.period_ps();
    return (config.detector0.dark_rate_hz + config.detector1.dark_rate_hz) * duty;
}

QberBreakdown total_qber(const SystemConfig& config) {
    const double s = raw_click_rate(config);
    const double d = accepted_dark_rate(config);

    QberBreakdown b;
    b.opt = qber_opt(config.receiver.extinction_db);
    b.det = qber_det(s, d);
    const double leak = 0.5 * (isi_leak_fraction(response_for(config, config.detector0)) +
                               isi_leak_fraction(response_for(config, config.detector1)));
    b.isi = qber_int(leak);
    b.total = b.opt + b.det + b.isi;
    b.degenerate = s <= 0;
    if (b.total > 1.0)
        throw std::domain_error("total_qber: error budget exceeds 1; configuration rejected");
    return b;
}

double secrecy_efficiency(double q, double i_ae) {
    if (q < 0 || q >= 1) throw std::domain_error("secrecy_efficiency: q must be in [0,1)");
    const double qlog = q > 0 ? q * std::log2(q) : 0.0;
    const double cost = 3.5 * q;
    const double eve = 1.0 - (1.0 - q) * std::log2(1.0 - q) - cost;
    return 1.0 + qlog - cost - i_ae * eve;
}

double security_threshold(double i_ae) {
    double lo = 1e-6;
    double hi = 0.5;
    double f_lo = secrecy_efficiency(lo, i_ae);
    double f_hi = secrecy_efficiency(hi, i_ae);
    if (!(f_lo > 0 && f_hi < 0))
        throw std::domain_error("security_threshold: no sign change on [1e-6, 0.5]");
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (secrecy_efficiency(mid, i_ae) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double net_bit_rate(double se, double raw_rate_hz) {
    if (raw_rate_hz < 0) throw std::invalid_argument("net_bit_rate: rate must be >= 0");
    return std::max(0.0, se) * raw_rate_hz;
}

namespace {

double throttled_raw_rate(const SystemConfig& config) {
    // Conclusive clicks split evenly across the pair; each detector's
    // recovery applies to its half.
    const double r = raw_click_rate(config);
    return dead_time_throttle(0.5 * r, config.detector0.dead_time_ps) +
           dead_time_throttle(0.5 * r, config.detector1.dead_time_ps);
}

}  // namespace

SecrecyReport secrecy_report(const SystemConfig& config) {
    const QberBreakdown b = total_qber(config);
    SecrecyReport r;
    r.qber = b.total;
    // q == 1 only at the all-dark corner; use the continuous limit there.
    r.secrecy_efficiency =
        b.total < 1.0 ? secrecy_efficiency(b.total, config.i_ae) : -2.5 * (1.0 - config.i_ae);
    r.raw_rate_hz = throttled_raw_rate(config);
    r.net_bit_rate_hz = net_bit_rate(r.secrecy_efficiency, r.raw_rate_hz);
    r.secure = r.secrecy_efficiency > 0;
    return r;
}

std::vector<SweepRow> sweep(const SystemConfig& config, std::span<const double> distances_km) {
    std::vector<SweepRow> rows;
    rows.reserve(distances_km.size());
    double previous = -1.0;
    for (const double d : distances_km) {
        if (d < 0) throw std::invalid_argument("sweep: distances must be >= 0");
        if (d < previous) throw std::invalid_argument("sweep: distances must be sorted");
        previous = d;
        SystemConfig at = config;
        at.channel.length_km = d;
        rows.push_back({d, total_qber(at), secrecy_report(at)});
    }
    return rows;
}

SecureDistance secure_distance(const SystemConfig& config) {
    const double threshold = security_threshold(config.i_ae);
    const auto excess = [&](double km) {
        SystemConfig at = config;
        at.channel.length_km = km;
        return total_qber(at).total - threshold;
    };
    if (excess(0.0) >= 0)
        throw std::domain_error("secure_distance: link is insecure at zero distance");
    if (excess(1000.0) < 0) return {1000.0, true};
    double lo = 0.0;
    double hi = 1000.0;
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0 ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), false};
}

namespace {

struct FitParams {
    double coupling_db;
    double dark_hz;
    double extinction_db;
};

SystemConfig with_params(const SystemConfig& base, const FitParams& p) {
    SystemConfig c = base;
    c.receiver.coupling_loss_db = p.coupling_db;
    c.receiver.extinction_db = p.extinction_db;
    c.detector0.dark_rate_hz = p.dark_hz;
    c.detector1.dark_rate_hz = p.dark_hz;
    return c;
}

double model_value(const SystemConfig& config, const Observation& obs) {
    SystemConfig at = config;
    at.channel.length_km = obs.distance_km;
    return obs.kind == Observation::Kind::qber ? total_qber(at).total : throttled_raw_rate(at);
}

double residual_sum(const SystemConfig& base, const FitParams& p,
                    std::span<const Observation> observations) {
    const SystemConfig c = with_params(base, p);
    double sum = 0.0;
    for (const Observation& obs : observations) {
        const double rel = (model_value(c, obs) - obs.value) / obs.value;
        sum += rel * rel;
    }
    return sum;
}

}  // namespace

CalibrationResult calibrate(const SystemConfig& config,
                            std::span<const Observation> observations) {
    if (observations.empty()) throw std::invalid_argument("calibrate: no observations");
    for (const Observation& obs : observations)
        if (obs.value <= 0)
            throw std::invalid_argument("calibrate: observed values must be > 0");

    FitParams current{config.receiver.coupling_loss_db, config.detector0.dark_rate_hz,
                      config.receiver.extinction_db};
    double best = residual_sum(config, current, observations);

    // Grids at the fixed fit resolution. Candidate lists include the
    // incoming value so an already-exact configuration stays put.
    std::vector<double> coupling_grid, dark_grid, extinction_grid;
    for (int i = 0; i <= 100; ++i) coupling_grid.push_back(i / 10.0);
    for (int i = 1; i <= 100; ++i) dark_grid.push_back(i / 10.0);
    for (int i = 0; i <= 150; ++i) extinction_grid.push_back(15.0 + i / 10.0);

    constexpr int kMaxSweeps = 64;
    int sweeps = 0;
    for (; sweeps < kMaxSweeps; ++sweeps) {
        bool moved = false;
        for (int coord = 0; coord < 3; ++coord) {
            const std::vector<double>& grid =
                coord == 0 ? coupling_grid : coord == 1 ? dark_grid : extinction_grid;
            double* slot = coord == 0   ? &current.coupling_db
                           : coord == 1 ? &current.dark_hz
                                        : &current.extinction_db;
            const double incoming = *slot;
            double chosen = incoming;
            for (const double g : grid) {
                *slot = g;
                const double r = residual_sum(config, current, observations);
                if (r < best * (1.0 - 1e-12) - 1e-300) {
                    best = r;
                    chosen = g;
                }
            }
            *slot = chosen;
            if (chosen != incoming) moved = true;
        }
        if (!moved) break;
    }

    constexpr double kFeasibleResidual = 0.01;  // RMS relative error of 10%
    if (best > kFeasibleResidual)
        throw CalibrationError("calibrate: no feasible parameters within bounds", best);

    CalibrationResult result;
    result.config = with_params(config, current);
    result.residual_sum_sq = best;
    result.sweeps = sweeps;
    for (const Observation& obs : observations)
        result.residuals.push_back((model_value(result.config, obs) - obs.value) / obs.value);
    return result;
}

}  // namespace gqkd
