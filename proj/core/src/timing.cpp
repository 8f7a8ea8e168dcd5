#include "gqkd/timing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "gqkd/analysis.hpp"
#include "gqkd/rng.hpp"

namespace gqkd {

TimingResponse response_for(const SystemConfig& config, const DetectorModel& detector) {
    const double period = config.clock.period_ps();
    return {combined_sigma(config.source, detector), 0.5 * period, period};
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double window_capture(const TimingResponse& response, double window_offset_ps,
                      double window_width_ps) {
    if (window_width_ps <= 0) return 0.0;
    if (response.sigma_ps == 0) {
        return (response.center_ps >= window_offset_ps &&
                response.center_ps <= window_offset_ps + window_width_ps)
                   ? 1.0
                   : 0.0;
    }
    const double lo = (window_offset_ps - response.center_ps) / response.sigma_ps;
    const double hi = (window_offset_ps + window_width_ps - response.center_ps) / response.sigma_ps;
    return normal_cdf(hi) - normal_cdf(lo);
}

double isi_leak_fraction(const TimingResponse& response) {
    if (response.sigma_ps == 0) return 0.0;
    return normal_cdf(-response.center_ps / response.sigma_ps) +
           normal_cdf(-(response.period_ps - response.center_ps) / response.sigma_ps);
}

double adjacent_window_leak(const TimingResponse& response, double window_offset_ps,
                            double window_width_ps) {
    if (response.sigma_ps == 0 || window_width_ps <= 0) return 0.0;
    double leak = 0.0;
    for (int m = 1; m <= 64; ++m) {
        double shell = 0.0;
        for (const int sign : {-1, 1}) {
            const double base = sign * m * response.period_ps + window_offset_ps;
            shell += window_capture(response, base, window_width_ps);
        }
        leak += shell;
        if (shell < 1e-16) break;
    }
    return leak;
}

double qber_int(double leak_fraction) {
    return 0.5 * leak_fraction;
}

Histogram synth_histogram(const TimingResponse& response, double signal_rate_hz,
                          double dark_rate_total_hz, const ClockConfig& clock,
                          double duration_s, double bin_width_ps, std::uint64_t seed) {
    if (duration_s <= 0) throw std::invalid_argument("synth_histogram: duration must be > 0");
    if (signal_rate_hz < 0 || dark_rate_total_hz < 0)
        throw std::invalid_argument("synth_histogram: rates must be >= 0");
    const double period = clock.period_ps();
    if (bin_width_ps <= 0 || bin_width_ps > period)
        throw std::invalid_argument("synth_histogram: bad bin width");
    const auto bins = static_cast<std::size_t>(std::llround(period / bin_width_ps));
    if (std::abs(bins * bin_width_ps - period) > bin_width_ps)
        throw std::invalid_argument("synth_histogram: bin width must divide the period");

    Histogram h;
    h.bin_width_ps = bin_width_ps;
    h.counts.resize(bins);

    const double dark_per_bin = dark_rate_total_hz * duration_s / static_cast<double>(bins);
    constexpr std::uint32_t kHistogramDomain = 0x80000000u;
    for (std::size_t i = 0; i < bins; ++i) {
        const double lo = i * bin_width_ps;
        const double hi = lo + bin_width_ps;
        // Mass folded modulo the period: clicks that walk past an edge
        // re-enter the histogram one period over.
        double mass = 0.0;
        if (response.sigma_ps == 0) {
            mass = (response.center_ps >= lo && response.center_ps < hi) ? 1.0 : 0.0;
        } else {
            for (int m = -8; m <= 8; ++m) {
                const double shift = m * period;
                mass += normal_cdf((hi + shift - response.center_ps) / response.sigma_ps) -
                        normal_cdf((lo + shift - response.center_ps) / response.sigma_ps);
            }
        }
        const double expected = signal_rate_hz * duration_s * mass + dark_per_bin;
        RngStream stream(seed, kHistogramDomain, i);
        h.counts[i] = stream.next_poisson(expected);
    }
    return h;
}

namespace {

struct WindowScore {
    double nbr = 0.0;
    double qber = 0.0;
    double rate = 0.0;
};

// Objective model: accepted signal against accepted darks. The window
// trades capture for dark rejection; the intersymbol spill-over is orders
// below this trade and is left to the full analysis, which keeps the
// dark-free optimum at the exact full-period window.
WindowScore score_window(const TimingResponse& response, double s0, double d0, double offset,
                         double width, const WindowOptOptions& opt) {
    const double signal = s0 * window_capture(response, offset, width);
    const double darks = d0 * width / response.period_ps;
    const double rate = signal + darks;
    WindowScore sc;
    sc.rate = rate;
    if (rate <= 0) {
        sc.qber = 0.0;
        sc.nbr = 0.0;
        return sc;
    }
    sc.qber = opt.qber_floor + 0.5 * darks / rate;
    const double se = sc.qber < 1.0 ? secrecy_efficiency(sc.qber, opt.i_ae) : -1.0;
    sc.nbr = std::max(0.0, se) * rate;
    return sc;
}

}  // namespace

WindowChoice optimize_window(const TimingResponse& response, double signal_rate_hz,
                             double dark_rate_total_hz, const ClockConfig& clock,
                             WindowObjective objective, const WindowOptOptions& options) {
    if (signal_rate_hz < 0 || dark_rate_total_hz < 0)
        throw std::invalid_argument("optimize_window: rates must be >= 0");
    const double period = clock.period_ps();

    if (signal_rate_hz == 0) return {0.0, 0.0, 0.0, true};

    const double step = options.step_ps;

    WindowChoice best{0.0, 0.0, 0.0, false};
    WindowScore best_score;
    bool have_best = false;

    const auto consider = [&](double offset, double width) {
        const WindowScore sc =
            score_window(response, signal_rate_hz, dark_rate_total_hz, offset, width, options);
        const bool improves = !have_best || (objective == WindowObjective::max_nbr
                                                 ? sc.nbr > best_score.nbr
                                                 : sc.qber < best_score.qber);
        if (improves) {
            have_best = true;
            best_score = sc;
            best.offset_ps = offset;
            best.width_ps = width;
        }
    };

    // Narrow candidates first and strict improvement only, so exact ties
    // keep the narrower window and the smaller offset.
    for (double width = step; width < period; width += step)
        for (double offset = 0.0; offset <= period - width; offset += step)
            consider(offset, width);
    consider(0.0, period);  // exact full-period (ungated) candidate

    best.objective_value =
        objective == WindowObjective::max_nbr ? best_score.nbr : best_score.qber;

    if (objective == WindowObjective::max_nbr && best_score.nbr == 0.0) {
        // No window is secure at this operating point; fall back to the
        // least-bad error rate and say so.
        WindowChoice fallback =
            optimize_window(response, signal_rate_hz, dark_rate_total_hz, clock,
                            WindowObjective::min_qber, options);
        fallback.degenerate = true;
        return fallback;
    }
    return best;
}

}  // namespace gqkd
