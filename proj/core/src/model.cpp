#include "gqkd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gqkd/protocol.hpp"
#include "gqkd/timing.hpp"

namespace gqkd {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config invariant violated: " + what);
}

}  // namespace

void SystemConfig::validate() const {
    require(clock.frequency_hz > 0, "clock_hz > 0");
    require(source.mean_photon_number >= 0, "mu >= 0");
    require(source.pulse_fwhm_ps >= 0, "pulse_fwhm_ps >= 0");
    require(channel.loss_db_per_km >= 0, "loss_db_per_km >= 0");
    require(channel.length_km >= 0, "distance_km >= 0");
    require(channel.extra_loss_db >= 0, "extra_loss_db >= 0");
    require(receiver.state_separation_deg > 0 && receiver.state_separation_deg < 90,
            "angle_deg in (0, 90)");
    require(receiver.extinction_db >= 0, "extinction_db >= 0");
    require(receiver.coupling_loss_db >= 0, "coupling_loss_db >= 0");

    const double period = clock.period_ps();
    const double slack = 1e-9 * period;  // fp slack for width == period
    require(receiver.window_width_ps >= 0 && receiver.window_width_ps <= period + slack,
            "window_width_ps in [0, period]");
    require(receiver.window_offset_ps >= 0 &&
                receiver.window_offset_ps <= period - receiver.window_width_ps + slack,
            "window_offset_ps in [0, period - width]");

    for (const DetectorModel* det : {&detector0, &detector1}) {
        require(det->efficiency >= 0 && det->efficiency <= 1, "efficiency in [0,1]");
        require(det->dark_rate_hz >= 0, "dark_hz >= 0");
        require(det->jitter_fwhm_ps >= 0, "jitter_fwhm_ps >= 0");
        require(det->dead_time_ps >= 0, "dead_ns >= 0");
    }
    require(i_ae >= 0 && i_ae <= 1, "i_ae in [0,1]");
}

SystemConfig sspd_3g3() {
    SystemConfig c;
    c.clock.frequency_hz = 3.3e9;
    c.source = {0.1, 50.0, 850.0};
    c.channel = {2.2, 0.0, 0.0};
    c.receiver = {45.0, 21.0, 0.0, 0.0, c.clock.period_ps()};
    c.detector0 = {0.05, 10.0, 68.0, 10'000.0};
    c.detector1 = c.detector0;
    c.i_ae = 0.29;
    return c;
}

SystemConfig sispad_2g() {
    SystemConfig c;
    c.clock.frequency_hz = 2.0e9;
    // The 400 ps jitter figure dominates the timing response; the source
    // pulse width is folded into it rather than double-counted.
    c.source = {0.1, 0.0, 850.0};
    c.channel = {2.2, 0.0, 0.0};
    c.receiver = {45.0, 21.0, 0.0, 0.0, c.clock.period_ps()};
    c.detector0 = {0.40, 500.0, 400.0, 50'000.0};
    c.detector1 = c.detector0;
    c.i_ae = 0.29;
    return c;
}

std::optional<SystemConfig> preset_by_name(std::string_view name) {
    if (name == "SSPD_3G3") return sspd_3g3();
    if (name == "SISPAD_2G") return sispad_2g();
    return std::nullopt;
}

double transmittance(const FibreChannel& channel) {
    const double loss_db = channel.loss_db_per_km * channel.length_km + channel.extra_loss_db;
    return std::pow(10.0, -loss_db / 10.0);
}

double fwhm_to_sigma(double fwhm) {
    static const double k = 2.0 * std::sqrt(2.0 * std::log(2.0));
    return fwhm / k;
}

double combined_sigma(const SourceModel& source, const DetectorModel& detector) {
    return std::hypot(fwhm_to_sigma(source.pulse_fwhm_ps),
                      fwhm_to_sigma(detector.jitter_fwhm_ps));
}

double raw_click_rate(const SystemConfig& config) {
    const double mean_eff = 0.5 * (config.detector0.efficiency + config.detector1.efficiency);
    const double coupling = std::pow(10.0, -config.receiver.coupling_loss_db / 10.0);
    // Capture averaged over the two detectors' timing responses; the bit,
    // and therefore the conclusive detector, is uniform.
    const double capture =
        0.5 * (window_capture(response_for(config, config.detector0),
                              config.receiver.window_offset_ps, config.receiver.window_width_ps) +
               window_capture(response_for(config, config.detector1),
                              config.receiver.window_offset_ps, config.receiver.window_width_ps));
    return config.clock.frequency_hz * config.source.mean_photon_number *
           transmittance(config.channel) * coupling *
           conclusive_probability(config.receiver.state_separation_deg) * mean_eff * capture;
}

double dead_time_throttle(double true_rate_hz, double dead_time_ps) {
    if (true_rate_hz <= 0) return 0.0;
    return true_rate_hz / (1.0 + true_rate_hz * dead_time_ps * 1e-12);
}

}  // namespace gqkd
