#pragma once

#include <optional>
#include <string_view>

namespace gqkd {

/// Clock of the pulsed source / gating electronics. The period is derived
/// from the frequency so the two can never drift apart.
struct ClockConfig {
    double frequency_hz = 3.3e9;

    double period_ps() const { return 1e12 / frequency_hz; }
};

struct SourceModel {
    double mean_photon_number = 0.1;  // mu, per attenuated pulse
    double pulse_fwhm_ps = 50.0;
    double wavelength_nm = 850.0;
};

struct FibreChannel {
    double loss_db_per_km = 2.2;
    double length_km = 0.0;
    double extra_loss_db = 0.0;  // lumped connectors / programmable attenuator
};

struct DetectorModel {
    double efficiency = 0.05;       // [0,1]
    double dark_rate_hz = 10.0;
    double jitter_fwhm_ps = 68.0;
    double dead_time_ps = 10000.0;  // non-paralyzable recovery
};

/// Bob's analyzer pair. Window geometry selects the accepted sub-interval
/// of each clock period; width == period means ungated.
struct ReceiverModel {
    double state_separation_deg = 45.0;  // angle between Alice's two states
    double extinction_db = 21.0;         // polarization extinction of the analyzers
    double coupling_loss_db = 0.0;
    double window_offset_ps = 0.0;
    double window_width_ps = 0.0;  // 0 in a default-constructed receiver is
                                   // resolved to the clock period by presets/config
};

struct SystemConfig {
    ClockConfig clock;
    SourceModel source;
    FibreChannel channel;
    ReceiverModel receiver;
    DetectorModel detector0;
    DetectorModel detector1;
    double i_ae = 0.29;  // max Alice-Eve mutual information priced by privacy amplification

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

// Named presets for the two detector chains.
SystemConfig sspd_3g3();
SystemConfig sispad_2g();
std::optional<SystemConfig> preset_by_name(std::string_view name);

/// Channel power transmittance, 10^-(loss*L + extra)/10. Always in (0,1].
double transmittance(const FibreChannel& channel);

/// Gaussian FWHM -> standard deviation.
double fwhm_to_sigma(double fwhm);

/// Quadrature sum of source and detector jitter, as sigma in ps.
double combined_sigma(const SourceModel& source, const DetectorModel& detector);

/// Sifted-conclusive click rate over both detectors, before dead-time
/// correction: clock * mu * T(channel) * coupling * conclusive(angle)
/// * mean efficiency * window capture.
double raw_click_rate(const SystemConfig& config);

/// Non-paralyzable dead-time correction: r / (1 + r * tau).
double dead_time_throttle(double true_rate_hz, double dead_time_ps);

}  // namespace gqkd
