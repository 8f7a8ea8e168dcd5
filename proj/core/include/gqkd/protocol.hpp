#pragma once

#include <cstdint>
#include <span>

#include "gqkd/model.hpp"

namespace gqkd {

/// One of Alice's two non-orthogonal polarization states.
/// State 0 sits at 0 deg, state 1 at the receiver's separation angle.
struct B92State {
    int bit = 0;
    double polarization_angle_deg = 0.0;
};

B92State make_b92_state(int bit, const ReceiverModel& receiver);

/// Per-clock-period outcome probabilities for one emitted state.
/// Detector 0 projects onto the complement of state 0, so a click there is
/// conclusive for bit 1; detector 1 is conclusive for bit 0.
struct ClickProbabilities {
    double p_click0 = 0.0;  // conclusive for bit 1
    double p_click1 = 0.0;  // conclusive for bit 0
    double p_error0 = 0.0;  // wrong-state leakage into detector 0
    double p_error1 = 0.0;  // wrong-state leakage into detector 1
};

struct SiftRecord {
    int alice_bit = 0;
    int bob_detector = -1;  // 0, 1, or -1 for no detection
    bool conclusive = false;
    bool error = false;
};

SiftRecord make_sift_record(int alice_bit, int bob_detector);

struct SiftSummary {
    std::uint64_t key_bits = 0;
    std::uint64_t error_bits = 0;
};

/// Probability that a photon arriving at Bob produces a conclusive click:
/// 0.5 routing * sin^2(separation).
double conclusive_probability(double state_separation_deg);

ClickProbabilities click_probabilities(const B92State& sent,
                                       const ReceiverModel& receiver,
                                       double arrival_prob,
                                       double detector_eff);

SiftSummary sift(std::span<const SiftRecord> records);

}  // namespace gqkd
