#include "gqkd/protocol.hpp"

#include <cmath>
#include <numbers>

namespace gqkd {

B92State make_b92_state(int bit, const ReceiverModel& receiver) {
    return {bit, bit == 0 ? 0.0 : receiver.state_separation_deg};
}

SiftRecord make_sift_record(int alice_bit, int bob_detector) {
    SiftRecord r;
    r.alice_bit = alice_bit;
    r.bob_detector = bob_detector;
    r.conclusive = bob_detector == 0 || bob_detector == 1;
    if (r.conclusive) {
        const int inferred = bob_detector == 0 ? 1 : 0;
        r.error = inferred != alice_bit;
    }
    return r;
}

double conclusive_probability(double state_separation_deg) {
    const double s = std::sin(state_separation_deg * std::numbers::pi / 180.0);
    return 0.5 * s * s;
}

ClickProbabilities click_probabilities(const B92State& sent, const ReceiverModel& receiver,
                                       double arrival_prob, double detector_eff) {
    const double conclusive =
        arrival_prob * detector_eff * conclusive_probability(receiver.state_separation_deg);
    const double eps = std::pow(10.0, -receiver.extinction_db / 10.0);
    const double error = conclusive * eps;

    ClickProbabilities p;
    if (sent.bit == 1) {
        p.p_click0 = conclusive;  // detector 0 is conclusive for bit 1
        p.p_error1 = error;
    } else {
        p.p_click1 = conclusive;
        p.p_error0 = error;
    }
    return p;
}

SiftSummary sift(std::span<const SiftRecord> records) {
    SiftSummary s;
    for (const SiftRecord& r : records) {
        if (!r.conclusive || r.bob_detector < 0) continue;
        ++s.key_bits;
        const int inferred = r.bob_detector == 0 ? 1 : 0;
        if (inferred != r.alice_bit) ++s.error_bits;
    }
    return s;
}

}  // namespace gqkd
