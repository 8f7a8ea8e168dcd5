#include "gqkd/rng.hpp"

#include <cmath>
#include <numbers>

namespace gqkd {

double RngStream::next_normal(double mean, double sigma) {
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sigma * z;
}

std::uint64_t RngStream::next_poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
        const double v = std::round(next_normal(mean, std::sqrt(mean)));
        return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
    }
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double product = 1.0;
    do {
        product *= next_unit();
        ++k;
    } while (product > limit);
    return k - 1;
}

}  // namespace gqkd
