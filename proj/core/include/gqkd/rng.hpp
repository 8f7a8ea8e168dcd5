#pragma once

#include <array>
#include <cstdint>

namespace gqkd {

/// Philox 4x32-10 counter-based generator (Salmon et al. style). Streams are
/// addressed, not advanced: every draw is keyed by (seed, domain, index,
/// draw counter), so results cannot depend on scheduling or worker count.
inline constexpr const char* kRngAlgorithm = "philox4x32-10";

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
        counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

/// One logical draw stream: (seed, domain, index) fixed, draw counter
/// advancing. Each Philox block yields two 64-bit words; they are consumed
/// in order.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint32_t domain, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          base_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                0, domain} {}

    std::uint64_t next_u64() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        auto ctr = base_;
        ctr[2] = draw_++;
        const auto out = philox4x32_10(ctr, key_);
        cached_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        have_cached_ = true;
        return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    }

    /// Uniform on (0,1), never exactly 0 or 1; safe under log().
    double next_unit() {
        // 53 significant bits, offset to keep the value strictly inside (0,1).
        return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard Box-Muller transform, one deviate per call.
    double next_normal(double mean, double sigma);

    /// Inversion by product of uniforms; intended for small means. Means
    /// above 30 fall back to a rounded normal approximation.
    std::uint64_t next_poisson(double mean);

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> base_;
    std::uint32_t draw_ = 0;
    std::uint64_t cached_ = 0;
    bool have_cached_ = false;
};

}  // namespace gqkd
