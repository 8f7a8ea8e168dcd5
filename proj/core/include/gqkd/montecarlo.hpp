#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gqkd/model.hpp"

namespace gqkd {

/// Event ledger of one simulation. Error counts are disjoint by cause and
/// sum to errors_total by construction.
struct TallyCounts {
    std::uint64_t cycles = 0;
    std::uint64_t sifted = 0;
    std::uint64_t errors_total = 0;
    std::uint64_t errors_optical = 0;
    std::uint64_t errors_dark = 0;
    std::uint64_t errors_isi = 0;
    std::uint64_t darks_accepted = 0;
    std::uint64_t leaked = 0;
    std::uint64_t deadtime_losses = 0;
    std::uint64_t multiclick_discards = 0;  // both-detector windows, diagnostics only

    friend bool operator==(const TallyCounts&, const TallyCounts&) = default;
};

TallyCounts merge(const TallyCounts& a, const TallyCounts& b);

struct RunSpec {
    SystemConfig config;
    std::uint64_t cycles = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t block_size = 65'536;  // cycles per independent substream
};

/// Event-level simulation of the full link. Tallies are bit-exact for a
/// fixed (seed, block_size) and independent of the worker count.
TallyCounts run(const RunSpec& spec, unsigned workers = 1);

/// Simulate a contiguous range of blocks; run() is the merge over all
/// blocks. Exposed so block-merge properties can be checked directly.
TallyCounts run_blocks(const RunSpec& spec, std::uint64_t first_block,
                       std::uint64_t block_count);

struct Estimate {
    double qber = 0.0;
    double qber_stderr = 0.0;
    double rate_hz = 0.0;  // sifted / elapsed time
    double frac_optical = 0.0;
    double frac_dark = 0.0;
    double frac_isi = 0.0;
    bool degenerate = false;  // nothing sifted
};

Estimate estimate(const TallyCounts& tally, const ClockConfig& clock);

/// One comparison line of the cross-check report. For small expected
/// counts the flag comes from an exact Poisson tail test at the two-sided
/// 3-sigma-equivalent level; z is reported either way.
struct CheckEntry {
    std::string name;
    double observed = 0.0;
    double predicted = 0.0;
    double sigma = 0.0;  // combined standard error
    double z = 0.0;
    bool flagged = false;
};

struct CrossCheckReport {
    std::vector<CheckEntry> entries;
    bool ok = true;
};

/// Compare a tally against the closed forms: total QBER against the
/// three-term budget, per-cause error fractions against the exact
/// event-rate composition, and the sifted rate against the dead-time
/// corrected prediction.
CrossCheckReport cross_check(const SystemConfig& config, const TallyCounts& tally);

}  // namespace gqkd
