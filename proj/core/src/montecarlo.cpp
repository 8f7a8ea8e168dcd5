#include "gqkd/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gqkd/analysis.hpp"
#include "gqkd/protocol.hpp"
#include "gqkd/rng.hpp"
#include "gqkd/timing.hpp"

namespace gqkd {

TallyCounts merge(const TallyCounts& a, const TallyCounts& b) {
    TallyCounts m;
    m.cycles = a.cycles + b.cycles;
    m.sifted = a.sifted + b.sifted;
    m.errors_total = a.errors_total + b.errors_total;
    m.errors_optical = a.errors_optical + b.errors_optical;
    m.errors_dark = a.errors_dark + b.errors_dark;
    m.errors_isi = a.errors_isi + b.errors_isi;
    m.darks_accepted = a.darks_accepted + b.darks_accepted;
    m.leaked = a.leaked + b.leaked;
    m.deadtime_losses = a.deadtime_losses + b.deadtime_losses;
    m.multiclick_discards = a.multiclick_discards + b.multiclick_discards;
    return m;
}

namespace {

enum class Cause : std::uint8_t { signal, dark };

struct Event {
    double t;              // block-local absolute time, ps
    std::uint32_t origin;  // emitting cycle within the block
    std::uint8_t detector;
    Cause cause;
};

// Everything derived from the config once per run.
struct LinkParams {
    double period_ps;
    double mu;
    double p_survive;       // channel transmittance x receiver coupling
    double conclusive;      // 0.5 sin^2(separation)
    double eps;             // analyzer leakage 10^(-extinction/10)
    double eff[2];
    double sigma[2];        // combined source+detector jitter, per detector
    double dead_ps[2];
    double center_ps;
    double window_lo;
    double window_hi;
    double dark_lo;         // dark simulation span: window +- 3 sigma guard
    double dark_span;
    double dark_mean[2];    // Poisson mean of darks per cycle per detector
};

LinkParams link_params(const SystemConfig& c) {
    LinkParams p{};
    p.period_ps = c.clock.period_ps();
    p.mu = c.source.mean_photon_number;
    p.p_survive = transmittance(c.channel) * std::pow(10.0, -c.receiver.coupling_loss_db / 10.0);
    p.conclusive = conclusive_probability(c.receiver.state_separation_deg);
    p.eps = std::pow(10.0, -c.receiver.extinction_db / 10.0);
    p.eff[0] = c.detector0.efficiency;
    p.eff[1] = c.detector1.efficiency;
    p.sigma[0] = combined_sigma(c.source, c.detector0);
    p.sigma[1] = combined_sigma(c.source, c.detector1);
    p.dead_ps[0] = c.detector0.dead_time_ps;
    p.dead_ps[1] = c.detector1.dead_time_ps;
    p.center_ps = 0.5 * p.period_ps;
    p.window_lo = c.receiver.window_offset_ps;
    p.window_hi = c.receiver.window_offset_ps + c.receiver.window_width_ps;
    const double guard = 3.0 * std::max(p.sigma[0], p.sigma[1]);
    p.dark_lo = std::max(0.0, p.window_lo - guard);
    const double dark_hi = std::min(p.period_ps, p.window_hi + guard);
    p.dark_span = std::max(0.0, dark_hi - p.dark_lo);
    p.dark_mean[0] = c.detector0.dark_rate_hz * p.dark_span * 1e-12;
    p.dark_mean[1] = c.detector1.dark_rate_hz * p.dark_span * 1e-12;
    return p;
}

TallyCounts simulate_block(const LinkParams& p, std::uint64_t seed, std::uint32_t block,
                           std::uint32_t n_cycles) {
    std::vector<std::uint8_t> alice_bits(n_cycles);
    std::vector<Event> events;
    events.reserve(256);

    for (std::uint32_t i = 0; i < n_cycles; ++i) {
        RngStream stream(seed, block, i);
        const int bit = static_cast<int>(stream.next_u64() & 1u);
        alice_bits[i] = static_cast<std::uint8_t>(bit);
        const double epoch = i * p.period_ps;

        const std::uint64_t photons = stream.next_poisson(p.mu);
        for (std::uint64_t k = 0; k < photons; ++k) {
            if (stream.next_unit() >= p.p_survive) continue;
            // Detector 0 projects onto the complement of state 0 and is
            // conclusive for bit 1; leakage reaches the opposite analyzer.
            const int correct = bit == 1 ? 0 : 1;
            const int wrong = 1 - correct;
            const double p_correct = p.conclusive * p.eff[correct];
            const double p_wrong = p.conclusive * p.eps * p.eff[wrong];
            const double u = stream.next_unit();
            int det;
            if (u < p_correct)
                det = correct;
            else if (u < p_correct + p_wrong)
                det = wrong;
            else
                continue;
            const double t = epoch + stream.next_normal(p.center_ps, p.sigma[det]);
            events.push_back({t, i, static_cast<std::uint8_t>(det), Cause::signal});
        }

        for (int det = 0; det < 2; ++det) {
            const std::uint64_t darks = stream.next_poisson(p.dark_mean[det]);
            for (std::uint64_t k = 0; k < darks; ++k) {
                const double t = epoch + p.dark_lo + stream.next_unit() * p.dark_span;
                events.push_back({t, i, static_cast<std::uint8_t>(det), Cause::dark});
            }
        }
    }

    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.detector != b.detector) return a.detector < b.detector;
        return a.origin < b.origin;
    });

    TallyCounts tally;
    tally.cycles = n_cycles;

    // Non-paralyzable recovery: a registered click blinds its detector,
    // suppressed clicks do not extend the dead period. Out-of-window
    // clicks still occupy the detector, so this pass runs first.
    struct Accepted {
        std::int64_t cycle;
        double t;
        std::uint32_t origin;
        std::uint8_t detector;
        Cause cause;
    };
    std::vector<Accepted> accepted;
    accepted.reserve(events.size());

    double last_registered[2] = {-std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
    for (const Event& e : events) {
        if (e.t - last_registered[e.detector] < p.dead_ps[e.detector]) {
            ++tally.deadtime_losses;
            continue;
        }
        last_registered[e.detector] = e.t;

        const auto cycle = static_cast<std::int64_t>(std::floor(e.t / p.period_ps));
        if (cycle < 0 || cycle >= static_cast<std::int64_t>(n_cycles)) continue;
        const double rel = e.t - cycle * p.period_ps;
        if (rel < p.window_lo || rel > p.window_hi) continue;
        accepted.push_back({cycle, e.t, e.origin, e.detector, e.cause});
    }

    std::sort(accepted.begin(), accepted.end(), [](const Accepted& a, const Accepted& b) {
        if (a.cycle != b.cycle) return a.cycle < b.cycle;
        return a.t < b.t;
    });

    for (std::size_t i = 0; i < accepted.size();) {
        std::size_t j = i;
        bool det_seen[2] = {false, false};
        while (j < accepted.size() && accepted[j].cycle == accepted[i].cycle) {
            det_seen[accepted[j].detector] = true;
            ++j;
        }
        if (det_seen[0] && det_seen[1]) {
            // Both analyzers fired inside one window: ambiguous, discard.
            ++tally.multiclick_discards;
            i = j;
            continue;
        }
        const Accepted& first = accepted[i];
        ++tally.sifted;
        const int inferred = first.detector == 0 ? 1 : 0;
        const bool error = inferred != alice_bits[static_cast<std::size_t>(first.cycle)];
        if (first.cause == Cause::dark) {
            ++tally.darks_accepted;
            if (error) ++tally.errors_dark;
        } else if (first.origin != static_cast<std::uint32_t>(first.cycle)) {
            ++tally.leaked;
            if (error) ++tally.errors_isi;
        } else if (error) {
            ++tally.errors_optical;
        }
        i = j;
    }

    tally.errors_total = tally.errors_optical + tally.errors_dark + tally.errors_isi;
    return tally;
}

std::uint64_t block_count(const RunSpec& spec) {
    return (spec.cycles + spec.block_size - 1) / spec.block_size;
}

void check_spec(const RunSpec& spec) {
    spec.config.validate();
    if (spec.cycles < 1) throw std::invalid_argument("run: cycles must be >= 1");
    if (spec.block_size < 1) throw std::invalid_argument("run: block_size must be >= 1");
    const double load =
        static_cast<double>(spec.cycles) * std::max(1.0, spec.config.source.mean_photon_number);
    if (load > 4e18) throw std::invalid_argument("run: cycles x mu overflows the count fields");
    if (block_count(spec) > 0x7FFFFFFFull)
        throw std::invalid_argument("run: too many blocks; increase block_size");
}

}  // namespace

TallyCounts run_blocks(const RunSpec& spec, std::uint64_t first_block,
                       std::uint64_t n_blocks) {
    check_spec(spec);
    const LinkParams params = link_params(spec.config);
    const std::uint64_t total_blocks = block_count(spec);
    TallyCounts tally;
    for (std::uint64_t b = first_block; b < first_block + n_blocks && b < total_blocks; ++b) {
        const std::uint64_t begin = b * spec.block_size;
        const std::uint64_t end = std::min(begin + spec.block_size, spec.cycles);
        tally = merge(tally, simulate_block(params, spec.seed, static_cast<std::uint32_t>(b),
                                            static_cast<std::uint32_t>(end - begin)));
    }
    return tally;
}

TallyCounts run(const RunSpec& spec, unsigned workers) {
    check_spec(spec);
    const LinkParams params = link_params(spec.config);
    const std::uint64_t blocks = block_count(spec);
    if (workers <= 1 || blocks == 1) return run_blocks(spec, 0, blocks);

    std::vector<TallyCounts> partial(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            TallyCounts local;
            for (std::uint64_t b = w; b < blocks; b += workers) {
                const std::uint64_t begin = b * spec.block_size;
                const std::uint64_t end = std::min(begin + spec.block_size, spec.cycles);
                local = merge(local, simulate_block(params, spec.seed,
                                                    static_cast<std::uint32_t>(b),
                                                    static_cast<std::uint32_t>(end - begin)));
            }
            partial[w] = local;
        });
    }
    for (std::thread& t : pool) t.join();
    TallyCounts tally;
    for (const TallyCounts& part : partial) tally = merge(tally, part);
    return tally;
}

Estimate estimate(const TallyCounts& tally, const ClockConfig& clock) {
    Estimate e;
    if (tally.sifted == 0) {
        e.degenerate = true;
        return e;
    }
    const double n = static_cast<double>(tally.sifted);
    e.qber = static_cast<double>(tally.errors_total) / n;
    e.qber_stderr = std::sqrt(e.qber * (1.0 - e.qber) / n);
    e.rate_hz = n / static_cast<double>(tally.cycles) * clock.frequency_hz;
    e.frac_optical = static_cast<double>(tally.errors_optical) / n;
    e.frac_dark = static_cast<double>(tally.errors_dark) / n;
    e.frac_isi = static_cast<double>(tally.errors_isi) / n;
    return e;
}

namespace {

double poisson_cdf(double k, double lambda) {
    // Direct summation; only used for small lambda.
    double term = std::exp(-lambda);
    double sum = term;
    for (double i = 1; i <= k; ++i) {
        term *= lambda / i;
        sum += term;
    }
    return std::min(1.0, sum);
}

// Two-sided agreement test at the 3-sigma-equivalent level. Exact Poisson
// tails take over where the normal approximation has no business being.
bool count_disagrees(double observed, double expected, double sigma) {
    if (expected < 25.0) {
        constexpr double kTail = 1.349898e-3;  // one-sided 3-sigma mass
        const double p_low = poisson_cdf(observed, expected);
        const double p_high =
            observed == 0 ? 1.0 : 1.0 - poisson_cdf(observed - 1.0, expected);
        return std::min(p_low, p_high) < kTail;
    }
    return std::abs(observed - expected) > 3.0 * sigma;
}

CheckEntry make_entry(std::string name, double observed, double expected, double sigma) {
    CheckEntry entry;
    entry.name = std::move(name);
    entry.observed = observed;
    entry.predicted = expected;
    entry.sigma = sigma;
    entry.z = sigma > 0 ? (observed - expected) / sigma : 0.0;
    entry.flagged = count_disagrees(observed, expected, sigma);
    return entry;
}

}  // namespace

CrossCheckReport cross_check(const SystemConfig& config, const TallyCounts& tally) {
    const LinkParams p = link_params(config);
    const double f = config.clock.frequency_hz;
    const double cycles = static_cast<double>(tally.cycles);
    const double window_w = config.receiver.window_width_ps;

    // Exact event-rate composition mirroring the simulation geometry.
    // a[i]: correct-conclusive click rate on detector i (bits are uniform,
    // each detector serves one bit value).
    double a[2], cap[2], leak_in[2], dark_acc[2], r_phys[2];
    for (int i = 0; i < 2; ++i) {
        a[i] = 0.5 * f * p.mu * p.p_survive * p.conclusive * p.eff[i];
        const TimingResponse resp{p.sigma[i], p.center_ps, p.period_ps};
        cap[i] = window_capture(resp, config.receiver.window_offset_ps, window_w);
        leak_in[i] = adjacent_window_leak(resp, config.receiver.window_offset_ps, window_w);
        dark_acc[i] = (i == 0 ? config.detector0 : config.detector1).dark_rate_hz * window_w /
                      p.period_ps;
        const double dark_sim =
            (i == 0 ? config.detector0 : config.detector1).dark_rate_hz * p.dark_span /
            p.period_ps;
        r_phys[i] = a[i] * (1.0 + p.eps) + dark_sim;  // everything that blinds the detector
    }

    const double accepted_correct = a[0] * cap[0] + a[1] * cap[1];
    const double accepted_wrong = p.eps * accepted_correct;
    const double accepted_leak = (1.0 + p.eps) * (a[0] * leak_in[0] + a[1] * leak_in[1]);
    const double accepted_dark = dark_acc[0] + dark_acc[1];
    const double rate_accepted = accepted_correct + accepted_wrong + accepted_leak + accepted_dark;

    CrossCheckReport report;
    if (rate_accepted <= 0 || tally.sifted == 0) {
        report.entries.push_back(
            make_entry("sifted_count", static_cast<double>(tally.sifted),
                       rate_accepted / f * cycles, std::sqrt(rate_accepted / f * cycles)));
        report.ok = !report.entries.back().flagged;
        return report;
    }

    const double p_opt = accepted_wrong / rate_accepted;
    const double p_isi = 0.5 * accepted_leak / rate_accepted;
    const double p_dark = 0.5 * accepted_dark / rate_accepted;
    const double n = static_cast<double>(tally.sifted);

    const QberBreakdown budget = total_qber(config);
    const auto fraction_entry = [&](std::string name, std::uint64_t count, double prob) {
        const double expected = n * prob;
        const double sigma = std::sqrt(std::max(1e-300, n * prob * (1.0 - prob)));
        return make_entry(std::move(name), static_cast<double>(count), expected, sigma);
    };

    report.entries.push_back(fraction_entry("qber_total", tally.errors_total, budget.total));
    report.entries.push_back(fraction_entry("errors_optical", tally.errors_optical, p_opt));
    report.entries.push_back(fraction_entry("errors_dark", tally.errors_dark, p_dark));
    report.entries.push_back(fraction_entry("errors_isi", tally.errors_isi, p_isi));

    // Sifted-count prediction with per-detector dead-time thinning; the
    // 0.5% model term covers the discreteness of clocked arrivals.
    double rate_thinned = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double acc_i = a[i] * (1.0 + p.eps) * (cap[i] + leak_in[i]) + dark_acc[i];
        rate_thinned += acc_i / (1.0 + r_phys[i] * p.dead_ps[i] * 1e-12);
    }
    const double expected_sifted = rate_thinned / f * cycles;
    const double sigma_sifted =
        std::sqrt(expected_sifted + std::pow(0.005 * expected_sifted, 2));
    report.entries.push_back(make_entry("sifted_count", static_cast<double>(tally.sifted),
                                        expected_sifted, sigma_sifted));

    report.ok = std::none_of(report.entries.begin(), report.entries.end(),
                             [](const CheckEntry& e) { return e.flagged; });
    return report;
}

}  // namespace gqkd
