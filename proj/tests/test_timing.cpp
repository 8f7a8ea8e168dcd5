#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gqkd/analysis.hpp"
#include "gqkd/timing.hpp"
#include "oracles.hpp"

using namespace gqkd;

namespace {
const double kPeriod33 = 1e12 / 3.3e9;  // 303.03 ps
const TimingResponse kSspd{28.876941, kPeriod33 / 2, kPeriod33};
const TimingResponse kSpad{169.86436, 250.0, 500.0};
}  // namespace

TEST_CASE("window_capture") {
    SUBCASE("full period swallows nearly everything") {
        CHECK(window_capture(kSspd, 0.0, kPeriod33) == doctest::Approx(1.0).epsilon(1e-4));
    }

    SUBCASE("central 90% window") {
        const double half = 1.6448536269514722 * kSspd.sigma_ps;
        CHECK(window_capture(kSspd, kSspd.center_ps - half, 2 * half) ==
              doctest::Approx(0.90).epsilon(5e-4));
    }

    SUBCASE("100 ps centered window vs quadrature") {
        const double got = window_capture(kSspd, kSspd.center_ps - 50.0, 100.0);
        CHECK(got == doctest::Approx(0.9166).epsilon(1e-4));
        const double ref = oracle::gaussian_mass(kSspd.center_ps - 50.0, kSspd.center_ps + 50.0,
                                                 kSspd.center_ps, kSspd.sigma_ps);
        CHECK(got == doctest::Approx(ref).epsilon(1e-9));
    }

    SUBCASE("sigma zero is a point mass at the center") {
        const TimingResponse point{0.0, 150.0, 300.0};
        CHECK(window_capture(point, 100.0, 100.0) == 1.0);
        CHECK(window_capture(point, 0.0, 100.0) == 0.0);
    }

    SUBCASE("monotone in width for centered windows") {
        double prev = 0.0;
        for (double w = 5.0; w <= kPeriod33; w += 5.0) {
            const double cap =
                window_capture(kSspd, kSspd.center_ps - w / 2, std::min(w, kPeriod33));
            CHECK(cap >= prev);
            prev = cap;
        }
    }
}

TEST_CASE("isi_leak_fraction") {
    CHECK(isi_leak_fraction({0.0, 150.0, 300.0}) == 0.0);

    SUBCASE("SPAD at 2 GHz") {
        const double got = isi_leak_fraction(kSpad);
        const double ref = oracle::gaussian_tail(kSpad.period_ps, kSpad.center_ps, kSpad.sigma_ps) +
                           oracle::gaussian_mass(kSpad.center_ps - 40 * kSpad.sigma_ps, 0.0,
                                                 kSpad.center_ps, kSpad.sigma_ps);
        CHECK(got == doctest::Approx(0.141085).epsilon(1e-5));
        CHECK(got == doctest::Approx(ref).epsilon(1e-7));
    }

    SUBCASE("SSPD chain at 3.3 GHz") {
        const TimingResponse r{35.84299, kPeriod33 / 2, kPeriod33};
        CHECK(isi_leak_fraction(r) == doctest::Approx(2.366e-5).epsilon(1e-3));
    }

    SUBCASE("monotone in sigma, antitone in period") {
        double prev = 0.0;
        for (double s = 10.0; s <= 200.0; s += 10.0) {
            const double leak = isi_leak_fraction({s, 250.0, 500.0});
            CHECK(leak > prev);
            prev = leak;
        }
        prev = 1.0;
        for (double T = 200.0; T <= 900.0; T += 50.0) {
            const double leak = isi_leak_fraction({100.0, T / 2, T});
            CHECK(leak < prev);
            prev = leak;
        }
    }

    SUBCASE("capture plus leak closes to one for a centered ungated response") {
        for (const TimingResponse& r : {kSspd, kSpad}) {
            const double total = window_capture(r, 0.0, r.period_ps) + isi_leak_fraction(r);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("adjacent_window_leak matches isi_leak_fraction when ungated") {
    for (const TimingResponse& r : {kSspd, kSpad}) {
        CHECK(adjacent_window_leak(r, 0.0, r.period_ps) ==
              doctest::Approx(isi_leak_fraction(r)).epsilon(1e-9));
    }
    // A narrow window accepts only part of the spill-over.
    const double gated = adjacent_window_leak(kSpad, 200.0, 100.0);
    CHECK(gated > 0.0);
    CHECK(gated < isi_leak_fraction(kSpad));
}

TEST_CASE("qber_int") {
    CHECK(qber_int(0.0) == 0.0);
    CHECK(qber_int(isi_leak_fraction(kSpad)) == doctest::Approx(0.070542).epsilon(1e-4));
    const TimingResponse sspd_chain{35.84299, kPeriod33 / 2, kPeriod33};
    CHECK(qber_int(isi_leak_fraction(sspd_chain)) == doctest::Approx(1.18e-5).epsilon(1e-2));
}

TEST_CASE("synth_histogram") {
    const ClockConfig clock{3.3e9};

    SUBCASE("all-zero rates give an empty histogram") {
        const Histogram h = synth_histogram(kSspd, 0.0, 0.0, clock, 1.0, kPeriod33 / 100, 42);
        CHECK(h.counts.size() == 100);
        CHECK(h.total() == 0);
    }

    SUBCASE("rejects nonsense") {
        CHECK_THROWS(synth_histogram(kSspd, 1e4, 0.0, clock, 0.0, 3.0, 1));
        CHECK_THROWS(synth_histogram(kSspd, 1e4, 0.0, clock, -1.0, 3.0, 1));
        CHECK_THROWS(synth_histogram(kSspd, 1e4, 0.0, clock, 1.0, 0.0, 1));
    }

    SUBCASE("reproducible for a fixed seed") {
        const Histogram a = synth_histogram(kSspd, 1e4, 10.0, clock, 1.0, kPeriod33 / 64, 7);
        const Histogram b = synth_histogram(kSspd, 1e4, 10.0, clock, 1.0, kPeriod33 / 64, 7);
        const Histogram c = synth_histogram(kSspd, 1e4, 10.0, clock, 1.0, kPeriod33 / 64, 8);
        CHECK(a.counts == b.counts);
        CHECK(a.counts != c.counts);
    }

    SUBCASE("dark floor: 10 Hz for 1000 s over 100 bins") {
        const Histogram h = synth_histogram(kSspd, 0.0, 10.0, clock, 1000.0, kPeriod33 / 100, 11);
        // grand total Poisson(10000): stay within 4 sigma
        CHECK(std::llabs(static_cast<long long>(h.total()) - 10000) <= 400);
    }

    SUBCASE("Gaussian profile passes a 99% chi-square test") {
        const double bin = kPeriod33 / 100;
        const Histogram h = synth_histogram(kSspd, 1e4, 0.0, clock, 1.0, bin, 3);
        double chi2 = 0.0;
        int dof = 0;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double expected =
                1e4 * oracle::gaussian_mass(i * bin, (i + 1) * bin, kSspd.center_ps,
                                            kSspd.sigma_ps);
            if (expected < 5.0) continue;
            const double d = h.counts[i] - expected;
            chi2 += d * d / expected;
            ++dof;
        }
        REQUIRE(dof > 20);
        CHECK(chi2 < oracle::chi2_q99(dof));
    }

    SUBCASE("mean of many seeds matches the expected total") {
        const double signal = 5e3, dark = 50.0, duration = 0.1;
        const double expected = (signal + dark) * duration;
        double sum = 0.0;
        const int n = 120;
        for (int seed = 0; seed < n; ++seed)
            sum += static_cast<double>(
                synth_histogram(kSspd, signal, dark, clock, duration, kPeriod33 / 50, seed)
                    .total());
        const double mean = sum / n;
        const double sem = std::sqrt(expected / n);  // Poisson standard error of the mean
        CHECK(std::abs(mean - expected) <= 3.0 * sem);
    }
}

TEST_CASE("optimize_window") {
    const ClockConfig clock{3.3e9};

    SUBCASE("no darks: the full period is optimal") {
        const WindowChoice w =
            optimize_window(kSspd, 13.0, 0.0, clock, WindowObjective::max_nbr);
        CHECK(!w.degenerate);
        CHECK(w.offset_ps == 0.0);
        CHECK(w.width_ps == kPeriod33);
    }

    SUBCASE("no signal: degenerate zero-width window") {
        const WindowChoice w =
            optimize_window(kSspd, 0.0, 20.0, clock, WindowObjective::max_nbr);
        CHECK(w.degenerate);
        CHECK(w.width_ps == 0.0);
    }

    SUBCASE("modest darks: gating beats the ungated NBR") {
        const WindowChoice w =
            optimize_window(kSspd, 13.0, 2.0, clock, WindowObjective::max_nbr);
        CHECK(!w.degenerate);
        CHECK(w.width_ps < kPeriod33);
        // recompute the ungated NBR with the objective's own arithmetic
        const double rate = 13.0 * window_capture(kSspd, 0.0, kPeriod33) + 2.0;
        const double q = 0.5 * 2.0 / rate;
        const double ungated_nbr = std::max(0.0, secrecy_efficiency(q, 0.29)) * rate;
        CHECK(w.objective_value > ungated_nbr);
        CHECK(ungated_nbr > 0.0);
    }

    SUBCASE("heavy darks at low rate: every window is insecure, flagged") {
        // 13 Hz of signal against 20 Hz of darks cannot reach a positive
        // secrecy efficiency anywhere on the grid.
        const WindowChoice w =
            optimize_window(kSspd, 13.0, 20.0, clock, WindowObjective::max_nbr);
        CHECK(w.degenerate);
        CHECK(w.width_ps < kPeriod33);
        CHECK(w.width_ps > 0.0);
    }

    SUBCASE("min_qber picks a narrow window") {
        const WindowChoice w =
            optimize_window(kSspd, 13.0, 20.0, clock, WindowObjective::min_qber);
        CHECK(w.width_ps < kPeriod33);
    }
}
