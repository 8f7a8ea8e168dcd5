#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gqkd/analysis.hpp"
#include "gqkd/timing.hpp"
#include "oracles.hpp"

using namespace gqkd;

TEST_CASE("qber_opt") {
    CHECK(qber_opt(std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(qber_opt(0.0) == doctest::Approx(0.5));
    CHECK(qber_opt(21.0) == doctest::Approx(0.0078807).epsilon(1e-4));
}

TEST_CASE("qber_det") {
    CHECK(qber_det(100.0, 0.0) == 0.0);
    CHECK(qber_det(0.0, 5.0) == doctest::Approx(0.5));
    CHECK(qber_det(11.7, 1.25) == doctest::Approx(0.048263).epsilon(1e-4));
    CHECK(qber_det(0.0, 0.0) == 0.0);  // degenerate, flagged at the breakdown level
}

TEST_CASE("total_qber") {
    SUBCASE("ideal configuration has a zero budget") {
        SystemConfig c = sspd_3g3();
        c.receiver.extinction_db = std::numeric_limits<double>::infinity();
        c.detector0.dark_rate_hz = 0.0;
        c.detector1.dark_rate_hz = 0.0;
        c.detector0.jitter_fwhm_ps = 0.0;
        c.detector1.jitter_fwhm_ps = 0.0;
        c.source.pulse_fwhm_ps = 0.0;
        const QberBreakdown b = total_qber(c);
        CHECK(b.opt == 0.0);
        CHECK(b.det == 0.0);
        CHECK(b.isi == 0.0);
        CHECK(b.total == 0.0);
        CHECK(!b.degenerate);
    }

    SUBCASE("SSPD at 10 km is extinction-dominated") {
        SystemConfig c = sspd_3g3();
        c.channel.length_km = 10.0;
        const QberBreakdown b = total_qber(c);
        CHECK(b.total == doctest::Approx(0.008).epsilon(0.05));
        CHECK(b.det < 1e-3);
        CHECK(b.isi < 1e-3);
        CHECK(b.total == b.opt + b.det + b.isi);  // exact as stored
    }

    SUBCASE("zero rate is degenerate, not NaN") {
        SystemConfig c = sspd_3g3();
        c.source.mean_photon_number = 0.0;
        const QberBreakdown b = total_qber(c);
        CHECK(b.degenerate);
        CHECK(std::isfinite(b.total));
    }

    SUBCASE("budget above one is rejected") {
        SystemConfig c = sspd_3g3();
        c.receiver.extinction_db = 0.0;       // opt = 0.5
        c.source.mean_photon_number = 0.0;    // det -> all-dark 0.5
        c.detector0.jitter_fwhm_ps = 400.0;   // isi > 0 pushes past 1
        c.detector1.jitter_fwhm_ps = 400.0;
        CHECK_THROWS_AS(total_qber(c), std::domain_error);
    }
}

TEST_CASE("secrecy_efficiency: frozen points vs independent evaluation") {
    CHECK(secrecy_efficiency(0.0, 0.29) == 0.71);
    CHECK(secrecy_efficiency(0.036, 0.29) == doctest::Approx(0.4331).epsilon(2.5e-4));
    CHECK(secrecy_efficiency(0.01, 0.29) == doctest::Approx(0.6146).epsilon(2e-4));
    for (const double q : {1e-4, 0.005, 0.036, 0.1, 0.3, 0.7}) {
        const double ref = static_cast<double>(oracle::secrecy_eff(q, 0.29L));
        CHECK(secrecy_efficiency(q, 0.29) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK_THROWS_AS(secrecy_efficiency(1.0, 0.29), std::domain_error);
    CHECK_THROWS_AS(secrecy_efficiency(-0.1, 0.29), std::domain_error);
}

TEST_CASE("secrecy_efficiency: continuous and decreasing up to the root") {
    const double q_star = security_threshold(0.29);
    double prev = secrecy_efficiency(0.0, 0.29);
    for (double q = 1e-4; q < q_star; q += 1e-4) {
        const double here = secrecy_efficiency(q, 0.29);
        CHECK(here < prev);
        CHECK(std::abs(here - prev) < 0.01);  // no jumps on a 1e-4 grid
        prev = here;
    }
}

TEST_CASE("security_threshold") {
    SUBCASE("i_ae = 0.29 against the scan-and-bisect oracle") {
        const double got = security_threshold(0.29);
        CHECK(got == doctest::Approx(static_cast<double>(oracle::secrecy_root(0.29L)))
                         .epsilon(2e-5));
        CHECK(std::abs(got - 0.1198) < 1e-3);
    }

    SUBCASE("i_ae = 0 root of the bare distillation curve") {
        const double got = security_threshold(0.0);
        CHECK(got ==
              doctest::Approx(static_cast<double>(oracle::secrecy_root(0.0L))).epsilon(2e-5));
        CHECK(got == doctest::Approx(0.163625).epsilon(1e-4));
    }

    SUBCASE("an all-knowing eavesdropper leaves no margin") {
        CHECK(security_threshold(0.999) < 1e-3);
        CHECK_THROWS_AS(security_threshold(1.0 - 1e-13), std::domain_error);
    }

    SUBCASE("strictly decreasing in i_ae") {
        double prev = 1.0;
        for (double i = 0.0; i <= 0.9; i += 0.05) {
            const double q = security_threshold(i);
            CHECK(q < prev);
            prev = q;
        }
    }
}

TEST_CASE("net_bit_rate") {
    CHECK(net_bit_rate(-0.3, 1000.0) == 0.0);
    CHECK(net_bit_rate(0.71, 1000.0) == doctest::Approx(710.0));
    CHECK(net_bit_rate(0.4331, 13.044) == doctest::Approx(5.649).epsilon(1e-3));
}

TEST_CASE("sweep") {
    SystemConfig c = sspd_3g3();

    SUBCASE("single zero-distance row uses only the extra loss") {
        c.channel.extra_loss_db = 2.2;
        const std::vector<double> d{0.0};
        const auto rows = sweep(c, d);
        REQUIRE(rows.size() == 1);
        SystemConfig ref = c;
        ref.channel.length_km = 1.0;
        ref.channel.extra_loss_db = 0.0;
        CHECK(rows[0].report.raw_rate_hz ==
              doctest::Approx(secrecy_report(ref).raw_rate_hz).epsilon(1e-12));
    }

    SUBCASE("monotone columns") {
        std::vector<double> d;
        for (int km = 1; km <= 30; ++km) d.push_back(km);
        const auto rows = sweep(c, d);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i].qber.total >= rows[i - 1].qber.total);
            CHECK(rows[i].report.raw_rate_hz < rows[i - 1].report.raw_rate_hz);
        }
    }

    SUBCASE("unsorted or negative distances rejected") {
        const std::vector<double> bad{5.0, 1.0};
        CHECK_THROWS_AS(sweep(c, bad), std::invalid_argument);
        const std::vector<double> neg{-1.0};
        CHECK_THROWS_AS(sweep(c, neg), std::invalid_argument);
    }

    SUBCASE("log slope follows the fibre loss when dead time is off") {
        c.detector0.dead_time_ps = 0.0;
        c.detector1.dead_time_ps = 0.0;
        std::vector<double> d;
        for (int km = 20; km <= 30; ++km) d.push_back(km);
        const auto rows = sweep(c, d);
        const double per_km = std::pow(10.0, -0.22);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double ratio = rows[i].report.raw_rate_hz / rows[i - 1].report.raw_rate_hz;
            CHECK(ratio == doctest::Approx(per_km).epsilon(1e-9));
        }
    }
}

TEST_CASE("secure_distance") {
    SUBCASE("perfect link never crosses") {
        SystemConfig c = sspd_3g3();
        c.receiver.extinction_db = std::numeric_limits<double>::infinity();
        c.detector0.dark_rate_hz = 0.0;
        c.detector1.dark_rate_hz = 0.0;
        c.detector0.jitter_fwhm_ps = 0.0;
        c.detector1.jitter_fwhm_ps = 0.0;
        c.source.pulse_fwhm_ps = 0.0;
        const SecureDistance sd = secure_distance(c);
        CHECK(sd.beyond_horizon);
    }

    SUBCASE("SPAD chain goes insecure in the paper band") {
        const SecureDistance sd = secure_distance(sispad_2g());
        CHECK(!sd.beyond_horizon);
        CHECK(sd.km > 8.0);
        CHECK(sd.km < 16.0);
    }

    SUBCASE("insecure at zero distance is an error") {
        SystemConfig c = sispad_2g();
        c.receiver.extinction_db = 8.0;  // opt alone ~ 0.137 > threshold
        CHECK_THROWS_AS(secure_distance(c), std::domain_error);
    }
}

TEST_CASE("calibrate") {
    const SystemConfig base = sspd_3g3();

    SUBCASE("already-exact observation leaves the config untouched") {
        SystemConfig at25 = base;
        at25.channel.length_km = 25.0;
        const Observation obs{25.0, Observation::Kind::qber, total_qber(at25).total};
        const auto fit = calibrate(base, {&obs, 1});
        CHECK(fit.residual_sum_sq == 0.0);
        CHECK(fit.config.receiver.coupling_loss_db == base.receiver.coupling_loss_db);
        CHECK(fit.config.detector0.dark_rate_hz == base.detector0.dark_rate_hz);
        CHECK(fit.config.receiver.extinction_db == base.receiver.extinction_db);
    }

    SUBCASE("single paper point is reproduced within 1e-3") {
        const Observation obs{25.0, Observation::Kind::qber, 0.036};
        const auto fit = calibrate(base, {&obs, 1});
        SystemConfig fitted = fit.config;
        fitted.channel.length_km = 25.0;
        CHECK(std::abs(total_qber(fitted).total - 0.036) < 1e-3);
        CHECK(fit.config.detector0.dark_rate_hz > 0.0);
        CHECK(fit.config.detector0.dark_rate_hz <= 10.0);
        CHECK(fit.config.receiver.coupling_loss_db >= 0.0);
        CHECK(fit.config.receiver.coupling_loss_db <= 10.0);
        CHECK(fit.config.receiver.extinction_db >= 15.0);
        CHECK(fit.config.receiver.extinction_db <= 30.0);
        CHECK(fit.config.detector0.dark_rate_hz == fit.config.detector1.dark_rate_hz);
    }

    SUBCASE("rate observations participate too") {
        SystemConfig truth = base;
        truth.receiver.coupling_loss_db = 3.0;
        truth.channel.length_km = 10.0;
        const Observation obs{10.0, Observation::Kind::raw_rate,
                              secrecy_report(truth).raw_rate_hz};
        const auto fit = calibrate(base, {&obs, 1});
        CHECK(fit.config.receiver.coupling_loss_db == doctest::Approx(3.0).epsilon(0.05));
    }

    SUBCASE("contradictory observation is infeasible") {
        const Observation obs{1.0, Observation::Kind::qber, 0.5};
        CHECK_THROWS_AS(calibrate(base, {&obs, 1}), CalibrationError);
        try {
            calibrate(base, {&obs, 1});
        } catch (const CalibrationError& e) {
            CHECK(e.best_residual() > 0.01);
        }
    }

    SUBCASE("input validation") {
        CHECK_THROWS_AS(calibrate(base, {}), std::invalid_argument);
        const Observation zero{25.0, Observation::Kind::qber, 0.0};
        CHECK_THROWS_AS(calibrate(base, {&zero, 1}), std::invalid_argument);
    }
}
