// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <complex>

#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/waveform.hpp"

using namespace csound;

TEST_CASE("free-space loss at the frozen reference points") {
    CHECK(fspl_db(1.0, 1.0) == doctest::Approx(32.44));
    CHECK(fspl_db(3.0, 7.0) == doctest::Approx(58.88438589).epsilon(1e-8));
    CHECK(fspl_db(76.0, 14.5) == doctest::Approx(93.28363189).epsilon(1e-8));
    // antenna gains subtract straight off
    CHECK(fspl_db(3.0, 7.0, 10.0, 5.0) == doctest::Approx(58.88438589 - 15.0).epsilon(1e-8));
    CHECK_THROWS_AS(fspl_db(0.0, 7.0), std::invalid_argument);
    CHECK_THROWS_AS(fspl_db(3.0, -1.0), std::invalid_argument);
}

TEST_CASE("scattering gain tracks wavelength and gamma") {
    CHECK(scattering_gain_db(0.0, 7.0) == doctest::Approx(38.35764538).epsilon(1e-8));
    CHECK(scattering_gain_db(0.0, 14.5) == doctest::Approx(44.68304463).epsilon(1e-8));
    CHECK(scattering_gain_db(10.0, 7.0) == doctest::Approx(48.35764538).epsilon(1e-8));
}

TEST_CASE("two-leg path loss matches the by-hand arithmetic") {
    SensingGeometry geom;
    geom.tx = {0.0, 0.0, 10.0};
    geom.target = {50.0, 0.0, 1.0};
    geom.rx = {25.0, 0.0, 2.0};
    CHECK(geom.d1_m() == doctest::Approx(50.80354318).epsilon(1e-8));
    CHECK(geom.d2_m() == doctest::Approx(25.01999201).epsilon(1e-8));

    const double pl = target_path_loss_db(geom, 0.0, 7.0);
    CHECK(pl == doctest::Approx(122.4099).epsilon(1e-6));

    // gamma and antenna gains enter linearly
    CHECK(target_path_loss_db(geom, 10.0, 7.0) == doctest::Approx(pl - 10.0).epsilon(1e-9));
    CHECK(target_path_loss_db(geom, 0.0, 7.0, 10.0, 0.0) ==
          doctest::Approx(pl - 10.0).epsilon(1e-9));

    // symmetric under swapping the two legs together with their gains
    SensingGeometry swapped;
    swapped.tx = geom.rx;
    swapped.rx = geom.tx;
    swapped.target = geom.target;
    CHECK(target_path_loss_db(swapped, 0.0, 7.0, 4.0, 9.0) ==
          doctest::Approx(target_path_loss_db(geom, 0.0, 7.0, 9.0, 4.0)).epsilon(1e-12));

    SensingGeometry degenerate = geom;
    degenerate.target = geom.tx;
    CHECK_THROWS_AS(target_path_loss_db(degenerate, 0.0, 7.0), std::invalid_argument);
}

TEST_CASE("bistatic delay geometry") {
    const Eigen::Vector3d tx{0.0, 0.0, 10.0}, rx{25.0, 0.0, 2.0};
    // target sitting on the receiver: delay is the direct TX-RX distance
    CHECK(bistatic_delay_s(tx, rx, rx) * 1e9 == doctest::Approx(87.5566).epsilon(1e-6));
    // target on the TX-RX segment: degenerate ellipse, same delay
    const Eigen::Vector3d mid = 0.5 * (tx + rx);
    CHECK(bistatic_delay_s(tx, rx, mid) ==
          doctest::Approx((rx - tx).norm() / kSpeedOfLight).epsilon(1e-12));
    // monostatic: both legs equal, delay 2 d / c
    const Eigen::Vector3d tgt{40.0, 3.0, 1.0};
    CHECK(bistatic_delay_s(tx, tx, tgt) ==
          doctest::Approx(2.0 * (tgt - tx).norm() / kSpeedOfLight).epsilon(1e-12));
    // receding target: delay strictly increases
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double d = bistatic_delay_s(tx, rx, {25.0 + 5.0 * k, 3.0, 2.0});
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("catalog scattering models carry the published moments") {
    const RcsModel cb = rcs_model_for(TargetClass::passenger_car, SensingMode::bistatic);
    CHECK(cb.mu_dbsm == doctest::Approx(-0.1));
    CHECK(cb.sigma_dbsm == doctest::Approx(6.1));
    const RcsModel cm = rcs_model_for(TargetClass::passenger_car, SensingMode::monostatic);
    CHECK(cm.mu_dbsm == doctest::Approx(7.7));
    CHECK(cm.sigma_dbsm == doctest::Approx(8.4));
    const RcsModel pb = rcs_model_for(TargetClass::pedestrian, SensingMode::bistatic);
    CHECK(pb.mu_dbsm == doctest::Approx(-14.4));
    CHECK(pb.sigma_dbsm == doctest::Approx(6.7));
    const RcsModel pm = rcs_model_for(TargetClass::pedestrian, SensingMode::monostatic);
    CHECK(pm.mu_dbsm == doctest::Approx(-6.2));
    CHECK(pm.sigma_dbsm == doctest::Approx(10.0));
}

TEST_CASE("scattering draws reproduce the model moments") {
    const int n = 100000;
    {
        Rng rng(11);
        const RcsModel m = rcs_model_for(TargetClass::passenger_car, SensingMode::bistatic);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += rcs_sample_dbsm(m, rng);
        CHECK(std::abs(sum / n - (-0.1)) <= 0.1);
    }
    {
        Rng rng(12);
        const RcsModel m = rcs_model_for(TargetClass::pedestrian, SensingMode::monostatic);
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = rcs_sample_dbsm(m, rng);
            sum += g;
            sq += g * g;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sq / n - mean * mean);
        CHECK(std::abs(sd - 10.0) <= 0.2);
    }
    {
        Rng rng(13);
        RcsModel point{3.5, 0.0};
        for (int i = 0; i < 5; ++i) CHECK(rcs_sample_dbsm(point, rng) == 3.5);
    }
}

TEST_CASE("string round-trips for the catalog enums") {
    CHECK(target_class_from_string(to_string(TargetClass::pedestrian)) ==
          TargetClass::pedestrian);
    CHECK(sensing_mode_from_string(to_string(SensingMode::monostatic)) ==
          SensingMode::monostatic);
    CHECK_THROWS_AS(target_class_from_string("bicycle"), std::invalid_argument);
}

TEST_CASE("seeded front ends are reproducible and bounded") {
    FrontEndModel::Options opts;
    const FrontEndModel a = FrontEndModel::seeded(99, 3343, opts);
    const FrontEndModel b = FrontEndModel::seeded(99, 3343, opts);
    CHECK((a.tx_ripple - b.tx_ripple).norm() == 0.0);
    CHECK((a.rx_ripple - b.rx_ripple).norm() == 0.0);
    const FrontEndModel c = FrontEndModel::seeded(100, 3343, opts);
    CHECK((a.tx_ripple - c.tx_ripple).norm() > 0.0);

    for (Eigen::Index j = 0; j < a.tx_ripple.size(); ++j) {
        const double mag_db = 20.0 * std::log10(std::abs(a.tx_ripple[j]));
        REQUIRE(std::abs(mag_db) <= 3.0);
    }

    const FrontEndModel flat = FrontEndModel::ideal(3343, 5.0, false);
    CHECK((flat.tx_ripple - Eigen::VectorXcd::Ones(3343)).norm() == 0.0);
    CHECK(flat.noise_figure_db == 5.0);
    CHECK_FALSE(flat.noise_enabled);
}

TEST_CASE("identity channel passes the frame through unchanged") {
    const SounderConfig cfg = SounderConfig::defaults();
    const TxFrame frame = build_sounding_frame(cfg);
    ChannelRealization ch;
    ch.taps.push_back(PathTap{0.0, {1.0, 0.0}});
    const FrontEndModel fe = FrontEndModel::ideal(cfg.zc_length, 0.0, false);
    Rng rng(1);
    const ComplexBaseband out = apply_channel(frame, ch, fe, cfg, rng);
    REQUIRE(out.samples.size() == frame.baseband.samples.size());
    CHECK((out.samples - frame.baseband.samples).norm() <=
          1e-12 * frame.baseband.samples.norm());
    // energy preserved
    CHECK(out.samples.squaredNorm() ==
          doctest::Approx(frame.baseband.samples.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("whole-sample delays act as circular shifts") {
    const SounderConfig cfg = SounderConfig::defaults();
    const TxFrame frame = build_sounding_frame(cfg);
    const int shift = 37;
    ChannelRealization ch;
    ch.taps.push_back(PathTap{shift / cfg.sample_rate_hz(), {1.0, 0.0}});
    const FrontEndModel fe = FrontEndModel::ideal(cfg.zc_length, 0.0, false);
    Rng rng(1);
    const ComplexBaseband out = apply_channel(frame, ch, fe, cfg, rng);

    const int N = cfg.fft_size;
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
        const std::complex<double> want = frame.baseband.samples[((i - shift) % N + N) % N];
        worst = std::max(worst, std::abs(out.samples[i] - want));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("noise-only output sits at thermal plus noise figure") {
    const SounderConfig cfg = SounderConfig::defaults();
    const TxFrame frame = build_sounding_frame(cfg);
    ChannelRealization empty;
    const double nf = 5.0;
    const FrontEndModel fe = FrontEndModel::ideal(cfg.zc_length, nf, true);
    Rng rng(42);
    const ComplexBaseband out = apply_channel(frame, empty, fe, cfg, rng);
    const double want_dbm = cfg.thermal_noise_dbm() + nf;  // -87.97 + 5
    CHECK(std::abs(measure_power_dbm(out) - want_dbm) <= 0.1);
}

TEST_CASE("tap delays beyond one sequence period are rejected") {
    const SounderConfig cfg = SounderConfig::defaults();
    const TxFrame frame = build_sounding_frame(cfg);
    const FrontEndModel fe = FrontEndModel::ideal(cfg.zc_length, 0.0, false);
    ChannelRealization ch;
    ch.taps.push_back(PathTap{cfg.zc_period_s() * 1.01, {1.0, 0.0}});
    Rng rng(1);
    CHECK_THROWS_AS(apply_channel(frame, ch, fe, cfg, rng), std::invalid_argument);
}
