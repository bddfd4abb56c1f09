// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <complex>

#include "csound/calibration.hpp"
#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"
#include "csound/rng.hpp"
#include "csound/waveform.hpp"

using namespace csound;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("a flat transmit spectrum needs no correction") {
    const int l = 101;
    const double per_bin = 43.0 - 10.0 - 10.0 * std::log10(static_cast<double>(l));
    const Eigen::ArrayXd measured = Eigen::ArrayXd::Constant(l, per_bin);

    const TxFlatnessResult r = cal_tx_flatness(measured, 43.0, 10.0);
    CHECK(r.port_target_dbm == doctest::Approx(33.0));
    CHECK(r.per_bin_target_dbm == doctest::Approx(per_bin));
    CHECK(r.pre_ripple_db == doctest::Approx(0.0));
    CHECK(r.post_ripple_db == doctest::Approx(0.0));
    CHECK(std::abs(r.mean_error_db) <= 1e-12);
    for (int j = 0; j < l; ++j) {
        CHECK(r.coefficients[j].imag() == 0.0);
        CHECK(std::abs(r.coefficients[j].real() - 1.0) <= 1e-12);
    }
}

TEST_CASE("transmit ripple is inverted bin by bin") {
    const int l = 200;
    const double per_bin = 33.0 - 10.0 * std::log10(static_cast<double>(l));
    Eigen::ArrayXd measured(l);
    for (int j = 0; j < l; ++j)
        measured[j] = per_bin + 2.0 * std::sin(2.0 * kPi * 3.0 * j / l);

    const TxFlatnessResult r = cal_tx_flatness(measured, 43.0, 10.0);
    CHECK(r.pre_ripple_db == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(r.post_ripple_db <= 1e-9);
    for (int j = 0; j < l; ++j) {
        const double corrected = measured[j] + 20.0 * std::log10(std::abs(r.coefficients[j]));
        CHECK(corrected == doctest::Approx(per_bin).epsilon(1e-9));
        CHECK(r.coefficients[j].real() > 0.0);
    }

    // flattening is a fixed point: a second pass finds nothing to fix
    Eigen::ArrayXd corrected(l);
    for (int j = 0; j < l; ++j)
        corrected[j] = measured[j] + 20.0 * std::log10(std::abs(r.coefficients[j]));
    const TxFlatnessResult again = cal_tx_flatness(corrected, 43.0, 10.0);
    for (int j = 0; j < l; ++j)
        CHECK(std::abs(again.coefficients[j].real() - 1.0) <= 1e-9);
}

TEST_CASE("corrections beyond the attenuator range are refused") {
    const int l = 100;
    Eigen::ArrayXd measured = Eigen::ArrayXd::Constant(l, -5.0);
    measured[17] = -13.0;  // needs ~8 dB of boost relative to the others
    CHECK_THROWS_AS(cal_tx_flatness(measured, 43.0, 10.0), std::runtime_error);
    CHECK_THROWS_AS(cal_tx_flatness(Eigen::ArrayXd(), 43.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(cal_tx_flatness(measured, 43.0, 10.0, -1.0), std::invalid_argument);
}

TEST_CASE("receive flattening recovers the chain inverse, whatever the cable") {
    const int l = 257;
    Eigen::VectorXcd chain(l), cable_a(l), cable_b(l);
    for (int j = 0; j < l; ++j) {
        const double mag = std::pow(10.0, 1.2 * std::sin(2.0 * kPi * 2.0 * j / l) / 20.0);
        chain[j] = std::polar(mag, 0.3 * std::cos(2.0 * kPi * 5.0 * j / l));
        cable_a[j] = std::polar(0.1, -0.002 * j);
        cable_b[j] = std::polar(0.5, 0.013 * j);
    }

    const RxFlatnessResult a = cal_rx_flatness(chain.cwiseProduct(cable_a), cable_a);
    const RxFlatnessResult b = cal_rx_flatness(chain.cwiseProduct(cable_b), cable_b);
    CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(a.post_ripple_db <= 1e-9);
    CHECK(a.pre_ripple_db == doctest::Approx(2.4).epsilon(1e-3));

    // normalized to zero dB mean: correcting the chain leaves unit level
    double mean_log = 0.0;
    for (int j = 0; j < l; ++j)
        mean_log += std::log(std::abs(a.coefficients[j] * chain[j]));
    CHECK(std::abs(mean_log / l) <= 1e-12);

    Eigen::VectorXcd dead_cable = cable_a;
    dead_cable[42] = 0.0;
    CHECK_THROWS_AS(cal_rx_flatness(chain.cwiseProduct(dead_cable), dead_cable),
                    std::invalid_argument);
    CHECK_THROWS_AS(cal_rx_flatness(chain, cable_a.head(l - 1)), std::invalid_argument);
}

TEST_CASE("incident-power offset aligns the dominant tap with free space") {
    Pdp pdp;
    pdp.power_mw = Eigen::ArrayXd::Constant(500, 1e-12);
    pdp.retained = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(500, true);
    pdp.power_mw(4) = 1e-2;  // -20 dBm where -15.88 dBm should arrive

    const IncidentPowerResult r = cal_incident_power(pdp, 3.0, 7.0, 43.0);
    CHECK(r.peak_bin == 4);
    CHECK(r.expected_dbm == doctest::Approx(43.0 - 58.8843858947).epsilon(1e-9));
    CHECK(r.measured_dbm == doctest::Approx(-20.0).epsilon(1e-12));
    CHECK(r.offset_db == doctest::Approx(-15.8843858947 + 20.0).epsilon(1e-6));

    Pdp murky;
    murky.power_mw = Eigen::ArrayXd::Constant(500, 1e-6);
    murky.power_mw(4) = 5e-6;  // only 7 dB of prominence
    CHECK_THROWS_AS(cal_incident_power(murky, 3.0, 7.0, 43.0), std::runtime_error);
    CHECK_THROWS_AS(cal_incident_power(pdp, -3.0, 7.0, 43.0), std::invalid_argument);
}

TEST_CASE("omni-versus-beams verification compares retained totals") {
    Pdp omni;
    omni.power_mw = Eigen::ArrayXd::Zero(64);
    omni.retained = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(64, false);
    omni.threshold_applied = true;
    omni.power_mw(3) = 2e-6;
    omni.retained(3) = true;
    omni.power_mw(9) = 1e-6;
    omni.retained(9) = true;

    OmniPdp synth;
    synth.power_mw = Eigen::ArrayXd::Zero(64);
    synth.contributing = Eigen::ArrayXi::Zero(64);
    synth.power_mw(3) = 2e-6;
    synth.power_mw(9) = 1e-6;

    const OmniVerifyResult same = verify_omni_vs_beams(synth, omni);
    CHECK(same.delta_db == doctest::Approx(0.0));
    CHECK(same.pass);

    synth.power_mw(9) = 0.0;  // one beam's contribution lost
    const OmniVerifyResult missing = verify_omni_vs_beams(synth, omni);
    CHECK(missing.delta_db < -0.2);
    CHECK(!missing.pass);

    synth.power_mw.setZero();
    CHECK_THROWS_AS(verify_omni_vs_beams(synth, omni), std::runtime_error);
}

TEST_CASE("the full sequence nulls seeded impairments") {
    const SounderConfig cfg = SounderConfig::defaults(14.5);
    FrontEndModel::Options opts;
    opts.noise_figure_db = 8.3;
    opts.rx_gain_offset_db = 1.25;
    FrontEndModel fe_array = FrontEndModel::seeded(77, cfg.zc_length, opts);
    opts.noise_figure_db = 1.5;
    opts.rx_gain_offset_db = 0.0;
    FrontEndModel fe_omni = FrontEndModel::seeded(78, cfg.zc_length, opts);
    fe_array.tx_ripple = fe_omni.tx_ripple;  // one transmitter feeds both links

    CalOptions cal_opts;
    cal_opts.noise = false;
    const Calibration cal = run_calibration(cfg, fe_omni, &fe_array, cal_opts);

    CHECK(cal.report.tx.pre_ripple_db > 0.3);
    CHECK(cal.report.tx.post_ripple_db <= 1e-9);
    CHECK(cal.report.rx_omni.post_ripple_db <= 1e-9);
    REQUIRE(cal.report.rx_array.has_value());
    CHECK(cal.report.rx_array->post_ripple_db <= 1e-9);

    // with ripple flattened and no gain error the omni offset carries only the
    // bench residual: the 50 ns cable delay sits between taps, so a sliver of
    // energy spreads into sidelobes the threshold clips, a few hundredths of a
    // dB that the offset absorbs (and cancels again on real captures, whose
    // path delays are equally off-grid)
    CHECK(std::abs(cal.coefficients.omni_offset_db) <= 0.08);
    REQUIRE(cal.coefficients.face_offset_db.size() == 4);
    for (double off : cal.coefficients.face_offset_db)
        CHECK(off == doctest::Approx(-1.25).epsilon(0.03));
    CHECK(cal.report.faces.size() == 4);
    CHECK(cal.report.incident.expected_dbm ==
          doctest::Approx(43.0 - 65.2097851391).epsilon(1e-6));
}

TEST_CASE("mismatched transmit chains between the two links are rejected") {
    const SounderConfig cfg = SounderConfig::defaults(14.5);
    const FrontEndModel fe_omni = FrontEndModel::seeded(1, cfg.zc_length, {});
    const FrontEndModel fe_array = FrontEndModel::seeded(2, cfg.zc_length, {});
    CalOptions opts;
    opts.noise = false;
    CHECK_THROWS_AS(run_calibration(cfg, fe_omni, &fe_array, opts), std::invalid_argument);
    CHECK_THROWS_AS(run_calibration(cfg, fe_omni, nullptr, opts), std::invalid_argument);
}

TEST_CASE("a calibrated capture reads free-space power straight off the profile") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    FrontEndModel fe = FrontEndModel::seeded(31, cfg.zc_length, {});
    fe.noise_enabled = false;

    CalOptions opts;
    opts.noise = false;
    const Calibration cal = run_calibration(cfg, fe, nullptr, opts);

    const TxFrame flattened =
        apply_tx_coefficients(build_sounding_frame(cfg), cal.coefficients.tx);
    // park the path on a delay bin so the profile stays a single clean tap
    const double distance = 15.0 * cfg.tap_spacing_s() * kSpeedOfLight;
    PathTap los;
    los.delay_s = distance / kSpeedOfLight;
    los.gain = std::pow(10.0, -fspl_db(distance, 7.0) / 20.0);
    ChannelRealization ch;
    ch.taps = {los};

    Rng rng(5);
    const ComplexBaseband rx = apply_channel(flattened, ch, fe, cfg, rng);
    const Cir cir = correlate(rx, flattened, cfg, &cal.coefficients.rx_omni,
                              cal.coefficients.omni_offset_db);
    const auto total = total_power_dbm(noise_threshold(pdp_from_cir(cir)));
    REQUIRE(total.has_value());
    CHECK(std::abs(*total - (43.0 - fspl_db(distance, 7.0))) <= 0.05);
}

TEST_CASE("calibration survives the trip through its JSON form") {
    const SounderConfig cfg = SounderConfig::defaults(8.3);
    FrontEndModel::Options fopts;
    fopts.noise_figure_db = 8.3;
    FrontEndModel fe_array = FrontEndModel::seeded(5, cfg.zc_length, fopts);
    FrontEndModel fe_omni = FrontEndModel::seeded(6, cfg.zc_length, {});
    fe_array.tx_ripple = fe_omni.tx_ripple;

    CalOptions opts;
    opts.noise = false;
    const Calibration cal = run_calibration(cfg, fe_omni, &fe_array, opts);

    const Calibration back = cal_from_json(cal_to_json(cal));
    CHECK((back.coefficients.tx - cal.coefficients.tx).norm() == 0.0);
    CHECK((back.coefficients.rx_omni - cal.coefficients.rx_omni).norm() == 0.0);
    CHECK((back.coefficients.rx_array - cal.coefficients.rx_array).norm() == 0.0);
    CHECK(back.coefficients.omni_offset_db == cal.coefficients.omni_offset_db);
    CHECK(back.coefficients.face_offset_db == cal.coefficients.face_offset_db);
    CHECK(back.report.center_frequency_ghz == cal.report.center_frequency_ghz);
    CHECK(back.report.incident.offset_db == cal.report.incident.offset_db);
    CHECK(back.report.faces.size() == cal.report.faces.size());
    CHECK(back.report.rx_array.has_value());
}
