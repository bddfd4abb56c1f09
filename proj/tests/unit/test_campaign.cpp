// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "csound/calibration.hpp"
#include "csound/campaign.hpp"
#include "csound/core.hpp"
#include "csound/recording.hpp"
#include "csound/scene.hpp"

using namespace csound;

namespace {

Scene los_scene_3m() {
    Scene scene;
    scene.tx.position = {0.0, 0.0, 0.0};
    scene.rx.position = {3.0, 0.0, 0.0};
    scene.shadowing_sigma_db = 0.0;
    scene.seed = 1;
    return scene;
}

std::vector<NodeSpec> omni_pair(const NodeClock& rx_clock) {
    NodeSpec tx;
    tx.node_id = 0;
    tx.transmits = true;
    NodeSpec rx;
    rx.node_id = 1;
    rx.captures_omni = true;
    rx.clock = rx_clock;
    return {tx, rx};
}

CampaignInputs quiet_inputs(const SounderConfig& cfg) {
    CampaignInputs inputs;
    inputs.fe_omni = FrontEndModel::ideal(cfg.zc_length, 1.5, false);
    inputs.master_seed = 9;
    return inputs;
}

int peak_bin(const CirRecord& record) {
    int best = 0;
    float best_mag = 0.0f;
    for (std::size_t i = 0; i < record.taps.size(); ++i) {
        const float mag = std::norm(record.taps[i]);
        if (mag > best_mag) {
            best_mag = mag;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("clock presets carry the advertised error terms") {
    const NodeClock ideal = NodeClock::preset(ClockSource::ideal);
    CHECK(ideal.offset_s == 0.0);
    CHECK(ideal.drift == 0.0);
    CHECK(ideal.jitter_std_s == 0.0);
    CHECK(NodeClock::preset(ClockSource::gnss).jitter_std_s == doctest::Approx(10e-9));
    CHECK(NodeClock::preset(ClockSource::rubidium).drift == doctest::Approx(1e-12));
    CHECK(NodeClock::preset(ClockSource::ptp).jitter_std_s == doctest::Approx(100e-9));

    for (auto s : {ClockSource::ideal, ClockSource::gnss, ClockSource::rubidium,
                   ClockSource::ptp})
        CHECK(clock_source_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(clock_source_from_string("sundial"), std::invalid_argument);
}

TEST_CASE("a clock reading is offset plus drift plus a repeatable jitter draw") {
    NodeClock c;
    c.source = ClockSource::rubidium;
    c.offset_s = 5e-9;
    c.drift = 2e-9;
    CHECK(apply_clock(0.0, c) == doctest::Approx(5e-9).epsilon(1e-15));
    CHECK(apply_clock(10.0, c) == doctest::Approx(10.0 + 5e-9 + 20e-9).epsilon(1e-15));

    NodeClock jittery = NodeClock::preset(ClockSource::gnss, 42);
    const double a = apply_clock(1.5, jittery);
    CHECK(apply_clock(1.5, jittery) == a);  // same instant, same draw
    CHECK(apply_clock(1.5000001, jittery) != a);
    NodeClock other_seed = NodeClock::preset(ClockSource::gnss, 43);
    CHECK(apply_clock(1.5, other_seed) != a);
}

TEST_CASE("the timetable repeats every capture stream each snapshot") {
    const SounderConfig cfg = SounderConfig::defaults(14.5);
    const auto beams = build_beam_table(cfg.band);
    const ScanSchedule sweep = build_scan_schedule(beams, cfg);

    NodeSpec tx;
    tx.node_id = 0;
    tx.transmits = true;
    NodeSpec rx;
    rx.node_id = 1;
    rx.captures_omni = true;
    rx.captures_array = true;

    const TxRxSchedule sched = build_schedule({tx, rx}, &sweep, cfg, 1e-3, 3);
    CHECK(sched.captures.size() == 3 * (1 + 80));
    CHECK(sched.end_s() == doctest::Approx(3e-3));

    for (std::size_t i = 1; i < sched.captures.size(); ++i)
        CHECK(sched.captures[i - 1].t_s <= sched.captures[i].t_s);
    for (const auto& a : sched.captures) {
        if (a.beam_id == kOmniBeamId) {
            CHECK(a.array_id == kOmniArrayId);
            CHECK(a.duration_s == doctest::Approx(cfg.frame_duration_s()));
        } else {
            CHECK(a.array_id < 4);
            CHECK(a.duration_s == doctest::Approx(sweep.dwell_s));
        }
    }

    // a thirty-second survey is plain arithmetic on the same layout
    const TxRxSchedule long_run = build_schedule({tx, rx}, &sweep, cfg, 1e-3, 30000);
    CHECK(long_run.end_s() == doctest::Approx(30.0));
}

TEST_CASE("infeasible or inconsistent campaign requests are refused") {
    const SounderConfig cfg = SounderConfig::defaults(14.5);
    const auto beams = build_beam_table(cfg.band);
    const ScanSchedule sweep = build_scan_schedule(beams, cfg, 11.6e-6);

    NodeSpec tx;
    tx.node_id = 0;
    tx.transmits = true;
    NodeSpec rx;
    rx.node_id = 1;
    rx.captures_array = true;

    // the sweep needs just under 0.9 ms per snapshot
    CHECK_THROWS_WITH_AS(build_schedule({tx, rx}, &sweep, cfg, 0.5e-3, 10),
                         doctest::Contains("minimum is"), std::invalid_argument);
    CHECK_NOTHROW(build_schedule({tx, rx}, &sweep, cfg, 0.9e-3, 10));

    CHECK_THROWS_AS(build_schedule({tx, rx}, nullptr, cfg, 1e-3, 10), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule({rx}, &sweep, cfg, 1e-3, 10), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule({tx}, &sweep, cfg, 1e-3, 10), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule({tx, rx}, &sweep, cfg, 1e-3, 0), std::invalid_argument);

    NodeSpec dup = rx;
    dup.node_id = 0;
    CHECK_THROWS_AS(build_schedule({tx, dup}, &sweep, cfg, 1e-3, 10), std::invalid_argument);

    NodeSpec mono = tx;
    mono.captures_omni = true;  // transmits and captures without full_duplex
    CHECK_THROWS_AS(build_schedule({mono}, &sweep, cfg, 1e-3, 10), std::invalid_argument);

    const SounderConfig omni_band = SounderConfig::defaults(7.0);
    CHECK_THROWS_AS(build_schedule({tx, rx}, &sweep, omni_band, 1e-3, 10),
                    std::invalid_argument);

    NodeSpec lying = rx;
    lying.captures_array = false;
    lying.captures_omni = true;
    lying.clock.offset_s = 3e-9;  // claims ideal yet declares an offset
    CHECK_THROWS_AS(build_schedule({tx, lying}, &sweep, cfg, 1e-3, 10),
                    std::invalid_argument);

    NodeSpec adrift = lying;
    adrift.clock = NodeClock::preset(ClockSource::rubidium);
    adrift.clock.offset_s = 1e-6;  // skew this large aliases the captures
    CHECK_THROWS_WITH_AS(build_schedule({tx, adrift}, &sweep, cfg, 1e-3, 10),
                         doctest::Contains("contain their frames"), std::invalid_argument);
}

TEST_CASE("the digest pins the layout and nothing else") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    const auto nodes = omni_pair(NodeClock::preset(ClockSource::gnss, 3));
    const TxRxSchedule a = build_schedule(nodes, nullptr, cfg, 1e-3, 5);
    const TxRxSchedule b = build_schedule(nodes, nullptr, cfg, 1e-3, 5);
    CHECK(schedule_digest(a) == schedule_digest(b));
    CHECK(schedule_digest(a).size() == 16);

    const TxRxSchedule other = build_schedule(nodes, nullptr, cfg, 2e-3, 5);
    CHECK(schedule_digest(other) != schedule_digest(a));
}

TEST_CASE("receiver drift walks the measured delay across bins") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    NodeClock drifting = NodeClock::preset(ClockSource::rubidium);
    drifting.drift = 1e-9;

    const TxRxSchedule sched =
        build_schedule(omni_pair(drifting), nullptr, cfg, 30.0, 2);
    const Recording rec = run_campaign(sched, los_scene_3m(), cfg, quiet_inputs(cfg));
    REQUIRE(rec.records.size() == 2);

    const int bin_start = peak_bin(rec.records[0]);
    const int bin_end = peak_bin(rec.records[1]);
    CHECK(bin_start == 4);  // three metres of flight, 2.49 ns taps
    // thirty seconds of 1e-9 drift is 30 ns of skew, twelve taps late
    CHECK(bin_end - bin_start == 12);
}

TEST_CASE("skew under half a tap leaves every peak bin untouched") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    NodeClock slightly_off = NodeClock::preset(ClockSource::rubidium);
    slightly_off.drift = 0.0;
    slightly_off.offset_s = 1e-9;  // 0.4 taps, forever

    const TxRxSchedule ref_sched =
        build_schedule(omni_pair(NodeClock::preset(ClockSource::ideal)), nullptr, cfg, 1.0, 3);
    const TxRxSchedule off_sched =
        build_schedule(omni_pair(slightly_off), nullptr, cfg, 1.0, 3);

    const Recording ref = run_campaign(ref_sched, los_scene_3m(), cfg, quiet_inputs(cfg));
    const Recording off = run_campaign(off_sched, los_scene_3m(), cfg, quiet_inputs(cfg));
    REQUIRE(ref.records.size() == off.records.size());
    for (std::size_t i = 0; i < ref.records.size(); ++i)
        CHECK(peak_bin(off.records[i]) == peak_bin(ref.records[i]));
}

TEST_CASE("a full-duplex node's shared clock cancels out of the skew") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    NodeSpec mono;
    mono.node_id = 0;
    mono.transmits = true;
    mono.captures_omni = true;
    mono.full_duplex = true;
    mono.clock = NodeClock::preset(ClockSource::rubidium);
    mono.clock.offset_s = 100e-9;

    NodeSpec mono_ideal = mono;
    mono_ideal.clock = NodeClock::preset(ClockSource::ideal);

    const TxRxSchedule with_offset = build_schedule({mono}, nullptr, cfg, 1.0, 1);
    const TxRxSchedule without = build_schedule({mono_ideal}, nullptr, cfg, 1.0, 1);
    const Recording a = run_campaign(with_offset, los_scene_3m(), cfg, quiet_inputs(cfg));
    const Recording b = run_campaign(without, los_scene_3m(), cfg, quiet_inputs(cfg));
    REQUIRE(a.records.size() == 1);
    CHECK(a.records[0].taps == b.records[0].taps);
}

TEST_CASE("identical campaigns produce identical bytes") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    const auto nodes = omni_pair(NodeClock::preset(ClockSource::gnss, 11));
    const TxRxSchedule sched = build_schedule(nodes, nullptr, cfg, 1e-3, 2);

    CampaignInputs inputs;
    inputs.fe_omni = FrontEndModel::ideal(cfg.zc_length, 1.5, true);
    inputs.master_seed = 1234;

    const Scene scene = los_scene_3m();
    const auto bytes_a = write_recording(run_campaign(sched, scene, cfg, inputs));
    const auto bytes_b = write_recording(run_campaign(sched, scene, cfg, inputs));
    CHECK(bytes_a == bytes_b);

    inputs.master_seed = 1235;
    const auto bytes_c = write_recording(run_campaign(sched, scene, cfg, inputs));
    CHECK(bytes_a != bytes_c);
}

TEST_CASE("uncalibrated runs are flagged; calibrated runs read true power") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    const TxRxSchedule sched =
        build_schedule(omni_pair(NodeClock::preset(ClockSource::ideal)), nullptr, cfg, 1.0, 1);
    const Scene scene = los_scene_3m();

    FrontEndModel fe = FrontEndModel::seeded(63, cfg.zc_length, {});
    fe.noise_enabled = false;
    CampaignInputs inputs;
    inputs.fe_omni = fe;

    const Recording raw = run_campaign(sched, scene, cfg, inputs);
    CHECK(raw.header.calibration_pending);
    CHECK(raw.header.calibration_json.empty());
    CHECK(raw.header.scene_digest.size() == 16);

    CalOptions cal_opts;
    cal_opts.noise = false;
    const Calibration cal = run_calibration(cfg, fe, nullptr, cal_opts);
    inputs.calibration = &cal;
    const Recording calibrated = run_campaign(sched, scene, cfg, inputs);
    CHECK(!calibrated.header.calibration_pending);
    CHECK(!calibrated.header.calibration_json.empty());

    const Cir cir = cir_from_record(calibrated.records[0], cfg);
    const auto total = total_power_dbm(noise_threshold(pdp_from_cir(cir)));
    REQUIRE(total.has_value());
    CHECK(std::abs(*total - (43.0 - 58.8843858947)) <= 0.05);
}

TEST_CASE("scene motion must span the campaign") {
    const SounderConfig cfg = SounderConfig::defaults(7.0);
    const TxRxSchedule sched =
        build_schedule(omni_pair(NodeClock::preset(ClockSource::ideal)), nullptr, cfg, 16.0, 2);

    Scene scene = los_scene_3m();
    Track walk;
    walk.points = {{0.0, {3.0, 0.0, 0.0}}, {30.0, {33.0, 0.0, 0.0}}};
    scene.rx.track = walk;  // ends at 30 s, the schedule runs to 32 s
    CHECK_THROWS_WITH_AS(run_campaign(sched, scene, cfg, quiet_inputs(cfg)),
                         doctest::Contains("track covers"), std::invalid_argument);
}

TEST_CASE("records carry the capture identity and the full delay grid") {
    const SounderConfig cfg = SounderConfig::defaults(8.3);
    const auto beams = build_beam_table(cfg.band);
    const ScanSchedule sweep = build_scan_schedule(beams, cfg);

    NodeSpec tx;
    tx.node_id = 0;
    tx.transmits = true;
    NodeSpec rx;
    rx.node_id = 1;
    rx.captures_omni = true;
    rx.captures_array = true;

    const TxRxSchedule sched = build_schedule({tx, rx}, &sweep, cfg, 1e-3, 1);

    CampaignInputs inputs = quiet_inputs(cfg);
    inputs.fe_array = FrontEndModel::ideal(cfg.zc_length, 8.3, false);
    const Recording rec = run_campaign(sched, los_scene_3m(), cfg, inputs);
    REQUIRE(rec.records.size() == 61);

    int omni_records = 0;
    for (const auto& r : rec.records) {
        CHECK(r.taps.size() == static_cast<std::size_t>(cfg.zc_length));
        if (r.beam_id == kOmniBeamId) {
            ++omni_records;
            CHECK(r.array_id == kOmniArrayId);
            CHECK(r.timestamp_ns == 0);
        } else {
            CHECK(r.array_id < 4);
            CHECK(r.beam_id < 60);
        }
    }
    CHECK(omni_records == 1);
}
