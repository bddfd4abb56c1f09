// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "csound/analysis.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"
#include "csound/recording.hpp"
#include "csound/rng.hpp"

using namespace csound;

namespace {

CirRecord make_record(std::uint64_t t_ns, std::uint16_t node, std::uint8_t array,
                      std::uint16_t beam, int n_taps, Rng& rng) {
    CirRecord r;
    r.timestamp_ns = t_ns;
    r.node_id = node;
    r.array_id = array;
    r.beam_id = beam;
    r.power_reference_dbm = static_cast<float>(rng.uniform() * 50.0);
    for (int i = 0; i < n_taps; ++i)
        r.taps.emplace_back(static_cast<float>(rng.normal()), static_cast<float>(rng.normal()));
    return r;
}

Recording sample_recording(int n_records, int n_taps) {
    Recording rec;
    rec.header.config_json = config_to_json(SounderConfig::defaults(7.0));
    rec.header.scene_digest = "0011223344556677";
    rec.header.schedule_digest = "8899aabbccddeeff";
    rec.header.calibration_pending = true;
    Rng rng(55);
    for (int i = 0; i < n_records; ++i) {
        // spread records over an omni stream and four array streams
        const std::uint8_t array = (i % 5 == 0) ? kOmniArrayId : std::uint8_t(i % 5 - 1);
        const std::uint16_t beam = (i % 5 == 0) ? kOmniBeamId : std::uint16_t(i % 20);
        rec.records.push_back(make_record(1000ull * (1 + i), 1, array, beam, n_taps, rng));
    }
    return rec;
}

bool records_equal(const CirRecord& a, const CirRecord& b) {
    return a.timestamp_ns == b.timestamp_ns && a.node_id == b.node_id &&
           a.array_id == b.array_id && a.beam_id == b.beam_id &&
           a.power_reference_dbm == b.power_reference_dbm && a.taps == b.taps;
}

}  // namespace

TEST_CASE("an empty recording round-trips its header") {
    Recording rec;
    rec.header.config_json = config_to_json(SounderConfig::defaults(14.5));
    rec.header.scene_digest = "deadbeefdeadbeef";
    rec.header.schedule_digest = "feedfacefeedface";
    rec.header.calibration_pending = false;

    const auto bytes = write_recording(rec);
    const Recording back = read_recording(bytes);
    CHECK(back.records.empty());
    CHECK(!back.truncated_at_offset.has_value());
    CHECK(back.header.scene_digest == rec.header.scene_digest);
    CHECK(back.header.schedule_digest == rec.header.schedule_digest);
    CHECK(back.header.calibration_pending == rec.header.calibration_pending);
    CHECK(nlohmann::json::parse(back.header.config_json) ==
          nlohmann::json::parse(rec.header.config_json));
    CHECK(back.header.calibration_json.empty());
}

TEST_CASE("a thousand records come back in order, bit for bit") {
    const Recording rec = sample_recording(1000, 16);
    const auto bytes = write_recording(rec);
    const Recording back = read_recording(bytes);

    REQUIRE(back.records.size() == rec.records.size());
    for (std::size_t i = 0; i < rec.records.size(); ++i) {
        CAPTURE(i);
        REQUIRE(records_equal(back.records[i], rec.records[i]));
    }
    // and the container itself is deterministic
    CHECK(write_recording(back) == bytes);
}

TEST_CASE("stream ordering and tap-count invariants are enforced on write") {
    Recording rec = sample_recording(10, 8);

    Recording ragged = rec;
    ragged.records[3].taps.pop_back();
    CHECK_THROWS_WITH_AS(write_recording(ragged), doctest::Contains("taps"),
                         std::runtime_error);

    Recording stalled = rec;
    // two records of one (node, array) stream at the same instant
    stalled.records[5].timestamp_ns = stalled.records[0].timestamp_ns;
    stalled.records[5].node_id = stalled.records[0].node_id;
    stalled.records[5].array_id = stalled.records[0].array_id;
    CHECK_THROWS_WITH_AS(write_recording(stalled), doctest::Contains("time ordering"),
                         std::runtime_error);

    // the same instant on different arrays is two streams, which is fine
    Recording parallel = rec;
    parallel.records[1].timestamp_ns = parallel.records[0].timestamp_ns;
    CHECK(parallel.records[1].array_id != parallel.records[0].array_id);
    CHECK_NOTHROW(write_recording(parallel));
}

TEST_CASE("malformed containers are named with their byte offset") {
    const auto bytes = write_recording(sample_recording(3, 8));

    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_WITH_AS(read_recording(corrupt), doctest::Contains("offset 0"),
                         std::runtime_error);

    corrupt = bytes;
    corrupt[4] = 99;
    CHECK_THROWS_WITH_AS(read_recording(corrupt), doctest::Contains("offset 4"),
                         std::runtime_error);

    corrupt = bytes;
    corrupt[10] = 'X';  // stomp the opening brace of the JSON blob
    CHECK_THROWS_WITH_AS(read_recording(corrupt), doctest::Contains("JSON"),
                         std::runtime_error);

    corrupt = bytes;
    corrupt.push_back(0);
    CHECK_THROWS_WITH_AS(read_recording(corrupt), doctest::Contains("trailing"),
                         std::runtime_error);

    corrupt = bytes;
    corrupt.resize(corrupt.size() - 5);
    CHECK_THROWS_WITH_AS(read_recording(corrupt), doctest::Contains("truncated"),
                         std::runtime_error);
}

TEST_CASE("salvage keeps every complete record before a truncation") {
    const Recording rec = sample_recording(5, 8);
    auto bytes = write_recording(rec);
    const std::size_t record_size = 8 + 2 + 1 + 2 + 4 + 4 + 8ull * 8;
    const std::size_t body_start = bytes.size() - 5 * record_size;

    bytes.resize(bytes.size() - 3);  // tear the last record open
    ReadOptions salvage;
    salvage.salvage = true;
    const Recording saved = read_recording(bytes, salvage);
    REQUIRE(saved.records.size() == 4);
    REQUIRE(saved.truncated_at_offset.has_value());
    CHECK(*saved.truncated_at_offset == body_start + 4 * record_size);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(records_equal(saved.records[i], rec.records[i]));

    // salvage does not excuse a torn header
    auto stub = write_recording(rec);
    stub.resize(8);
    CHECK_THROWS_AS(read_recording(stub, salvage), std::runtime_error);
}

TEST_CASE("fuzzed bytes never crash the reader") {
    const auto good = write_recording(sample_recording(20, 12));
    Rng rng(777);
    int parsed = 0, rejected = 0;
    for (int round = 0; round < 300; ++round) {
        auto bytes = good;
        const int mode = static_cast<int>(rng.next_u64() % 3);
        if (mode == 0) {
            for (int k = 0; k < 3; ++k) {
                const std::size_t at = rng.next_u64() % bytes.size();
                bytes[at] = static_cast<std::uint8_t>(rng.next_u64());
            }
        } else if (mode == 1) {
            bytes.resize(rng.next_u64() % bytes.size());
        } else {
            bytes.assign(rng.next_u64() % 64, static_cast<std::uint8_t>(rng.next_u64()));
        }
        ReadOptions opts;
        opts.salvage = (round % 2 == 0);
        try {
            (void)read_recording(bytes, opts);
            ++parsed;
        } catch (const std::exception&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 300);
    CHECK(rejected > 0);
}

TEST_CASE("the on-disk file is the same container") {
    const Recording rec = sample_recording(7, 8);
    const std::string path = "test_recording_tmp.csnd";
    save_recording(rec, path);
    const Recording back = load_recording(path);
    REQUIRE(back.records.size() == 7);
    CHECK(records_equal(back.records[6], rec.records[6]));
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_recording("no_such_dir/nothing.csnd"), std::runtime_error);
}

TEST_CASE("numbers are printed in their shortest exact form") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(-30.0) == "-30");
    // smallest normal included; subnormals are out of scope because stod
    // signals underflow for them even on a correct shortest rendering
    for (double v :
         {1.0 / 3.0, 2.4928e-9, 1e300, 2.2250738585072014e-308, -87.96682377359807}) {
        CAPTURE(v);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("profile CSV uses labeled columns and exact values") {
    Pdp pdp;
    pdp.power_mw = Eigen::ArrayXd::Zero(2);
    pdp.retained = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(2, false);
    pdp.threshold_applied = true;
    pdp.tap_spacing_s = 2e-9;
    pdp.power_mw(0) = 1.0;
    pdp.retained(0) = true;

    std::ostringstream os;
    export_pdp_csv(pdp, os);
    CHECK(os.str() == "delay_ns,power_dbm,retained\n0,0,1\n2,-inf,0\n");
}

TEST_CASE("the remaining exports carry their own headers") {
    std::vector<PapEntry> pap(2);
    pap[0] = {3, 0, -18.0, 0.0, 1e-5};
    pap[1] = {4, 1, 18.0, 0.0, 2e-5};
    std::ostringstream pap_os;
    export_pap_csv(pap, pap_os);
    const std::string pap_text = pap_os.str();
    CHECK(pap_text.rfind("beam_id,face,az_deg,el_deg,power_dbm\n", 0) == 0);
    CHECK(std::count(pap_text.begin(), pap_text.end(), '\n') == 3);

    Padp padp;
    padp.power_mw = Eigen::ArrayXXd::Zero(2, 3);
    padp.az_deg = Eigen::ArrayXd::Zero(2);
    padp.el_deg = Eigen::ArrayXd::Zero(2);
    padp.beam_ids = {0, 1};
    padp.tap_spacing_s = 2e-9;
    std::ostringstream padp_os;
    export_padp_csv(padp, padp_os);
    const std::string padp_text = padp_os.str();
    CHECK(padp_text.rfind("az_deg,el_deg,delay_ns,power_dbm\n", 0) == 0);
    CHECK(std::count(padp_text.begin(), padp_text.end(), '\n') == 7);

    PathLossFit fit;
    fit.ple = 2.0;
    fit.intercept_db = 49.3;
    fit.d0_m = 1.0;
    std::vector<PathLossSample> samples = {{3.0, 60.0}, {30.0, 80.0}};
    std::ostringstream fit_os;
    export_fit_csv(fit, samples, fit_os);
    const std::string fit_text = fit_os.str();
    CHECK(fit_text.rfind("distance_m,path_loss_db,fitted_db\n", 0) == 0);
    CHECK(std::count(fit_text.begin(), fit_text.end(), '\n') == 3);
}
