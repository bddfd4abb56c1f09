// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: configuration checks, waveform stats, campaign
// simulation, calibration, processing, and the analysis fits, glued to the
// recording format. Numeric output uses fixed formatting so runs with the
// same seed print identical bytes everywhere.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csound/analysis.hpp"
#include "csound/array.hpp"
#include "csound/calibration.hpp"
#include "csound/campaign.hpp"
#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"
#include "csound/recording.hpp"
#include "csound/scene.hpp"
#include "csound/waveform.hpp"

namespace {

using nlohmann::json;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Relative output paths land in $CSOUND_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("CSOUND_OUT_DIR");
    if (!dir || !*dir) return path;
    std::string base(dir);
    if (base.back() != '/') base += '/';
    return base + path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path);
}

csound::SounderConfig config_from_recording(const csound::Recording& rec) {
    if (rec.header.config_json.empty())
        throw std::runtime_error("recording carries no configuration");
    return csound::parse_config(rec.header.config_json);
}

std::optional<csound::Calibration> calibration_from_recording(const csound::Recording& rec) {
    if (rec.header.calibration_json.empty()) return std::nullopt;
    return csound::cal_from_json(rec.header.calibration_json);
}

// Build the hardware models for a simulated run: either clean chains or
// seeded impairments, always sharing one transmit chain.
struct FrontEnds {
    csound::FrontEndModel omni;
    csound::FrontEndModel array;
};

FrontEnds make_front_ends(const csound::SounderConfig& cfg, std::uint64_t seed,
                          bool impairments, bool noise) {
    FrontEnds fe;
    if (impairments) {
        csound::FrontEndModel::Options opts;
        opts.noise_enabled = noise;
        opts.noise_figure_db = cfg.rx_noise_figure_omni_db;
        fe.omni = csound::FrontEndModel::seeded(csound::derive_seed(seed, 0xfeull, 0),
                                                cfg.zc_length, opts);
        opts.noise_figure_db = cfg.rx_noise_figure_array_db;
        fe.array = csound::FrontEndModel::seeded(csound::derive_seed(seed, 0xfeull, 1),
                                                 cfg.zc_length, opts);
        fe.array.tx_ripple = fe.omni.tx_ripple;  // one transmitter feeds both links
    } else {
        fe.omni = csound::FrontEndModel::ideal(cfg.zc_length, cfg.rx_noise_figure_omni_db, noise);
        fe.array = csound::FrontEndModel::ideal(cfg.zc_length, cfg.rx_noise_figure_array_db, noise);
    }
    return fe;
}

double node_distance_at(const csound::Scene& scene, double t_s) {
    return (scene.rx.position_at(t_s) - scene.tx.position_at(t_s)).norm();
}

// --- subcommand bodies ----------------------------------------------------

int cmd_validate(const std::string& config_path) {
    csound::SounderConfig cfg = csound::load_config(config_path);
    const auto violations = csound::validate_config(cfg);
    if (violations.empty()) {
        std::cout << "configuration valid: " << fmt("%.1f", cfg.band.center_frequency_ghz)
                  << " GHz, " << cfg.zc_length << " subcarriers, "
                  << fmt("%.1f", cfg.occupied_bandwidth_hz() / 1e6) << " MHz occupied\n";
        return 0;
    }
    std::cout << violations.size() << " violation(s):\n";
    for (const auto& v : violations) std::cout << "  - " << v << "\n";
    return 1;
}

void cmd_waveform(const std::string& config_path, int root, const std::string& format) {
    csound::SounderConfig cfg = config_path.empty() ? csound::SounderConfig::defaults()
                                                    : csound::load_config(config_path);
    csound::require_valid(cfg);
    csound::TxFrame frame = csound::build_sounding_frame(cfg, root);
    double peak = 0.0;
    for (Eigen::Index i = 0; i < frame.baseband.samples.size(); ++i)
        peak = std::max(peak, std::norm(frame.baseband.samples[i]));
    const double papr_db = 10.0 * std::log10(peak / frame.baseband.digital_power());

    if (format == "json") {
        json j;
        j["zc_length"] = cfg.zc_length;
        j["root"] = root;
        j["occupied_bandwidth_hz"] = cfg.occupied_bandwidth_hz();
        j["sample_rate_hz"] = cfg.sample_rate_hz();
        j["tap_spacing_s"] = cfg.tap_spacing_s();
        j["frame_duration_s"] = cfg.frame_duration_s();
        j["samples_per_frame"] = cfg.samples_per_frame();
        j["papr_db"] = papr_db;
        j["processing_gain_db"] = cfg.processing_gain_db();
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::cout << "sequence length:     " << cfg.zc_length << " (root " << root << ")\n"
              << "occupied bandwidth:  " << fmt("%.3f", cfg.occupied_bandwidth_hz() / 1e6)
              << " MHz\n"
              << "sample rate:         " << fmt("%.3f", cfg.sample_rate_hz() / 1e6) << " MHz\n"
              << "tap spacing:         " << fmt("%.4f", cfg.tap_spacing_s() * 1e9) << " ns\n"
              << "frame duration:      " << fmt("%.3f", cfg.frame_duration_s() * 1e6) << " us\n"
              << "samples per frame:   " << cfg.samples_per_frame() << "\n"
              << "peak-to-average:     " << fmt("%.2f", papr_db) << " dB\n"
              << "processing gain:     " << fmt("%.2f", cfg.processing_gain_db()) << " dB\n";
}

struct SimulateArgs {
    std::string config_path, scene_path, out_path, clock = "ideal";
    std::uint64_t seed = 1;
    int snapshots = 1;
    double period_s = 0.0;  // 0 = minimum feasible
    double guard_s = 0.0;
    bool sweep = false, no_omni = false, impairments = false, no_noise = false, no_cal = false;
};

void cmd_simulate(const SimulateArgs& a) {
    csound::SounderConfig cfg = csound::load_config(a.config_path);
    csound::require_valid(cfg);
    csound::Scene scene = csound::load_scene(a.scene_path);
    if (a.sweep && cfg.band.omni_only())
        throw std::invalid_argument("simulate: --sweep needs a band with arrays");
    if (a.no_omni && !a.sweep)
        throw std::invalid_argument("simulate: --no-omni without --sweep captures nothing");

    FrontEnds fe = make_front_ends(cfg, a.seed, a.impairments, !a.no_noise);

    std::optional<csound::Calibration> cal;
    if (!a.no_cal) {
        csound::CalOptions copts;
        copts.seed = csound::derive_seed(a.seed, 0xca1ull);
        copts.noise = !a.no_noise;
        cal = csound::run_calibration(cfg, fe.omni, cfg.band.omni_only() ? nullptr : &fe.array,
                                      copts);
    }

    std::vector<csound::NodeSpec> nodes(2);
    nodes[0].node_id = 0;
    nodes[0].transmits = true;
    nodes[1].node_id = 1;
    nodes[1].captures_omni = !a.no_omni;
    nodes[1].captures_array = a.sweep;
    nodes[1].clock = csound::NodeClock::preset(csound::clock_source_from_string(a.clock),
                                               csound::derive_seed(a.seed, 0xc10ull));

    std::optional<csound::ScanSchedule> sweep_schedule;
    if (a.sweep) {
        auto beams = csound::build_beam_table(cfg.band);
        sweep_schedule = csound::build_scan_schedule(beams, cfg, a.guard_s);
    }
    double period = a.period_s;
    if (period <= 0.0) {
        period = cfg.frame_duration_s();
        if (sweep_schedule) period = std::max(period, sweep_schedule->total_duration_s);
    }
    csound::TxRxSchedule schedule = csound::build_schedule(
        nodes, sweep_schedule ? &*sweep_schedule : nullptr, cfg, period, a.snapshots);

    csound::CampaignInputs inputs;
    inputs.fe_omni = fe.omni;
    if (a.sweep) inputs.fe_array = fe.array;
    inputs.calibration = cal ? &*cal : nullptr;
    inputs.master_seed = a.seed;

    csound::Recording rec = csound::run_campaign(schedule, scene, cfg, inputs);
    const std::string out = resolve_out(a.out_path);
    csound::save_recording(rec, out);
    std::cout << "wrote " << rec.records.size() << " records to " << out << "\n"
              << "scene digest:    " << rec.header.scene_digest << "\n"
              << "schedule digest: " << rec.header.schedule_digest << "\n";
}

struct CalibrateArgs {
    std::string config_path, out_path, recording_path;
    std::uint64_t seed = 1;
    double distance_m = 3.0;
    bool impairments = false, no_noise = false;
};

void cmd_calibrate(const CalibrateArgs& a) {
    csound::SounderConfig cfg = csound::load_config(a.config_path);
    csound::require_valid(cfg);

    csound::Calibration cal;
    if (!a.recording_path.empty()) {
        // offset-only calibration from a recorded reference capture
        csound::Recording rec = csound::load_recording(a.recording_path);
        const csound::CirRecord* omni = nullptr;
        for (const auto& r : rec.records)
            if (r.beam_id == csound::kOmniBeamId) { omni = &r; break; }
        if (!omni) throw std::runtime_error("calibrate: recording has no omni capture");
        csound::Cir cir = csound::cir_from_record(*omni, cfg);
        csound::Pdp pdp = csound::pdp_from_cir(cir);
        cal.report.center_frequency_ghz = cfg.band.center_frequency_ghz;
        cal.report.reference_distance_m = a.distance_m;
        cal.report.incident = csound::cal_incident_power(
            pdp, a.distance_m, cfg.band.center_frequency_ghz, cfg.tx_eirp_dbm.value);
        cal.coefficients.omni_offset_db = cal.report.incident.offset_db;
    } else {
        FrontEnds fe = make_front_ends(cfg, a.seed, a.impairments, !a.no_noise);
        csound::CalOptions copts;
        copts.reference_distance_m = a.distance_m;
        copts.seed = csound::derive_seed(a.seed, 0xca1ull);
        copts.noise = !a.no_noise;
        cal = csound::run_calibration(cfg, fe.omni, cfg.band.omni_only() ? nullptr : &fe.array,
                                      copts);
        std::cout << "tx ripple:  " << fmt("%.3f", cal.report.tx.pre_ripple_db) << " -> "
                  << fmt("%.3f", cal.report.tx.post_ripple_db) << " dB peak-to-peak\n"
                  << "rx ripple:  " << fmt("%.3f", cal.report.rx_omni.pre_ripple_db) << " -> "
                  << fmt("%.3f", cal.report.rx_omni.post_ripple_db) << " dB (omni chain)\n";
        if (cal.report.rx_array)
            std::cout << "            " << fmt("%.3f", cal.report.rx_array->pre_ripple_db)
                      << " -> " << fmt("%.3f", cal.report.rx_array->post_ripple_db)
                      << " dB (array chain)\n";
    }
    std::cout << "incident at " << fmt("%.1f", a.distance_m)
              << " m: expected " << fmt("%.2f", cal.report.incident.expected_dbm)
              << " dBm, measured " << fmt("%.2f", cal.report.incident.measured_dbm)
              << " dBm, offset " << fmt("%.3f", cal.report.incident.offset_db) << " dB\n";
    for (std::size_t f = 0; f < cal.report.faces.size(); ++f)
        std::cout << "face " << f << " offset: "
                  << fmt("%.3f", cal.coefficients.face_offset_db[f]) << " dB\n";
    if (!a.out_path.empty()) {
        const std::string out = resolve_out(a.out_path);
        write_text(out, csound::cal_to_json(cal));
        std::cout << "wrote calibration to " << out << "\n";
    }
}

struct ProcessArgs {
    std::string recording_path, out_path, format = "json";
    double margin_db = 6.0;
};

void cmd_process(const ProcessArgs& a) {
    csound::Recording rec = csound::load_recording(a.recording_path);
    csound::SounderConfig cfg = config_from_recording(rec);

    json rows = json::array();
    std::ostringstream csv;
    csv << "timestamp_ns,node_id,array_id,beam_id,n_retained,total_power_dbm\n";
    for (const auto& r : rec.records) {
        csound::Pdp pdp = csound::noise_threshold(
            csound::pdp_from_cir(csound::cir_from_record(r, cfg)), a.margin_db);
        const auto total = csound::total_power_dbm(pdp);
        int n_retained = 0;
        for (Eigen::Index i = 0; i < pdp.retained.size(); ++i)
            if (pdp.retained[i]) ++n_retained;

        json row;
        row["timestamp_ns"] = r.timestamp_ns;
        row["node_id"] = r.node_id;
        row["array_id"] = r.array_id;
        row["beam_id"] = r.beam_id;
        row["n_retained"] = n_retained;
        row["total_power_dbm"] = total ? json(*total) : json(nullptr);
        rows.push_back(row);

        csv << r.timestamp_ns << ',' << r.node_id << ',' << int(r.array_id) << ',' << r.beam_id
            << ',' << n_retained << ',' << (total ? csound::format_double(*total) : "") << '\n';
    }
    json out_doc;
    out_doc["margin_db"] = a.margin_db;
    out_doc["records"] = rows;
    const std::string payload = a.format == "csv" ? csv.str() : out_doc.dump(2) + "\n";
    if (a.out_path.empty()) {
        std::cout << payload;
    } else {
        const std::string out = resolve_out(a.out_path);
        write_text(out, payload);
        std::cout << "processed " << rec.records.size() << " records -> " << out << "\n";
    }
}

struct FitPathLossArgs {
    std::string recording_path, scene_path, out_path, format = "csv";
    double d0_m = 1.0, margin_db = 6.0;
    bool anchored = false;
};

void cmd_fit_pathloss(const FitPathLossArgs& a) {
    csound::Recording rec = csound::load_recording(a.recording_path);
    csound::SounderConfig cfg = config_from_recording(rec);
    csound::Scene scene = csound::load_scene(a.scene_path);

    std::vector<csound::PathLossSample> samples;
    int skipped = 0;
    for (const auto& r : rec.records) {
        if (r.beam_id != csound::kOmniBeamId) continue;
        csound::Pdp pdp = csound::noise_threshold(
            csound::pdp_from_cir(csound::cir_from_record(r, cfg)), a.margin_db);
        const auto total = csound::total_power_dbm(pdp);
        if (!total) {
            ++skipped;
            continue;
        }
        const double t = static_cast<double>(r.timestamp_ns) * 1e-9;
        csound::PathLossSample s;
        s.distance_m = node_distance_at(scene, t);
        s.path_loss_db = csound::path_loss_from_power(cfg.tx_eirp_dbm.value, *total);
        samples.push_back(s);
    }
    if (skipped > 0)
        std::cerr << "note: " << skipped << " capture(s) had no retained power\n";

    csound::PathLossFit fit = a.anchored
        ? csound::fit_path_loss_anchored(samples, cfg.band.center_frequency_ghz, a.d0_m)
        : csound::fit_path_loss(samples, a.d0_m);
    std::cout << "ple = " << fmt("%.2f", fit.ple) << "\n"
              << "sigma_db = " << fmt("%.2f", fit.sigma_db) << "\n"
              << "intercept_db = " << fmt("%.2f", fit.intercept_db) << " at d0 = "
              << fmt("%.1f", fit.d0_m) << " m" << (fit.anchored ? " (anchored)" : "") << "\n"
              << "n = " << fit.n_samples << "\n";

    if (!a.out_path.empty()) {
        const std::string out = resolve_out(a.out_path);
        if (a.format == "json") {
            json j;
            j["ple"] = fit.ple;
            j["sigma_db"] = fit.sigma_db;
            j["intercept_db"] = fit.intercept_db;
            j["d0_m"] = fit.d0_m;
            j["anchored"] = fit.anchored;
            j["n_samples"] = fit.n_samples;
            write_text(out, j.dump(2) + "\n");
        } else {
            std::ostringstream os;
            csound::export_fit_csv(fit, samples, os);
            write_text(out, os.str());
        }
        std::cout << "wrote " << out << "\n";
    }
}

struct PadpArgs {
    std::string recording_path, out_path, format = "csv";
    int snapshot = 0;
    double margin_db = 6.0;
};

void cmd_padp(const PadpArgs& a) {
    csound::Recording rec = csound::load_recording(a.recording_path);
    csound::SounderConfig cfg = config_from_recording(rec);
    if (cfg.band.omni_only()) throw std::runtime_error("padp: recording is from an omni-only band");
    const auto beams = csound::build_beam_table(cfg.band);

    std::vector<const csound::CirRecord*> sweep_records;
    for (const auto& r : rec.records)
        if (r.beam_id != csound::kOmniBeamId) sweep_records.push_back(&r);
    const std::size_t per_sweep = beams.size();
    if (sweep_records.empty() || sweep_records.size() % per_sweep != 0)
        throw std::runtime_error("padp: recording does not hold complete beam sweeps");
    const std::size_t n_sweeps = sweep_records.size() / per_sweep;
    if (a.snapshot < 0 || static_cast<std::size_t>(a.snapshot) >= n_sweeps)
        throw std::runtime_error("padp: snapshot out of range (recording holds " +
                                 std::to_string(n_sweeps) + " sweeps)");

    std::vector<csound::Pdp> pdps;
    std::vector<csound::BeamDefinition> defs;
    for (std::size_t i = 0; i < per_sweep; ++i) {
        const csound::CirRecord& r = *sweep_records[a.snapshot * per_sweep + i];
        const auto it = std::find_if(beams.begin(), beams.end(), [&](const auto& b) {
            return b.beam_id == static_cast<int>(r.beam_id);
        });
        if (it == beams.end())
            throw std::runtime_error("padp: record references unknown beam " +
                                     std::to_string(r.beam_id));
        defs.push_back(*it);
        pdps.push_back(csound::noise_threshold(
            csound::pdp_from_cir(csound::cir_from_record(r, cfg)), a.margin_db));
    }
    csound::Padp padp = csound::build_padp(pdps, defs);

    std::string payload;
    if (a.format == "json") {
        json j;
        j["tap_spacing_s"] = padp.tap_spacing_s;
        j["beam_ids"] = padp.beam_ids;
        j["az_deg"] = std::vector<double>(padp.az_deg.data(), padp.az_deg.data() + padp.az_deg.size());
        j["el_deg"] = std::vector<double>(padp.el_deg.data(), padp.el_deg.data() + padp.el_deg.size());
        json rows = json::array();
        for (Eigen::Index r = 0; r < padp.power_mw.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index t = 0; t < padp.power_mw.cols(); ++t) row.push_back(padp.power_mw(r, t));
            rows.push_back(row);
        }
        j["power_mw"] = rows;
        payload = j.dump() + "\n";
    } else {
        std::ostringstream os;
        csound::export_padp_csv(padp, os);
        payload = os.str();
    }
    if (a.out_path.empty()) {
        std::cout << payload;
    } else {
        const std::string out = resolve_out(a.out_path);
        write_text(out, payload);
        std::cout << "wrote " << out << "\n";
    }
}

struct IsolateArgs {
    std::string recording_path, scene_path, out_path, format = "csv";
    int target = 0;
    double half_width_ns = 25.0;
};

csound::TargetIsolation isolate_from_recording(const IsolateArgs& a, csound::Recording& rec,
                                               csound::SounderConfig& cfg, csound::Scene& scene,
                                               std::vector<csound::Pdp>& pdps,
                                               std::vector<double>& delays,
                                               std::vector<double>& times) {
    rec = csound::load_recording(a.recording_path);
    cfg = config_from_recording(rec);
    scene = csound::load_scene(a.scene_path);
    if (a.target < 0 || static_cast<std::size_t>(a.target) >= scene.targets.size())
        throw std::invalid_argument("target index out of range for the scene");
    const csound::SceneTarget& tgt = scene.targets[static_cast<std::size_t>(a.target)];

    for (const auto& r : rec.records) {
        if (r.beam_id != csound::kOmniBeamId) continue;
        const double t = static_cast<double>(r.timestamp_ns) * 1e-9;
        pdps.push_back(csound::pdp_from_cir(csound::cir_from_record(r, cfg)));
        delays.push_back(csound::bistatic_delay_s(scene.tx.position_at(t),
                                                  scene.rx.position_at(t),
                                                  tgt.track.position_at(t)));
        times.push_back(t);
    }
    return csound::isolate_target(pdps, delays, a.half_width_ns * 1e-9);
}

void cmd_isolate_target(const IsolateArgs& a) {
    csound::Recording rec;
    csound::SounderConfig cfg;
    csound::Scene scene;
    std::vector<csound::Pdp> pdps;
    std::vector<double> delays, times;
    csound::TargetIsolation iso = isolate_from_recording(a, rec, cfg, scene, pdps, delays, times);

    std::ostringstream csv;
    csv << "t_s,expected_delay_ns,target_power_dbm\n";
    json rows = json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double p_mw = iso.target_power_mw[static_cast<Eigen::Index>(i)];
        const double p_dbm = p_mw > 0.0 ? 10.0 * std::log10(p_mw)
                                        : -std::numeric_limits<double>::infinity();
        csv << csound::format_double(times[i]) << ','
            << csound::format_double(delays[i] * 1e9) << ','
            << csound::format_double(p_dbm) << '\n';
        json row;
        row["t_s"] = times[i];
        row["expected_delay_ns"] = delays[i] * 1e9;
        row["target_power_mw"] = p_mw;
        rows.push_back(row);
    }
    const std::string payload = a.format == "json" ? rows.dump(2) + "\n" : csv.str();
    if (a.out_path.empty()) {
        std::cout << payload;
    } else {
        const std::string out = resolve_out(a.out_path);
        write_text(out, payload);
        std::cout << "wrote " << times.size() << " snapshots -> " << out << "\n";
    }
}

struct FitRcsArgs {
    IsolateArgs iso;
    double g_tx_dbi = 0.0, g_rx_dbi = 0.0;
};

void cmd_fit_rcs(const FitRcsArgs& a) {
    csound::Recording rec;
    csound::SounderConfig cfg;
    csound::Scene scene;
    std::vector<csound::Pdp> pdps;
    std::vector<double> delays, times;
    csound::TargetIsolation iso =
        isolate_from_recording(a.iso, rec, cfg, scene, pdps, delays, times);
    const csound::SceneTarget& tgt = scene.targets[static_cast<std::size_t>(a.iso.target)];

    std::vector<double> gammas;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double p_mw = iso.target_power_mw[static_cast<Eigen::Index>(i)];
        if (!(p_mw > 0.0)) continue;
        csound::SensingGeometry geom;
        geom.tx = scene.tx.position_at(times[i]);
        geom.rx = scene.rx.position_at(times[i]);
        geom.target = tgt.track.position_at(times[i]);
        gammas.push_back(csound::rcs_gamma_dbsm(10.0 * std::log10(p_mw), geom,
                                                cfg.band.center_frequency_ghz,
                                                cfg.tx_eirp_dbm.value, a.g_tx_dbi, a.g_rx_dbi));
    }
    csound::RcsModel model = csound::fit_rcs(gammas);
    std::cout << "n = " << gammas.size() << " of " << times.size() << " snapshots\n"
              << "mu_dbsm = " << fmt("%.2f", model.mu_dbsm) << "\n"
              << "sigma_dbsm = " << fmt("%.2f", model.sigma_dbsm) << "\n";
    if (!a.iso.out_path.empty()) {
        json j;
        j["mu_dbsm"] = model.mu_dbsm;
        j["sigma_dbsm"] = model.sigma_dbsm;
        j["n_used"] = gammas.size();
        const std::string out = resolve_out(a.iso.out_path);
        write_text(out, j.dump(2) + "\n");
        std::cout << "wrote " << out << "\n";
    }
}

// Defaults document the assumptions behind the headline path-loss reach:
// 15 dBi of effective receive gain and 3 dB of post-processing SNR.
struct LinkBudgetArgs {
    std::string config_path, port = "auto";
    double g_rx_dbi = 15.0, snr_min_db = 3.0;
};

void cmd_link_budget(const LinkBudgetArgs& a) {
    csound::SounderConfig cfg = csound::load_config(a.config_path);
    csound::require_valid(cfg);
    bool array_port;
    if (a.port == "array") {
        if (cfg.band.omni_only())
            throw std::invalid_argument("link-budget: this band has no array port");
        array_port = true;
    } else if (a.port == "omni") {
        array_port = false;
    } else {
        array_port = !cfg.band.omni_only();
    }
    csound::LinkBudget b = csound::link_budget(cfg, a.g_rx_dbi, a.snr_min_db, array_port);
    std::cout << "eirp:             " << fmt("%.1f", b.tx_eirp_dbm) << " dBm\n"
              << "rx gain:          " << fmt("%.1f", b.rx_gain_dbi) << " dBi\n"
              << "processing gain:  " << fmt("%.2f", b.processing_gain_db) << " dB\n"
              << "noise floor:      " << fmt("%.2f", b.noise_floor_dbm) << " dBm ("
              << (array_port ? "array" : "omni") << " chain)\n"
              << "required snr:     " << fmt("%.1f", b.snr_min_db) << " dB\n"
              << "maximum path loss: " << fmt("%.1f", b.max_path_loss_db) << " dB\n";
}

struct ExportArgs {
    std::string recording_path, out_path, format = "csv";
    int index = 0;
    double margin_db = 6.0;
    bool raw = false;
};

void cmd_export(const ExportArgs& a) {
    csound::Recording rec = csound::load_recording(a.recording_path);
    csound::SounderConfig cfg = config_from_recording(rec);
    if (a.index < 0 || static_cast<std::size_t>(a.index) >= rec.records.size())
        throw std::invalid_argument("export: record index out of range (recording holds " +
                                    std::to_string(rec.records.size()) + ")");
    csound::Pdp pdp = csound::pdp_from_cir(csound::cir_from_record(
        rec.records[static_cast<std::size_t>(a.index)], cfg));
    if (!a.raw) pdp = csound::noise_threshold(pdp, a.margin_db);

    std::string payload;
    if (a.format == "json") {
        json j;
        j["tap_spacing_s"] = pdp.tap_spacing_s;
        j["threshold_applied"] = pdp.threshold_applied;
        j["power_mw"] = std::vector<double>(pdp.power_mw.data(),
                                            pdp.power_mw.data() + pdp.power_mw.size());
        if (pdp.threshold_applied) {
            std::vector<int> retained(pdp.retained.size());
            for (Eigen::Index i = 0; i < pdp.retained.size(); ++i) retained[i] = pdp.retained[i];
            j["retained"] = retained;
        }
        payload = j.dump() + "\n";
    } else {
        std::ostringstream os;
        csound::export_pdp_csv(pdp, os);
        payload = os.str();
    }
    const std::string out = resolve_out(a.out_path);
    if (out.empty()) {
        std::cout << payload;
    } else {
        write_text(out, payload);
        std::cout << "wrote " << out << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"software twin of a wideband FR3 ISAC channel sounder"};
    app.require_subcommand(1);
    int rc = 0;

    // validate
    std::string validate_config_path;
    auto* validate = app.add_subcommand("validate", "check a configuration file");
    validate->add_option("--config", validate_config_path, "configuration JSON")->required();
    validate->callback([&] { rc = cmd_validate(validate_config_path); });

    // waveform
    std::string wf_config, wf_format = "text";
    int wf_root = 1;
    auto* waveform = app.add_subcommand("waveform", "print sounding-frame figures");
    waveform->add_option("--config", wf_config, "configuration JSON (defaults when omitted)");
    waveform->add_option("--root", wf_root, "sequence root");
    waveform->add_option("--format", wf_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    waveform->callback([&] { cmd_waveform(wf_config, wf_root, wf_format); });

    // simulate
    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run a campaign against a scene");
    simulate->add_option("--config", sim.config_path, "configuration JSON")->required();
    simulate->add_option("--scene", sim.scene_path, "scene JSON")->required();
    simulate->add_option("--out", sim.out_path, "output recording path")->required();
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--snapshots", sim.snapshots, "number of snapshots");
    simulate->add_option("--period", sim.period_s, "snapshot period, seconds (0 = minimum)");
    simulate->add_option("--guard", sim.guard_s, "guard between beam dwells, seconds");
    simulate->add_option("--clock", sim.clock, "receive clock: ideal, gnss, rubidium, ptp")
        ->check(CLI::IsMember({"ideal", "gnss", "rubidium", "ptp"}));
    simulate->add_flag("--sweep", sim.sweep, "capture a beam sweep each snapshot");
    simulate->add_flag("--no-omni", sim.no_omni, "skip the omni captures");
    simulate->add_flag("--impairments", sim.impairments, "seeded front-end ripple");
    simulate->add_flag("--no-noise", sim.no_noise, "disable receiver noise");
    simulate->add_flag("--no-cal", sim.no_cal, "record uncalibrated");
    simulate->callback([&] { cmd_simulate(sim); });

    // calibrate
    CalibrateArgs calib;
    auto* calibrate = app.add_subcommand("calibrate", "run the calibration sequence");
    calibrate->add_option("--config", calib.config_path, "configuration JSON")->required();
    calibrate->add_option("--out", calib.out_path, "write coefficients + report JSON");
    calibrate->add_option("--recording", calib.recording_path,
                          "derive the offset from a recorded reference capture");
    calibrate->add_option("--seed", calib.seed, "master seed");
    calibrate->add_option("--distance", calib.distance_m, "reference distance, metres");
    calibrate->add_flag("--impairments", calib.impairments, "seeded front-end ripple");
    calibrate->add_flag("--no-noise", calib.no_noise, "disable receiver noise");
    calibrate->callback([&] { cmd_calibrate(calib); });

    // process
    ProcessArgs proc;
    auto* process = app.add_subcommand("process", "threshold every capture of a recording");
    process->add_option("--recording", proc.recording_path, "recording path")->required();
    process->add_option("--out", proc.out_path, "output path (stdout when omitted)");
    process->add_option("--margin", proc.margin_db, "threshold margin, dB");
    process->add_option("--format", proc.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    process->callback([&] { cmd_process(proc); });

    // fit-pathloss
    FitPathLossArgs fpl;
    auto* fit_pl = app.add_subcommand("fit-pathloss", "log-distance fit over omni captures");
    fit_pl->add_option("--recording", fpl.recording_path, "recording path")->required();
    fit_pl->add_option("--scene", fpl.scene_path, "scene JSON (for distances)")->required();
    fit_pl->add_option("--out", fpl.out_path, "write fit/samples");
    fit_pl->add_option("--d0", fpl.d0_m, "reference distance, metres");
    fit_pl->add_option("--margin", fpl.margin_db, "threshold margin, dB");
    fit_pl->add_flag("--anchored", fpl.anchored, "pin the intercept to free space at d0");
    fit_pl->add_option("--format", fpl.format, "csv or json")
        ->check(CLI::IsMember({"json", "csv"}));
    fit_pl->callback([&] { cmd_fit_pathloss(fpl); });

    // padp
    PadpArgs padp;
    auto* padp_cmd = app.add_subcommand("padp", "power-angle-delay grid from one sweep");
    padp_cmd->add_option("--recording", padp.recording_path, "recording path")->required();
    padp_cmd->add_option("--out", padp.out_path, "output path (stdout when omitted)");
    padp_cmd->add_option("--snapshot", padp.snapshot, "sweep index");
    padp_cmd->add_option("--margin", padp.margin_db, "threshold margin, dB");
    padp_cmd->add_option("--format", padp.format, "csv or json")
        ->check(CLI::IsMember({"json", "csv"}));
    padp_cmd->callback([&] { cmd_padp(padp); });

    // isolate-target
    IsolateArgs iso;
    auto* isolate = app.add_subcommand("isolate-target",
                                       "background-subtracted target power per snapshot");
    isolate->add_option("--recording", iso.recording_path, "recording path")->required();
    isolate->add_option("--scene", iso.scene_path, "scene JSON")->required();
    isolate->add_option("--out", iso.out_path, "output path (stdout when omitted)");
    isolate->add_option("--target", iso.target, "target index in the scene");
    isolate->add_option("--half-width-ns", iso.half_width_ns, "delay window half-width");
    isolate->add_option("--format", iso.format, "csv or json")
        ->check(CLI::IsMember({"json", "csv"}));
    isolate->callback([&] { cmd_isolate_target(iso); });

    // fit-rcs
    FitRcsArgs frcs;
    auto* fit_rcs_cmd = app.add_subcommand("fit-rcs", "scattering-gain fit for one target");
    fit_rcs_cmd->add_option("--recording", frcs.iso.recording_path, "recording path")->required();
    fit_rcs_cmd->add_option("--scene", frcs.iso.scene_path, "scene JSON")->required();
    fit_rcs_cmd->add_option("--out", frcs.iso.out_path, "write fit JSON");
    fit_rcs_cmd->add_option("--target", frcs.iso.target, "target index in the scene");
    fit_rcs_cmd->add_option("--half-width-ns", frcs.iso.half_width_ns, "delay window half-width");
    fit_rcs_cmd->add_option("--g-tx", frcs.g_tx_dbi, "transmit antenna gain, dBi");
    fit_rcs_cmd->add_option("--g-rx", frcs.g_rx_dbi, "receive antenna gain, dBi");
    fit_rcs_cmd->callback([&] { cmd_fit_rcs(frcs); });

    // link-budget
    LinkBudgetArgs lb;
    auto* link = app.add_subcommand("link-budget", "maximum tolerable path loss");
    link->add_option("--config", lb.config_path, "configuration JSON")->required();
    link->add_option("--g-rx", lb.g_rx_dbi, "receive gain, dBi");
    link->add_option("--snr-min", lb.snr_min_db, "required post-processing SNR, dB");
    link->add_option("--port", lb.port, "omni, array, or auto")
        ->check(CLI::IsMember({"omni", "array", "auto"}));
    link->callback([&] { cmd_link_budget(lb); });

    // export
    ExportArgs exp;
    auto* export_cmd = app.add_subcommand("export", "one capture's delay profile");
    export_cmd->add_option("--recording", exp.recording_path, "recording path")->required();
    export_cmd->add_option("--index", exp.index, "record index");
    export_cmd->add_option("--out", exp.out_path, "output path (stdout when omitted)");
    export_cmd->add_option("--margin", exp.margin_db, "threshold margin, dB");
    export_cmd->add_flag("--raw", exp.raw, "skip thresholding");
    export_cmd->add_option("--format", exp.format, "csv or json")
        ->check(CLI::IsMember({"json", "csv"}));
    export_cmd->callback([&] { cmd_export(exp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
