// SPDX-License-Identifier: Apache-2.0
#include "csound/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace csound {

std::string to_string(ClockSource s) {
    switch (s) {
        case ClockSource::ideal: return "ideal";
        case ClockSource::gnss: return "gnss";
        case ClockSource::rubidium: return "rubidium";
        case ClockSource::ptp: return "ptp";
    }
    throw std::logic_error("to_string: bad ClockSource");
}

ClockSource clock_source_from_string(const std::string& s) {
    if (s == "ideal") return ClockSource::ideal;
    if (s == "gnss") return ClockSource::gnss;
    if (s == "rubidium") return ClockSource::rubidium;
    if (s == "ptp") return ClockSource::ptp;
    throw std::invalid_argument("unknown clock source: " + s);
}

NodeClock NodeClock::preset(ClockSource source, std::uint64_t seed) {
    NodeClock c;
    c.source = source;
    c.seed = seed;
    switch (source) {
        case ClockSource::ideal: break;
        case ClockSource::gnss: c.jitter_std_s = 10e-9; break;
        case ClockSource::rubidium: c.drift = 1e-12; break;
        case ClockSource::ptp: c.jitter_std_s = 100e-9; break;
    }
    return c;
}

double apply_clock(double t_nominal_s, const NodeClock& clock) {
    double t = t_nominal_s + clock.offset_s + clock.drift * t_nominal_s;
    if (clock.jitter_std_s > 0.0) {
        // key the draw on the instant so the same nominal time always sees
        // the same jitter
        std::uint64_t bits;
        std::memcpy(&bits, &t_nominal_s, sizeof bits);
        Rng rng(derive_seed(clock.seed, 0x717e5ull, bits));
        t += clock.jitter_std_s * rng.normal();
    }
    return t;
}

namespace {

// Worst-case clock error magnitude over a campaign ending at t_end.
double clock_error_bound(const NodeClock& c, double t_end_s) {
    return std::abs(c.offset_s) + std::abs(c.drift) * std::abs(t_end_s) +
           6.0 * c.jitter_std_s;
}

void check_clock_consistency(const NodeSpec& node) {
    if (node.clock.source == ClockSource::ideal &&
        (node.clock.offset_s != 0.0 || node.clock.drift != 0.0 ||
         node.clock.jitter_std_s != 0.0)) {
        std::ostringstream msg;
        msg << "build_schedule: node " << node.node_id
            << " declares an ideal clock with nonzero error terms";
        throw std::invalid_argument(msg.str());
    }
    if (node.clock.jitter_std_s < 0.0)
        throw std::invalid_argument("build_schedule: negative clock jitter");
}

}  // namespace

TxRxSchedule build_schedule(const std::vector<NodeSpec>& nodes, const ScanSchedule* sweep,
                            const SounderConfig& cfg, double snapshot_period_s,
                            int n_snapshots, double epoch_s) {
    require_valid(cfg);
    if (nodes.empty()) throw std::invalid_argument("build_schedule: no nodes");
    if (n_snapshots < 1) throw std::invalid_argument("build_schedule: need n_snapshots >= 1");
    if (!(snapshot_period_s > 0.0))
        throw std::invalid_argument("build_schedule: snapshot period must be positive");

    std::set<std::uint16_t> ids;
    int n_tx = 0, n_capturing = 0;
    for (const auto& node : nodes) {
        if (!ids.insert(node.node_id).second) {
            std::ostringstream msg;
            msg << "build_schedule: duplicate node id " << node.node_id;
            throw std::invalid_argument(msg.str());
        }
        check_clock_consistency(node);
        const bool captures = node.captures_omni || node.captures_array;
        if (node.transmits) ++n_tx;
        if (captures) ++n_capturing;
        if (node.transmits && captures && !node.full_duplex) {
            std::ostringstream msg;
            msg << "build_schedule: node " << node.node_id
                << " both transmits and captures; monostatic use needs full_duplex";
            throw std::invalid_argument(msg.str());
        }
        if (node.captures_array) {
            if (cfg.band.omni_only())
                throw std::invalid_argument(
                    "build_schedule: array captures requested on an omni-only band");
            if (!sweep || sweep->entries.empty())
                throw std::invalid_argument(
                    "build_schedule: array captures need a beam sweep schedule");
        }
    }
    if (n_tx != 1)
        throw std::invalid_argument("build_schedule: exactly one transmitting node required");
    if (n_capturing == 0)
        throw std::invalid_argument("build_schedule: no capturing node");

    // Feasibility: one snapshot must fit every node's capture sequence.
    double min_period = 0.0;
    for (const auto& node : nodes) {
        double need = 0.0;
        if (node.captures_omni) need = std::max(need, cfg.frame_duration_s());
        if (node.captures_array) need = std::max(need, sweep->total_duration_s);
        min_period = std::max(min_period, need);
    }
    if (snapshot_period_s < min_period * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "build_schedule: snapshot period " << snapshot_period_s
            << " s is infeasible; minimum is " << min_period << " s";
        throw std::invalid_argument(msg.str());
    }

    TxRxSchedule schedule;
    schedule.epoch_s = epoch_s;
    schedule.snapshot_period_s = snapshot_period_s;
    schedule.n_snapshots = n_snapshots;
    schedule.nodes = nodes;

    // Containment under worst-case clock error: the skew between the
    // transmitter and any capturing node, plus the longest path delay, must
    // stay well inside one sequence period or captures alias ambiguously.
    const NodeSpec* tx_node = nullptr;
    for (const auto& node : nodes)
        if (node.transmits) tx_node = &node;
    const double t_end = schedule.end_s();
    const double tx_bound = clock_error_bound(tx_node->clock, t_end);
    for (const auto& node : nodes) {
        if (!(node.captures_omni || node.captures_array)) continue;
        const double pair_bound = tx_bound + clock_error_bound(node.clock, t_end);
        if (pair_bound + cfg.max_excess_delay_s > cfg.zc_period_s()) {
            std::ostringstream msg;
            msg << "build_schedule: worst-case clock error between the transmitter and node "
                << node.node_id << " (" << pair_bound
                << " s) leaves captures unable to contain their frames";
            throw std::invalid_argument(msg.str());
        }
    }

    for (int s = 0; s < n_snapshots; ++s) {
        const double t0 = epoch_s + s * snapshot_period_s;
        for (const auto& node : nodes) {
            if (node.captures_omni) {
                CaptureAction a;
                a.t_s = t0;
                a.snapshot = s;
                a.node_id = node.node_id;
                a.duration_s = cfg.frame_duration_s();
                schedule.captures.push_back(a);
            }
            if (node.captures_array) {
                for (const auto& e : sweep->entries) {
                    CaptureAction a;
                    a.t_s = t0 + e.t_offset_s;
                    a.snapshot = s;
                    a.node_id = node.node_id;
                    a.array_id = static_cast<std::uint8_t>(e.face);
                    a.beam_id = static_cast<std::uint16_t>(e.beam_id);
                    a.duration_s = e.dwell_s;
                    schedule.captures.push_back(a);
                }
            }
        }
    }
    std::sort(schedule.captures.begin(), schedule.captures.end(),
              [](const CaptureAction& a, const CaptureAction& b) {
                  if (a.t_s != b.t_s) return a.t_s < b.t_s;
                  if (a.node_id != b.node_id) return a.node_id < b.node_id;
                  if (a.array_id != b.array_id) return a.array_id < b.array_id;
                  return a.beam_id < b.beam_id;
              });
    return schedule;
}

std::string schedule_digest(const TxRxSchedule& schedule) {
    // The capture list repeats per snapshot, so the first snapshot's pattern
    // plus the global parameters pin the whole layout.
    std::ostringstream os;
    os.precision(17);
    os << "epoch=" << schedule.epoch_s << ";period=" << schedule.snapshot_period_s
       << ";n=" << schedule.n_snapshots << ";";
    for (const auto& node : schedule.nodes) {
        os << "node{" << node.node_id << ',' << node.transmits << ',' << node.captures_omni
           << ',' << node.captures_array << ',' << node.full_duplex << ','
           << to_string(node.clock.source) << ',' << node.clock.offset_s << ','
           << node.clock.drift << ',' << node.clock.jitter_std_s << ',' << node.clock.seed
           << "};";
    }
    for (const auto& a : schedule.captures) {
        if (a.snapshot != 0) break;
        os << "cap{" << a.t_s - schedule.epoch_s << ',' << a.node_id << ','
           << int(a.array_id) << ',' << a.beam_id << ',' << a.duration_s << "};";
    }
    return fnv1a_hex(os.str());
}

namespace {

void check_track_coverage(const Track& track, const char* what, double t0, double t1) {
    const double lo = track.points.front().t_s;
    const double hi = track.points.back().t_s;
    if (lo > t0 + 1e-12 || hi < t1 - 1e-12) {
        std::ostringstream msg;
        msg << "run_campaign: " << what << " track covers [" << lo << ", " << hi
            << "] s but the schedule runs [" << t0 << ", " << t1 << "] s";
        throw std::invalid_argument(msg.str());
    }
}

std::uint64_t stream_key(const CaptureAction& a) {
    return (static_cast<std::uint64_t>(a.node_id) << 24) |
           (static_cast<std::uint64_t>(a.array_id) << 16) |
           static_cast<std::uint64_t>(a.beam_id);
}

}  // namespace

Recording run_campaign(const TxRxSchedule& schedule, const Scene& scene,
                       const SounderConfig& cfg, const CampaignInputs& inputs) {
    require_valid(cfg);
    if (schedule.captures.empty())
        throw std::invalid_argument("run_campaign: schedule has no captures");

    bool any_omni = false, any_array = false;
    for (const auto& a : schedule.captures) {
        (a.beam_id == kOmniBeamId ? any_omni : any_array) = true;
    }

    const int l = cfg.zc_length;
    if (any_omni &&
        (inputs.fe_omni.tx_ripple.size() != l || inputs.fe_omni.rx_ripple.size() != l))
        throw std::invalid_argument("run_campaign: omni front end does not match the configuration");
    if (any_array) {
        if (!inputs.fe_array)
            throw std::invalid_argument("run_campaign: array captures need an array front end");
        if (inputs.fe_array->tx_ripple.size() != l || inputs.fe_array->rx_ripple.size() != l)
            throw std::invalid_argument(
                "run_campaign: array front end does not match the configuration");
    }
    const Calibration* cal = inputs.calibration;
    if (cal) {
        if (cal->coefficients.tx.size() != l)
            throw std::invalid_argument("run_campaign: calibration does not match the configuration");
        if (any_omni && cal->coefficients.rx_omni.size() != l)
            throw std::invalid_argument("run_campaign: calibration lacks omni receive coefficients");
        if (any_array && (cal->coefficients.rx_array.size() != l ||
                          cal->coefficients.face_offset_db.size() != 4))
            throw std::invalid_argument("run_campaign: calibration lacks array-side results");
    }

    // Scene motion must span the campaign; silently clamping tracks would
    // fake a stationary world.
    const double t0 = schedule.epoch_s;
    const double t1 = schedule.end_s();
    if (scene.tx.track) check_track_coverage(*scene.tx.track, "tx", t0, t1);
    if (scene.rx.track) check_track_coverage(*scene.rx.track, "rx", t0, t1);
    for (std::size_t i = 0; i < scene.targets.size(); ++i) {
        check_track_coverage(scene.targets[i].track, "target", t0, t1);
    }

    TxFrame frame = build_sounding_frame(cfg);
    if (cal && cal->coefficients.has_tx())
        frame = apply_tx_coefficients(frame, cal->coefficients.tx);

    std::map<int, BeamDefinition> beam_by_id;
    if (any_array) {
        for (const auto& b : build_beam_table(cfg.band)) beam_by_id[b.beam_id] = b;
    }

    const NodeSpec* tx_node = nullptr;
    std::map<std::uint16_t, const NodeSpec*> node_by_id;
    for (const auto& node : schedule.nodes) {
        node_by_id[node.node_id] = &node;
        if (node.transmits) tx_node = &node;
    }
    if (!tx_node) throw std::invalid_argument("run_campaign: schedule has no transmitter");

    Recording rec;
    rec.header.config_json = config_to_json(cfg);
    rec.header.calibration_json = cal ? cal_to_json(*cal) : std::string();
    rec.header.calibration_pending = cal == nullptr;
    rec.header.scene_digest = scene_digest(scene);
    rec.header.schedule_digest = schedule_digest(schedule);
    rec.records.reserve(schedule.captures.size());

    for (const auto& action : schedule.captures) {
        auto node_it = node_by_id.find(action.node_id);
        if (node_it == node_by_id.end()) {
            std::ostringstream msg;
            msg << "run_campaign: capture references unknown node " << action.node_id;
            throw std::invalid_argument(msg.str());
        }
        const NodeSpec& rx_node = *node_it->second;
        const bool omni = action.beam_id == kOmniBeamId;

        const std::uint64_t key = stream_key(action);
        Rng rng_realize(derive_seed(inputs.master_seed, 0xca11ull,
                                    static_cast<std::uint64_t>(action.snapshot), key));
        ChannelRealization ch = realize_channel(scene, action.t_s, cfg, rng_realize);

        // Receive-side gain per tap: the pointed beam's pattern, or the flat
        // omni port gain.
        const BeamDefinition* beam = nullptr;
        if (omni) {
            const double g = std::pow(10.0, scene.rx.gain_dbi / 20.0);
            for (auto& tap : ch.taps) tap.gain *= g;
        } else {
            auto it = beam_by_id.find(action.beam_id);
            if (it == beam_by_id.end()) {
                std::ostringstream msg;
                msg << "run_campaign: capture references unknown beam " << action.beam_id;
                throw std::invalid_argument(msg.str());
            }
            beam = &it->second;
            for (auto& tap : ch.taps) {
                const double g = effective_rx_gain_db(*beam, tap.aoa_az_deg, tap.aoa_el_deg);
                tap.gain *= std::pow(10.0, g / 20.0);
            }
        }

        // Clock skew between the two ends shifts every measured delay.
        const double skew = (apply_clock(action.t_s, rx_node.clock) - action.t_s) -
                            (apply_clock(action.t_s, tx_node->clock) - action.t_s);
        if (skew != 0.0) {
            for (auto& tap : ch.taps) tap.delay_s += skew;
        }

        const FrontEndModel& fe = omni ? inputs.fe_omni : *inputs.fe_array;
        Rng rng_noise(derive_seed(inputs.master_seed, 0x6015eull,
                                  static_cast<std::uint64_t>(action.snapshot), key));
        ComplexBaseband capture = apply_channel(frame, ch, fe, cfg, rng_noise);

        const Eigen::VectorXcd* coeffs = nullptr;
        double offset_db = 0.0;
        if (cal) {
            if (omni) {
                coeffs = &cal->coefficients.rx_omni;
                offset_db = cal->coefficients.omni_offset_db;
            } else {
                coeffs = &cal->coefficients.rx_array;
                offset_db = cal->coefficients.face_offset_db[beam->face] -
                            (beam->peak_gain_dbi - beam->scan_loss_db);
            }
        }

        CaptureMeta meta;
        meta.timestamp_s = action.t_s;
        meta.node_id = action.node_id;
        meta.array_id = action.array_id;
        meta.beam_id = omni ? -1 : action.beam_id;
        Cir cir = correlate(capture, frame, cfg, coeffs, offset_db, meta);
        rec.records.push_back(record_from_cir(cir));
    }
    return rec;
}

}  // namespace csound
