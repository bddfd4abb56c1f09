// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csound/array.hpp"
#include "csound/calibration.hpp"
#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/recording.hpp"
#include "csound/scene.hpp"

namespace csound {

enum class ClockSource { ideal, gnss, rubidium, ptp };

std::string to_string(ClockSource s);
ClockSource clock_source_from_string(const std::string& s);

// Timing error model of one node: fixed offset, linear drift, and a
// per-capture jitter draw keyed on the seed and the nominal time.
struct NodeClock {
    ClockSource source = ClockSource::ideal;
    double offset_s = 0.0;
    double drift = 0.0;         // seconds of error per elapsed second
    double jitter_std_s = 0.0;
    std::uint64_t seed = 0;

    /// Typical figures for each source: gnss 10 ns jitter, rubidium 1e-12
    /// drift, ptp 100 ns jitter, ideal all zero.
    static NodeClock preset(ClockSource source, std::uint64_t seed = 0);
};

/// Local time shown by a clock at nominal time t: t + offset + drift * t
/// plus the jitter draw for this instant. Deterministic in (clock, t).
double apply_clock(double t_nominal_s, const NodeClock& clock);

// One physical node of the campaign. A node that both transmits and
// captures (monostatic sensing) must declare full_duplex; the shared clock
// is then used on both sides.
struct NodeSpec {
    std::uint16_t node_id = 0;
    bool transmits = false;
    bool captures_omni = false;
    bool captures_array = false;
    bool full_duplex = false;
    NodeClock clock;
};

// One scheduled capture. Omni captures use the sentinel array/beam ids.
struct CaptureAction {
    double t_s = 0.0;  // global nominal start time
    int snapshot = 0;
    std::uint16_t node_id = 0;
    std::uint8_t array_id = kOmniArrayId;
    std::uint16_t beam_id = kOmniBeamId;
    double duration_s = 0.0;
};

// The campaign timetable: the transmitter repeats frames continuously from
// the epoch; every capturing node runs its captures each snapshot.
struct TxRxSchedule {
    double epoch_s = 0.0;
    double snapshot_period_s = 0.0;
    int n_snapshots = 0;
    std::vector<NodeSpec> nodes;
    std::vector<CaptureAction> captures;  // ordered by (time, node, array, beam)

    double end_s() const { return epoch_s + snapshot_period_s * n_snapshots; }
};

/// Lay out a campaign. sweep supplies the per-snapshot beam timetable for
/// nodes that capture with the array (pass nullptr for omni-only campaigns).
/// Checks feasibility: the snapshot period must cover the longest per-node
/// capture sequence (frame duration for omni, full sweep for the array), a
/// rejected period reports the minimum feasible value, and worst-case clock
/// error across the campaign must leave captures containing their frames.
TxRxSchedule build_schedule(const std::vector<NodeSpec>& nodes, const ScanSchedule* sweep,
                            const SounderConfig& cfg, double snapshot_period_s,
                            int n_snapshots, double epoch_s = 0.0);

/// Stable digest of the schedule layout (parameters, nodes, clock models).
std::string schedule_digest(const TxRxSchedule& schedule);

// Hardware models and seeds feeding a simulated campaign.
struct CampaignInputs {
    FrontEndModel fe_omni;
    std::optional<FrontEndModel> fe_array;
    const Calibration* calibration = nullptr;  // null records calibration-pending
    std::uint64_t master_seed = 1;
};

/// Simulate every scheduled capture against the scene: realize the channel
/// at the capture time, weight each tap by the capturing beam's gain at its
/// arrival angles (or the omni port gain), shift all delays by the TX-RX
/// clock skew, run the front end and correlator, and append the processed
/// response. Deterministic: the recording bytes are a pure function of
/// (schedule, scene, cfg, inputs). Scene tracks must span the campaign.
Recording run_campaign(const TxRxSchedule& schedule, const Scene& scene,
                       const SounderConfig& cfg, const CampaignInputs& inputs);

}  // namespace csound
