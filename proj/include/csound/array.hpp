// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <vector>

#include "csound/core.hpp"

namespace csound {

// One fixed beam of a receive array face. Azimuths are global (face 0 looks
// along +x, faces advance counterclockwise by 90 degrees); beamwidths are the
// 3 dB widths of the Gaussian mainlobe model.
struct BeamDefinition {
    int beam_id = 0;        // global id, unique across faces
    int face = 0;           // 0..3
    double az_deg = 0.0;    // pointing, global azimuth
    double el_deg = 0.0;
    double az_bw_deg = 0.0;
    double el_bw_deg = 0.0;
    double peak_gain_dbi = 0.0;   // boresight gain before scan loss
    double scan_loss_db = 0.0;    // fixed per-beam pointing penalty
};

// The full sweep order: one slot per beam index, all four faces firing the
// same slot concurrently.
struct ScanSchedule {
    struct Entry {
        double t_offset_s = 0.0;
        int face = 0;
        int beam_id = 0;
        double dwell_s = 0.0;
    };
    std::vector<Entry> entries;
    double dwell_s = 0.0;
    double guard_s = 0.0;
    int beams_per_face = 0;
    double total_duration_s = 0.0;
};

/// Wrap an angle difference into (-180, 180].
double wrap_deg(double angle_deg);

/// Scan loss for a pointing offset from the face boresight: 6 dB times the
/// squared normalized offset, where the normalization takes the larger of
/// |az|/60 and |el|/45 so the loss reaches 6 dB at the rated scan limits and
/// never exceeds it inside them. Clamped at 6 dB beyond the limits.
double scan_loss_db(double az_offset_deg, double el_offset_deg);

/// Build the fixed beam grid for a band: per face, a 5-column azimuth fan
/// spanning +-45 degrees crossed with 3 (15-beam bands) or 4 (20-beam bands)
/// elevation rows spanning +-32.5 degrees. Beamwidths equal the grid spacing,
/// so neighboring beams cross at -3 dB. Peak gain is
/// 10*log10(elements) + 5 dB. Empty for an omni-only band.
std::vector<BeamDefinition> build_beam_table(const BandPlan& band);

/// Gain of a beam towards (az, el): Gaussian mainlobe, -3 dB at half a
/// beamwidth off axis, floored 20 dB below the (scan-lossed) peak.
double beam_gain_db(const BeamDefinition& beam, double az_deg, double el_deg);

/// Receive gain applied to a path arriving at the given angles.
double effective_rx_gain_db(const BeamDefinition& beam, double aoa_az_deg,
                            double aoa_el_deg);

/// Time the sweep: per beam slot one dwell of n_repetitions ZC periods plus
/// the guard, the four faces running in parallel. Throws if the band is
/// omni-only.
ScanSchedule build_scan_schedule(const std::vector<BeamDefinition>& beams,
                                 const SounderConfig& cfg, double guard_s = 0.0);

/// Write the beam table as CSV (one row per beam).
void export_beam_table_csv(const std::vector<BeamDefinition>& beams, std::ostream& os);

}  // namespace csound
