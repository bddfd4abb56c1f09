// SPDX-License-Identifier: Apache-2.0
#include "csound/array.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace csound {

double wrap_deg(double angle_deg) {
    double a = std::fmod(angle_deg, 360.0);
    if (a > 180.0) a -= 360.0;
    if (a <= -180.0) a += 360.0;
    return a;
}

double scan_loss_db(double az_offset_deg, double el_offset_deg) {
    const double u = az_offset_deg / 60.0;
    const double v = el_offset_deg / 45.0;
    const double r2 = std::max(u * u, v * v);
    return 6.0 * std::min(r2, 1.0);
}

std::vector<BeamDefinition> build_beam_table(const BandPlan& band) {
    std::vector<BeamDefinition> beams;
    if (band.omni_only()) return beams;

    const int n_el = band.beams_per_array / 5;
    if (n_el * 5 != band.beams_per_array)
        throw std::invalid_argument("build_beam_table: beams_per_array must be 5*rows");

    // Columns tile +-45 degrees of face azimuth, rows tile +-32.5 degrees of
    // elevation; spacing equals the 3 dB beamwidth so the fan has no gaps.
    const double az_span = 90.0, el_span = 65.0;
    const double az_step = az_span / 5.0;
    const double el_step = el_span / n_el;
    const double peak = 10.0 * std::log10(static_cast<double>(band.elements_per_array)) + 5.0;

    int id = 0;
    for (int face = 0; face < 4; ++face) {
        const double boresight = 90.0 * face;
        for (int r = 0; r < n_el; ++r) {
            const double el = -el_span / 2.0 + el_step * (r + 0.5);
            for (int c = 0; c < 5; ++c) {
                const double az_rel = -az_span / 2.0 + az_step * (c + 0.5);
                BeamDefinition b;
                b.beam_id = id++;
                b.face = face;
                b.az_deg = wrap_deg(boresight + az_rel);
                b.el_deg = el;
                b.az_bw_deg = az_step;
                b.el_bw_deg = el_step;
                b.peak_gain_dbi = peak;
                b.scan_loss_db = scan_loss_db(az_rel, el);
                beams.push_back(b);
            }
        }
    }
    return beams;
}

double beam_gain_db(const BeamDefinition& beam, double az_deg, double el_deg) {
    if (beam.az_bw_deg <= 0.0 || beam.el_bw_deg <= 0.0)
        throw std::invalid_argument("beam_gain_db: beamwidths must be > 0");
    const double da = wrap_deg(az_deg - beam.az_deg) / beam.az_bw_deg;
    const double de = (el_deg - beam.el_deg) / beam.el_bw_deg;
    // 12 dB per (offset/beamwidth)^2 puts the -3 dB point at half a width.
    const double rolloff = 12.0 * (da * da + de * de);
    const double top = beam.peak_gain_dbi - beam.scan_loss_db;
    return top - std::min(rolloff, 20.0);
}

double effective_rx_gain_db(const BeamDefinition& beam, double aoa_az_deg,
                            double aoa_el_deg) {
    return beam_gain_db(beam, aoa_az_deg, aoa_el_deg);
}

ScanSchedule build_scan_schedule(const std::vector<BeamDefinition>& beams,
                                 const SounderConfig& cfg, double guard_s) {
    if (beams.empty())
        throw std::invalid_argument("build_scan_schedule: no beams (omni-only band?)");
    if (guard_s < 0.0)
        throw std::invalid_argument("build_scan_schedule: guard must be >= 0");

    int beams_per_face = 0;
    for (const auto& b : beams)
        if (b.face == 0) ++beams_per_face;
    for (int face = 1; face < 4; ++face) {
        int n = 0;
        for (const auto& b : beams)
            if (b.face == face) ++n;
        if (n != beams_per_face)
            throw std::invalid_argument("build_scan_schedule: uneven faces");
    }

    ScanSchedule sched;
    sched.dwell_s = cfg.frame_duration_s();
    sched.guard_s = guard_s;
    sched.beams_per_face = beams_per_face;
    const double slot = sched.dwell_s + guard_s;
    // Slot k fires beam k of every face simultaneously; faces are
    // independent receivers, so the sweep length is set by one face.
    for (int k = 0; k < beams_per_face; ++k) {
        for (int face = 0; face < 4; ++face) {
            const auto& beam = beams[static_cast<std::size_t>(face) * beams_per_face + k];
            ScanSchedule::Entry e;
            e.t_offset_s = k * slot;
            e.face = face;
            e.beam_id = beam.beam_id;
            e.dwell_s = sched.dwell_s;
            sched.entries.push_back(e);
        }
    }
    sched.total_duration_s = beams_per_face * slot;
    return sched;
}

void export_beam_table_csv(const std::vector<BeamDefinition>& beams, std::ostream& os) {
    os << "beam_id,face,az_deg,el_deg,az_bw_deg,el_bw_deg,peak_gain_dbi,scan_loss_db\n";
    for (const auto& b : beams) {
        os << b.beam_id << ',' << b.face << ',' << b.az_deg << ',' << b.el_deg << ','
           << b.az_bw_deg << ',' << b.el_bw_deg << ',' << b.peak_gain_dbi << ','
           << b.scan_loss_db << '\n';
    }
}

}  // namespace csound
