// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "csound/core.hpp"
#include "csound/waveform.hpp"

namespace csound {

// Identity of one capture inside a campaign.
struct CaptureMeta {
    double timestamp_s = 0.0;
    std::uint16_t node_id = 0;
    std::uint8_t array_id = 0;
    int beam_id = -1;  // -1 = omnidirectional port
};

// Complex impulse response over one sequence period. Taps are spaced at the
// inverse occupied bandwidth; |tap|^2 scaled by power_reference_dbm is
// absolute power, so a unit-gain channel tap reads the radiated EIRP (plus
// any calibration offset folded into the reference).
struct Cir {
    Eigen::VectorXcd taps;
    double tap_spacing_s = 0.0;
    double power_reference_dbm = 0.0;
    CaptureMeta meta;

    int n_taps() const { return static_cast<int>(taps.size()); }
    double delay_of(int bin) const { return bin * tap_spacing_s; }
};

// Power-delay profile. Linear milliwatt per tap; after thresholding,
// `retained` marks taps above the noise rule and retained powers have the
// estimated tail-mean noise power subtracted.
struct Pdp {
    Eigen::ArrayXd power_mw;
    Eigen::Array<bool, Eigen::Dynamic, 1> retained;
    bool threshold_applied = false;
    double tap_spacing_s = 0.0;
    double power_reference_dbm = 0.0;
    double margin_db = 0.0;
    double threshold_mw = 0.0;
    double noise_floor_mw = 0.0;   // tail median (threshold anchor)
    double noise_mean_mw = 0.0;    // tail mean (subtracted from retained taps)
    int tail_warning_count = 0;    // tail bins above threshold: tail holds signal
    CaptureMeta meta;

    int n_taps() const { return static_cast<int>(power_mw.size()); }
    double delay_of(int bin) const { return bin * tap_spacing_s; }
};

/// Synthesized omnidirectional profile: per-tap linear sum of thresholded
/// per-beam profiles, with the number of contributing beams per tap.
struct OmniPdp {
    Eigen::ArrayXd power_mw;
    Eigen::ArrayXi contributing;
    double tap_spacing_s = 0.0;
    int n_beams = 0;
    CaptureMeta meta;

    int n_taps() const { return static_cast<int>(power_mw.size()); }
};

/// Full correlator: coherently average the frame repetitions, transform,
/// divide by the known transmitted subcarrier values (exact for the
/// constant-amplitude sequence), optionally apply receive calibration
/// coefficients, and inverse-transform onto the zc_length delay grid.
/// A unit-gain zero-delay channel yields taps = [1, 0, 0, ...].
/// power_offset_db is the incident-power calibration offset.
Cir correlate(const ComplexBaseband& rx, const TxFrame& frame, const SounderConfig& cfg,
              const Eigen::VectorXcd* rx_coefficients = nullptr,
              double power_offset_db = 0.0, const CaptureMeta& meta = {});

/// Per-tap power in absolute milliwatt.
Pdp pdp_from_cir(const Cir& cir);

/// Noise rule: the noise floor is the median power of the last 10% of delay
/// bins; taps below floor + margin_db are marked absent. Retained taps get
/// the tail-mean noise power subtracted so power sums are unbiased. A
/// numerical clamp at 120 dB below the peak keeps noiseless profiles from
/// retaining arithmetic residue. Thresholding twice is rejected.
Pdp noise_threshold(const Pdp& pdp, double margin_db = 6.0);

/// Sum thresholded per-beam profiles into one omnidirectional profile
/// (linear per-tap addition; absent taps contribute nothing).
OmniPdp synthesize_omni_pdp(const std::vector<Pdp>& beam_pdps);

/// Total retained power in dBm; empty when no tap survived thresholding.
std::optional<double> total_power_dbm(const Pdp& pdp);
std::optional<double> total_power_dbm(const OmniPdp& pdp);

}  // namespace csound
