// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"

namespace csound {

// Everything processing needs to turn raw captures into calibrated power:
// transmit flattening coefficients, receive flattening coefficients for the
// omni port and for the shared array chain, and incident-power offsets.
// face_offset_db holds the residual chain offset per array face with the cal
// beam's boresight gain already removed, so the capture offset for a beam is
// face_offset_db[face] minus that beam's boresight gain (peak - scan loss);
// omni captures use omni_offset_db directly.
struct CalCoefficients {
    Eigen::VectorXcd tx;
    Eigen::VectorXcd rx_omni;
    Eigen::VectorXcd rx_array;
    double omni_offset_db = 0.0;
    std::vector<double> face_offset_db;

    bool has_tx() const { return tx.size() > 0; }
};

struct TxFlatnessResult {
    Eigen::VectorXcd coefficients;   // real positive, one per subcarrier
    double port_target_dbm = 0.0;    // total port power target (EIRP - antenna)
    double per_bin_target_dbm = 0.0;
    double pre_ripple_db = 0.0;      // peak-to-peak before correction
    double post_ripple_db = 0.0;
    double mean_error_db = 0.0;      // mean power error after correction
};

/// Step 1: flatten the measured transmit spectrum to the uniform level that
/// radiates the target EIRP through the given antenna. Coefficients are
/// magnitude-only (the bench instrument measures power). Corrections beyond
/// +-bound_db from the mean are unreachable and reported per bin.
TxFlatnessResult cal_tx_flatness(const Eigen::ArrayXd& measured_spectrum_dbm,
                                 double target_eirp_dbm, double antenna_gain_dbi,
                                 double bound_db = 3.0);

struct RxFlatnessResult {
    Eigen::VectorXcd coefficients;
    double pre_ripple_db = 0.0;
    double post_ripple_db = 0.0;
};

/// Step 2: invert the through-response measured over a known cable. The
/// result is normalized to zero dB mean magnitude: flatness only, absolute
/// level belongs to step 3. Near-zero cable bins are rejected.
RxFlatnessResult cal_rx_flatness(const Eigen::VectorXcd& rx_spectrum,
                                 const Eigen::VectorXcd& cable_response);

struct IncidentPowerResult {
    double offset_db = 0.0;
    double expected_dbm = 0.0;
    double measured_dbm = 0.0;
    int peak_bin = 0;
};

/// Step 3: align the strongest tap of a free-space reference capture with
/// the expected incident power tx_eirp - fspl(distance). Fails when no
/// dominant tap exists (peak less than 20 dB above the profile median).
IncidentPowerResult cal_incident_power(const Pdp& pdp, double distance_m,
                                       double frequency_ghz, double tx_eirp_dbm);

struct OmniVerifyResult {
    double omni_total_dbm = 0.0;
    double synthesized_total_dbm = 0.0;
    double delta_db = 0.0;
    double bound_db = 0.2;
    bool pass = false;
};

/// Step 4: compare a beam-synthesized total against the co-captured
/// omnidirectional total. The desk-scale pass bound defaults to 0.2 dB.
OmniVerifyResult verify_omni_vs_beams(const OmniPdp& synthesized,
                                      const Pdp& omni_reference,
                                      double bound_db = 0.2);

// Outcome of a full calibration run.
struct CalReport {
    double center_frequency_ghz = 0.0;
    double reference_distance_m = 0.0;
    TxFlatnessResult tx;
    RxFlatnessResult rx_omni;
    std::optional<RxFlatnessResult> rx_array;
    IncidentPowerResult incident;
    std::vector<IncidentPowerResult> faces;
    std::optional<OmniVerifyResult> verify;
};

struct Calibration {
    CalCoefficients coefficients;
    CalReport report;
};

struct CalOptions {
    double reference_distance_m = 3.0;
    double tx_antenna_gain_dbi = 10.0;  // horn used during bench calibration
    std::uint64_t seed = 1;
    bool noise = true;
};

/// Run the calibration sequence against a simulated front end: bench
/// transmit-spectrum measurement and flattening, cable through-measurement
/// and receive flattening per chain, then incident-power offsets from a
/// free-space capture at the reference distance (per array face for array
/// bands, cal beam on boresight). Steps are ordered internally; later steps
/// consume the earlier corrections. fe_array, when given, must carry the
/// same transmit ripple as fe_omni: one transmitter drives both links.
Calibration run_calibration(const SounderConfig& cfg, const FrontEndModel& fe_omni,
                            const FrontEndModel* fe_array, const CalOptions& opts);

/// Serialize coefficients/report for embedding in recording headers.
std::string cal_to_json(const Calibration& cal);
Calibration cal_from_json(const std::string& json_text);

}  // namespace csound
