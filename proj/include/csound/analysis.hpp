// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "csound/array.hpp"
#include "csound/channel.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"

namespace csound {

// One measurement point for large-scale fitting.
struct PathLossSample {
    double distance_m = 0.0;
    double path_loss_db = 0.0;
};

// Log-distance model PL(d) = intercept + 10 * ple * log10(d / d0) + S,
// S ~ N(0, sigma^2).
struct PathLossFit {
    double ple = 0.0;
    double intercept_db = 0.0;   // fitted (or pinned) loss at d0
    double sigma_db = 0.0;       // shadowing standard deviation of residuals
    double d0_m = 1.0;
    bool anchored = false;
    int n_samples = 0;
};

/// Path loss seen by an isotropic reference port: transmit EIRP minus the
/// received power, with any real receive antenna gain backed out.
double path_loss_from_power(double tx_eirp_dbm, double received_dbm, double g_rx_dbi = 0.0);

/// Least-squares fit of the log-distance model. Free mode fits slope and
/// intercept (residual variance over n-2); anchored mode pins the intercept
/// to free space at d0 for the given frequency and fits the slope alone
/// (variance over n-1). Requires at least 3 samples, positive distances, and
/// at least two distinct distances.
PathLossFit fit_path_loss(const std::vector<PathLossSample>& samples, double d0_m = 1.0);
PathLossFit fit_path_loss_anchored(const std::vector<PathLossSample>& samples,
                                   double frequency_ghz, double d0_m = 1.0);

// Power-angle profile: total retained power of each beam of a sweep.
struct PapEntry {
    int beam_id = 0;
    int face = 0;
    double az_deg = 0.0;
    double el_deg = 0.0;
    double power_mw = 0.0;
};

/// One entry per thresholded beam profile, sorted by azimuth then elevation.
/// beam_pdps[i] belongs to beams[i].
std::vector<PapEntry> build_pap(const std::vector<Pdp>& beam_pdps,
                                const std::vector<BeamDefinition>& beams);

// Power-angle-delay profile: rows follow the sorted beam order of the power-
// angle profile, columns are delay taps (retained power only, milliwatt).
struct Padp {
    Eigen::ArrayXXd power_mw;
    std::vector<int> beam_ids;
    Eigen::ArrayXd az_deg;
    Eigen::ArrayXd el_deg;
    double tap_spacing_s = 0.0;
};

Padp build_padp(const std::vector<Pdp>& beam_pdps, const std::vector<BeamDefinition>& beams);

// Background-subtracted sensing extraction over a stack of profiles.
struct TargetIsolation {
    Eigen::ArrayXd background_mw;     // per-tap temporal median
    Eigen::ArrayXd target_power_mw;   // per snapshot, summed over its window
    std::vector<int> window_lo;       // first tap of each snapshot's window
    std::vector<int> window_hi;       // last tap (inclusive)
};

/// Isolate a moving target: the static background is the per-tap median over
/// all snapshots; each snapshot's target power is the sum of
/// max(power - background, 0) over taps within half_width_s of its expected
/// bistatic delay. Profiles must share length and spacing.
TargetIsolation isolate_target(const std::vector<Pdp>& snapshots,
                               const std::vector<double>& expected_delay_s,
                               double half_width_s);

/// Invert the two-leg path equation for the scattering gain: the measured
/// target power (isotropic port, dBm) plus both free-space legs give gamma
/// in dBsm.
double rcs_gamma_dbsm(double target_power_dbm, const SensingGeometry& geom,
                      double frequency_ghz, double tx_eirp_dbm,
                      double g_tx_dbi = 0.0, double g_rx_dbi = 0.0);

/// Sample mean and standard deviation (n-1) of per-snapshot gamma estimates.
RcsModel fit_rcs(const std::vector<double>& gamma_dbsm);

// Maximum tolerable path loss of the sounder link.
struct LinkBudget {
    double tx_eirp_dbm = 0.0;
    double rx_gain_dbi = 0.0;
    double processing_gain_db = 0.0;
    double snr_min_db = 0.0;
    double noise_floor_dbm = 0.0;   // thermal + noise figure over the band
    double max_path_loss_db = 0.0;
};

/// EIRP + receive gain + processing gain - required SNR - noise floor.
/// array_port selects which chain's noise figure applies.
LinkBudget link_budget(const SounderConfig& cfg, double rx_gain_dbi,
                       double snr_min_db, bool array_port);

}  // namespace csound
