// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "csound/rng.hpp"
#include "csound/units.hpp"
#include "csound/waveform.hpp"

namespace csound {

/// Free-space path loss in dB: 20*log10(d_m * f_GHz) + 32.44 - g_tx - g_rx.
/// Distance in metres, frequency in GHz, gains in dBi.
double fspl_db(double distance_m, double frequency_ghz,
               double g_tx_dbi = 0.0, double g_rx_dbi = 0.0);

/// Scattering gain of a point target: gamma + 10*log10(4*pi/lambda^2).
double scattering_gain_db(double gamma_dbsm, double frequency_ghz);

// Transmitter, receiver and scatterer positions for one sensing snapshot.
struct SensingGeometry {
    Eigen::Vector3d tx = Eigen::Vector3d::Zero();
    Eigen::Vector3d rx = Eigen::Vector3d::Zero();
    Eigen::Vector3d target = Eigen::Vector3d::Zero();

    double d1_m() const { return (target - tx).norm(); }
    double d2_m() const { return (rx - target).norm(); }
    /// Bistatic angle at the target between the two legs, degrees.
    /// Descriptive metadata only; the path-loss math never consumes it.
    double bistatic_angle_deg() const;
};

/// Two-leg scattered path loss: fspl(d1) - scattering_gain + fspl(d2), with
/// the antenna gains folded into the two legs. Rejects degenerate geometry
/// (either leg of zero length).
double target_path_loss_db(const SensingGeometry& geom, double gamma_dbsm,
                           double frequency_ghz, double g_tx_dbi = 0.0,
                           double g_rx_dbi = 0.0);

/// Propagation delay of the scattered path, (d1 + d2) / c. Tolerates a
/// target coincident with either terminal (pure geometry, no loss model).
double bistatic_delay_s(const Eigen::Vector3d& tx, const Eigen::Vector3d& rx,
                        const Eigen::Vector3d& target);

enum class TargetClass { passenger_car, pedestrian };
enum class SensingMode { monostatic, bistatic };

std::string to_string(TargetClass c);
std::string to_string(SensingMode m);
TargetClass target_class_from_string(const std::string& s);
SensingMode sensing_mode_from_string(const std::string& s);

// Log-normal scattering-gain model: gamma ~ N(mu, sigma^2) in dBsm.
struct RcsModel {
    double mu_dbsm = 0.0;
    double sigma_dbsm = 0.0;
};

/// Fitted distribution for a target class and geometry mode.
RcsModel rcs_model_for(TargetClass cls, SensingMode mode);

/// One draw of gamma in dBsm from the model.
double rcs_sample_dbsm(const RcsModel& model, Rng& rng);

enum class TapOrigin { line_of_sight, environment, target };

// One resolvable propagation path. gain is a linear amplitude relative to
// the radiated EIRP reference with an isotropic receive antenna; receive
// antenna or beam gain is applied per tap by the capture layer.
struct PathTap {
    double delay_s = 0.0;
    std::complex<double> gain{0.0, 0.0};
    double aod_az_deg = 0.0;
    double aod_el_deg = 0.0;
    double aoa_az_deg = 0.0;
    double aoa_el_deg = 0.0;
    TapOrigin origin = TapOrigin::environment;
    int target_index = -1;

    double power_db() const { return 10.0 * std::log10(std::norm(gain)); }
};

// Tap list for one instant, sorted by delay.
struct ChannelRealization {
    std::vector<PathTap> taps;
    double timestamp_s = 0.0;
};

// Hardware imperfections of one link: smooth spectral ripple on each side,
// a flat receive gain error, and the receiver noise figure. Rebuilt
// deterministically from a seed so calibration tests can replay it.
struct FrontEndModel {
    Eigen::VectorXcd tx_ripple;   // per occupied subcarrier, near unit modulus
    Eigen::VectorXcd rx_ripple;
    double rx_gain_offset_db = 0.0;
    double noise_figure_db = 0.0;
    bool noise_enabled = true;
    std::uint64_t seed = 0;

    struct Options {
        double tx_ripple_db = 1.5;   // peak magnitude ripple, each side of 0 dB
        double rx_ripple_db = 1.5;
        double tx_phase_deg = 3.0;   // peak phase ripple
        double rx_phase_deg = 15.0;
        double rx_gain_offset_db = 0.0;
        double noise_figure_db = 0.0;
        bool noise_enabled = true;
    };

    /// Build a seeded model for a given subcarrier count. Ripple is a sum of
    /// three low-order sinusoids across the band, magnitude bounded by the
    /// requested peak (and always within +-3 dB of unity).
    static FrontEndModel seeded(std::uint64_t seed, int zc_length, const Options& opts);

    /// An impairment-free front end (flat, no gain error), optionally noisy.
    static FrontEndModel ideal(int zc_length, double noise_figure_db, bool noise_enabled);
};

/// Push one frame through a tap channel and front end. Applies the exact
/// per-subcarrier response H(f_k) = sum_taps gain * exp(-i*2*pi*f_k*delay)
/// (fractional delays stay exact), then the front-end ripple and gain error,
/// then band-limited white Gaussian noise at thermal + noise-figure power
/// over the occupied bandwidth. Output length equals the frame length.
ComplexBaseband apply_channel(const TxFrame& frame, const ChannelRealization& channel,
                              const FrontEndModel& fe, const SounderConfig& cfg,
                              Rng& rng);

/// Total power of a baseband capture in dBm (via its absolute anchor).
double measure_power_dbm(const ComplexBaseband& signal);

}  // namespace csound
