// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "csound/units.hpp"

namespace csound {

// Operating bands of the sounder. 7.0 GHz runs with omnidirectional antennas
// only; the three upper bands add four phased-array faces at the receiver.
struct BandPlan {
    double center_frequency_ghz = 14.5;
    int beams_per_array = 20;     // beams per face; 0 means omni-only band
    int elements_per_array = 64;  // radiating elements per face

    /// Look up the plan for one of the supported center frequencies
    /// (7.0, 8.3, 11.3, 14.5 GHz). Throws for anything else.
    static BandPlan from_frequency_ghz(double f_ghz);

    bool omni_only() const { return beams_per_array == 0; }
};

// Full sounder configuration. Defaults reproduce the 400 MHz / 120 kHz
// numerology: a length-3343 sequence on a 4096-bin grid, repeated 4 times
// per frame.
struct SounderConfig {
    BandPlan band;
    double bandwidth_hz = 400e6;
    double subcarrier_spacing_hz = 120e3;
    int zc_length = 3343;
    int n_repetitions = 4;
    int fft_size = 4096;
    double max_excess_delay_s = 8e-6;
    Dbm tx_eirp_dbm{43.0};
    double rx_noise_figure_omni_db = 1.5;
    double rx_noise_figure_array_db = 8.3;

    static SounderConfig defaults(double center_frequency_ghz = 14.5);

    // Derived quantities, all exact functions of the fields above.
    double occupied_bandwidth_hz() const { return zc_length * subcarrier_spacing_hz; }
    double sample_rate_hz() const { return fft_size * subcarrier_spacing_hz; }
    double tap_spacing_s() const { return 1.0 / occupied_bandwidth_hz(); }
    double zc_period_s() const { return 1.0 / subcarrier_spacing_hz; }
    double frame_duration_s() const { return n_repetitions / subcarrier_spacing_hz; }
    int samples_per_frame() const { return n_repetitions * fft_size; }
    double center_frequency_hz() const { return band.center_frequency_ghz * 1e9; }
    /// Thermal noise power over the occupied bandwidth, dBm (kT = -174 dBm/Hz).
    double thermal_noise_dbm() const {
        return -174.0 + 10.0 * std::log10(occupied_bandwidth_hz());
    }
    /// Coherent processing gain of the full correlator, dB.
    double processing_gain_db() const {
        return 10.0 * std::log10(static_cast<double>(zc_length) * n_repetitions);
    }
};

/// Check every configuration rule; returns one message per violation
/// (empty result means the configuration is valid).
std::vector<std::string> validate_config(const SounderConfig& cfg);

/// validate_config, throwing std::invalid_argument listing all violations.
void require_valid(const SounderConfig& cfg);

/// Parse a configuration from JSON text (SI units). Unknown keys are
/// rejected; missing keys fall back to the defaults for the band.
SounderConfig parse_config(const std::string& json_text);

/// Load a configuration from a JSON file.
SounderConfig load_config(const std::string& path);

/// Serialize a configuration to JSON text (round-trips through parse_config).
std::string config_to_json(const SounderConfig& cfg);

}  // namespace csound
