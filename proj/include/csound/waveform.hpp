// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "csound/core.hpp"

namespace csound {

// Complex baseband samples with an absolute power anchor. dbm_at_unit_power
// is the power in dBm that a digital signal of unit mean-square amplitude
// represents; it models the fixed full-scale mapping of the converters, so
// scaling the samples moves the represented power and nothing else.
struct ComplexBaseband {
    Eigen::VectorXcd samples;
    double sample_rate_hz = 0.0;
    double dbm_at_unit_power = 0.0;

    double digital_power() const {
        if (samples.size() == 0) return 0.0;
        return samples.squaredNorm() / static_cast<double>(samples.size());
    }
};

// Constant-amplitude sounding sequence.
struct ZcSequence {
    int root = 1;
    int length = 0;
    Eigen::VectorXcd values;
};

// One transmit frame: n_repetitions back-to-back copies of the OFDM-modulated
// sequence, no cyclic prefix. freq_reference holds the occupied-subcarrier
// values (sequence times any applied transmit coefficients); the receiver
// divides by it, so it must describe exactly what the digital front end sends.
struct TxFrame {
    ComplexBaseband baseband;
    Eigen::VectorXcd freq_reference;  // length = zc_length
    int repetitions = 0;
    int fft_size = 0;
    double subcarrier_spacing_hz = 0.0;

    int zc_length() const { return static_cast<int>(freq_reference.size()); }
    double duration_s() const {
        return static_cast<double>(baseband.samples.size()) / baseband.sample_rate_hz;
    }
};

/// Generate a Zadoff-Chu sequence: values[n] = exp(-i*pi*root*n*(n+1)/length).
/// Requires odd length >= 3 and gcd(root, length) == 1 with 0 < root < length;
/// those are exactly the conditions for unit modulus and perfect periodic
/// autocorrelation.
ZcSequence zc_generate(int root, int length);

// Subcarrier layout: symbol index j maps to the signed offset
// j - (length-1)/2, placed on the FFT grid centered on DC (offset 0 = DC,
// negative offsets wrap to the top bins).
int subcarrier_offset(int j, int zc_length);
int subcarrier_fft_bin(int j, int zc_length, int fft_size);

/// Place a length-L symbol onto the occupied bins of an fft_size spectrum.
Eigen::VectorXcd map_symbol_to_bins(const Eigen::VectorXcd& symbol, int fft_size);

/// Gather the occupied bins of an fft_size spectrum back into symbol order.
Eigen::VectorXcd extract_occupied_bins(const Eigen::VectorXcd& spectrum, int zc_length);

/// Modulate one OFDM period: inverse transform of the mapped symbol with the
/// 1/fft_size convention. Output length = cfg.fft_size.
Eigen::VectorXcd ofdm_modulate(const Eigen::VectorXcd& symbol, const SounderConfig& cfg);

/// Build the repeated sounding frame for a configuration. The absolute power
/// anchor is set so the nominal (unit-symbol) frame radiates cfg.tx_eirp_dbm.
TxFrame build_sounding_frame(const SounderConfig& cfg, int root = 1);

/// Apply per-subcarrier transmit coefficients and re-modulate. The baseband
/// and the frequency reference change together, so receiver-side division
/// stays exact.
TxFrame apply_tx_coefficients(const TxFrame& frame, const Eigen::VectorXcd& coefficients);

}  // namespace csound
