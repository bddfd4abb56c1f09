// SPDX-License-Identifier: Apache-2.0
#include "csound/waveform.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "csound/dft.hpp"

namespace csound {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

ZcSequence zc_generate(int root, int length) {
    if (length < 3)
        throw std::invalid_argument("zc_generate: length must be >= 3");
    if (length % 2 == 0)
        throw std::invalid_argument(
            "zc_generate: length must be odd (even lengths are antiperiodic "
            "under the n*(n+1) phase law)");
    if (root <= 0 || root >= length)
        throw std::invalid_argument("zc_generate: root must satisfy 0 < root < length");
    if (std::gcd(root, length) != 1)
        throw std::invalid_argument("zc_generate: root must be coprime with length");

    ZcSequence seq;
    seq.root = root;
    seq.length = length;
    seq.values.resize(length);
    const std::int64_t q = root;
    const std::int64_t n2 = 2LL * length;
    for (int n = 0; n < length; ++n) {
        // phase = -pi*q*n*(n+1)/N; reduce q*n*(n+1) mod 2N in integers first
        // so the argument stays small and exactly representable.
        const std::int64_t m = (q * n % n2) * (n + 1) % n2;
        const double phi = -kPi * static_cast<double>(m) / static_cast<double>(length);
        seq.values(n) = {std::cos(phi), std::sin(phi)};
    }
    return seq;
}

int subcarrier_offset(int j, int zc_length) {
    return j - (zc_length - 1) / 2;
}

int subcarrier_fft_bin(int j, int zc_length, int fft_size) {
    const int off = subcarrier_offset(j, zc_length);
    return off >= 0 ? off : fft_size + off;
}

Eigen::VectorXcd map_symbol_to_bins(const Eigen::VectorXcd& symbol, int fft_size) {
    const int l = static_cast<int>(symbol.size());
    if (fft_size < l)
        throw std::invalid_argument("map_symbol_to_bins: fft_size < symbol length");
    Eigen::VectorXcd bins = Eigen::VectorXcd::Zero(fft_size);
    for (int j = 0; j < l; ++j)
        bins(subcarrier_fft_bin(j, l, fft_size)) = symbol(j);
    return bins;
}

Eigen::VectorXcd extract_occupied_bins(const Eigen::VectorXcd& spectrum, int zc_length) {
    const int n = static_cast<int>(spectrum.size());
    if (n < zc_length)
        throw std::invalid_argument("extract_occupied_bins: spectrum shorter than zc_length");
    Eigen::VectorXcd symbol(zc_length);
    for (int j = 0; j < zc_length; ++j)
        symbol(j) = spectrum(subcarrier_fft_bin(j, zc_length, n));
    return symbol;
}

Eigen::VectorXcd ofdm_modulate(const Eigen::VectorXcd& symbol, const SounderConfig& cfg) {
    if (static_cast<int>(symbol.size()) != cfg.zc_length)
        throw std::invalid_argument("ofdm_modulate: symbol length != cfg.zc_length");
    Eigen::VectorXcd bins = map_symbol_to_bins(symbol, cfg.fft_size);
    Eigen::VectorXcd period;
    dft_inverse(bins, period);  // includes the 1/fft_size factor
    return period;
}

TxFrame build_sounding_frame(const SounderConfig& cfg, int root) {
    require_valid(cfg);
    const ZcSequence seq = zc_generate(root, cfg.zc_length);

    TxFrame frame;
    frame.freq_reference = seq.values;
    frame.repetitions = cfg.n_repetitions;
    frame.fft_size = cfg.fft_size;
    frame.subcarrier_spacing_hz = cfg.subcarrier_spacing_hz;

    const Eigen::VectorXcd period = ofdm_modulate(seq.values, cfg);
    const int n = cfg.fft_size;
    frame.baseband.samples.resize(static_cast<Eigen::Index>(cfg.n_repetitions) * n);
    for (int r = 0; r < cfg.n_repetitions; ++r)
        frame.baseband.samples.segment(static_cast<Eigen::Index>(r) * n, n) = period;
    frame.baseband.sample_rate_hz = cfg.sample_rate_hz();

    // Anchor digital full scale so the nominal unit-magnitude symbol radiates
    // exactly the configured EIRP. Nominal frame power is L/N^2.
    const double nominal_power =
        static_cast<double>(cfg.zc_length) / (static_cast<double>(n) * n);
    frame.baseband.dbm_at_unit_power =
        cfg.tx_eirp_dbm.value - 10.0 * std::log10(nominal_power);
    return frame;
}

TxFrame apply_tx_coefficients(const TxFrame& frame, const Eigen::VectorXcd& coefficients) {
    if (coefficients.size() != frame.freq_reference.size())
        throw std::invalid_argument(
            "apply_tx_coefficients: coefficient length != zc_length");
    if (frame.repetitions < 1 || frame.fft_size < frame.zc_length())
        throw std::invalid_argument("apply_tx_coefficients: malformed frame");

    TxFrame out = frame;
    out.freq_reference = frame.freq_reference.cwiseProduct(coefficients);

    Eigen::VectorXcd bins = map_symbol_to_bins(out.freq_reference, frame.fft_size);
    Eigen::VectorXcd period;
    dft_inverse(bins, period);
    const int n = frame.fft_size;
    out.baseband.samples.resize(static_cast<Eigen::Index>(frame.repetitions) * n);
    for (int r = 0; r < frame.repetitions; ++r)
        out.baseband.samples.segment(static_cast<Eigen::Index>(r) * n, n) = period;
    return out;
}

}  // namespace csound
