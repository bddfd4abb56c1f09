// SPDX-License-Identifier: Apache-2.0
#include "csound/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csound/dft.hpp"

namespace csound {

Cir correlate(const ComplexBaseband& rx, const TxFrame& frame, const SounderConfig& cfg,
              const Eigen::VectorXcd* rx_coefficients, double power_offset_db,
              const CaptureMeta& meta) {
    const int l = cfg.zc_length;
    const int n = cfg.fft_size;
    const int reps = cfg.n_repetitions;
    if (frame.zc_length() != l || frame.fft_size != n)
        throw std::invalid_argument("correlate: reference frame numerology != cfg");
    if (std::abs(rx.sample_rate_hz - cfg.sample_rate_hz()) > 1e-6)
        throw std::invalid_argument("correlate: sample-rate mismatch");
    if (rx.samples.size() < static_cast<Eigen::Index>(reps) * n)
        throw std::invalid_argument("correlate: capture shorter than one frame");
    if (rx_coefficients && rx_coefficients->size() != l)
        throw std::invalid_argument("correlate: coefficient length != zc_length");

    // Coherent average of the repetitions; white noise drops by the
    // repetition count, the periodic signal is untouched.
    Eigen::VectorXcd avg = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < reps; ++r)
        avg += rx.samples.segment(static_cast<Eigen::Index>(r) * n, n);
    avg /= static_cast<double>(reps);

    Eigen::VectorXcd spectrum;
    dft_forward(avg, spectrum);
    Eigen::VectorXcd occupied = extract_occupied_bins(spectrum, l);

    // Zero-forcing by the known reference. The sequence has unit modulus, so
    // this is simultaneously the matched filter and an exact equalizer; a
    // vanishing reference bin means the frame does not match the config.
    const double ref_scale = frame.freq_reference.cwiseAbs().mean();
    Eigen::VectorXcd equalized(l);
    for (int j = 0; j < l; ++j) {
        const std::complex<double> ref = frame.freq_reference(j);
        if (std::abs(ref) < 1e-12 * ref_scale)
            throw std::invalid_argument("correlate: reference bin near zero");
        equalized(j) = occupied(j) / ref;
    }
    if (rx_coefficients)
        equalized = equalized.cwiseProduct(*rx_coefficients);

    // Reorder from symbol order (negative offsets first) to DFT bin order so
    // the inverse transform lands delays at bin = delay / tap spacing.
    const int half = (l - 1) / 2;
    Eigen::VectorXcd bins(l);
    for (int j = 0; j < l; ++j) {
        const int p = (j - half + l) % l;
        bins(p) = equalized(j);
    }

    Cir cir;
    dft_inverse(bins, cir.taps);
    cir.tap_spacing_s = cfg.tap_spacing_s();
    // Absolute anchor: a unit tap corresponds to the reference frame arriving
    // with unit channel gain, i.e. the radiated power itself.
    cir.power_reference_dbm = rx.dbm_at_unit_power +
                              10.0 * std::log10(frame.baseband.digital_power()) +
                              power_offset_db;
    cir.meta = meta;
    return cir;
}

Pdp pdp_from_cir(const Cir& cir) {
    Pdp pdp;
    const int n = cir.n_taps();
    if (n == 0) throw std::invalid_argument("pdp_from_cir: empty impulse response");
    const double ref_mw = std::pow(10.0, cir.power_reference_dbm / 10.0);
    pdp.power_mw = cir.taps.array().abs2() * ref_mw;
    pdp.retained = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
    pdp.threshold_applied = false;
    pdp.tap_spacing_s = cir.tap_spacing_s;
    pdp.power_reference_dbm = cir.power_reference_dbm;
    pdp.meta = cir.meta;
    return pdp;
}

Pdp noise_threshold(const Pdp& pdp, double margin_db) {
    if (pdp.threshold_applied)
        throw std::invalid_argument("noise_threshold: already thresholded");
    const int n = pdp.n_taps();
    if (n < 10)
        throw std::invalid_argument("noise_threshold: profile too short");

    // Tail decile by index: the end of the unambiguous delay window, which a
    // sane scene leaves free of propagation paths.
    const int tail = std::max(1, n / 10);
    std::vector<double> tail_power(pdp.power_mw.data() + (n - tail),
                                   pdp.power_mw.data() + n);
    std::sort(tail_power.begin(), tail_power.end());
    const double median = tail % 2 == 1
                              ? tail_power[tail / 2]
                              : 0.5 * (tail_power[tail / 2 - 1] + tail_power[tail / 2]);
    double mean = 0.0;
    for (double p : tail_power) mean += p;
    mean /= tail;

    const double peak = pdp.power_mw.maxCoeff();
    const double threshold =
        std::max(median * std::pow(10.0, margin_db / 10.0), peak * 1e-12);

    Pdp out = pdp;
    out.threshold_applied = true;
    out.margin_db = margin_db;
    out.threshold_mw = threshold;
    out.noise_floor_mw = median;
    out.noise_mean_mw = mean;
    out.tail_warning_count = 0;
    for (int i = 0; i < n; ++i) {
        const bool keep = pdp.power_mw(i) >= threshold;
        out.retained(i) = keep;
        out.power_mw(i) = keep ? std::max(pdp.power_mw(i) - mean, 0.0) : pdp.power_mw(i);
        if (keep && i >= n - tail) ++out.tail_warning_count;
    }
    return out;
}

OmniPdp synthesize_omni_pdp(const std::vector<Pdp>& beam_pdps) {
    if (beam_pdps.empty())
        throw std::invalid_argument("synthesize_omni_pdp: no profiles");
    const int n = beam_pdps.front().n_taps();
    const double spacing = beam_pdps.front().tap_spacing_s;
    OmniPdp omni;
    omni.power_mw = Eigen::ArrayXd::Zero(n);
    omni.contributing = Eigen::ArrayXi::Zero(n);
    omni.tap_spacing_s = spacing;
    omni.n_beams = static_cast<int>(beam_pdps.size());
    omni.meta = beam_pdps.front().meta;
    omni.meta.beam_id = -1;
    for (const auto& pdp : beam_pdps) {
        if (!pdp.threshold_applied)
            throw std::invalid_argument("synthesize_omni_pdp: profile not thresholded");
        if (pdp.n_taps() != n || std::abs(pdp.tap_spacing_s - spacing) > 1e-18)
            throw std::invalid_argument("synthesize_omni_pdp: mixed geometries");
        for (int i = 0; i < n; ++i) {
            if (pdp.retained(i)) {
                omni.power_mw(i) += pdp.power_mw(i);
                omni.contributing(i) += 1;
            }
        }
    }
    return omni;
}

std::optional<double> total_power_dbm(const Pdp& pdp) {
    if (!pdp.threshold_applied)
        throw std::invalid_argument("total_power_dbm: profile not thresholded");
    double sum = 0.0;
    bool any = false;
    for (int i = 0; i < pdp.n_taps(); ++i) {
        if (pdp.retained(i)) {
            sum += pdp.power_mw(i);
            any = true;
        }
    }
    if (!any || sum <= 0.0) return std::nullopt;
    return 10.0 * std::log10(sum);
}

std::optional<double> total_power_dbm(const OmniPdp& pdp) {
    const double sum = pdp.power_mw.sum();
    if (!(sum > 0.0)) return std::nullopt;
    return 10.0 * std::log10(sum);
}

}  // namespace csound
