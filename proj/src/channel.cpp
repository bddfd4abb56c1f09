// SPDX-License-Identifier: Apache-2.0
#include "csound/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "csound/dft.hpp"

namespace csound {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegPerRad = 57.29577951308232;
}  // namespace

double fspl_db(double distance_m, double frequency_ghz, double g_tx_dbi, double g_rx_dbi) {
    if (!(distance_m > 0.0))
        throw std::invalid_argument("fspl_db: distance must be > 0");
    if (!(frequency_ghz > 0.0))
        throw std::invalid_argument("fspl_db: frequency must be > 0");
    return 20.0 * std::log10(distance_m * frequency_ghz) + 32.44 - g_tx_dbi - g_rx_dbi;
}

double scattering_gain_db(double gamma_dbsm, double frequency_ghz) {
    const double lambda = wavelength_m(frequency_ghz);
    return gamma_dbsm + 10.0 * std::log10(4.0 * kPi / (lambda * lambda));
}

double SensingGeometry::bistatic_angle_deg() const {
    const Eigen::Vector3d a = tx - target;
    const Eigen::Vector3d b = rx - target;
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return std::acos(c) * kDegPerRad;
}

double target_path_loss_db(const SensingGeometry& geom, double gamma_dbsm,
                           double frequency_ghz, double g_tx_dbi, double g_rx_dbi) {
    const double d1 = geom.d1_m();
    const double d2 = geom.d2_m();
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw std::invalid_argument(
            "target_path_loss_db: target coincides with a terminal");
    const double pl1 = fspl_db(d1, frequency_ghz, g_tx_dbi, 0.0);
    const double pl2 = fspl_db(d2, frequency_ghz, 0.0, g_rx_dbi);
    return pl1 - scattering_gain_db(gamma_dbsm, frequency_ghz) + pl2;
}

double bistatic_delay_s(const Eigen::Vector3d& tx, const Eigen::Vector3d& rx,
                        const Eigen::Vector3d& target) {
    return ((target - tx).norm() + (rx - target).norm()) / kSpeedOfLight;
}

std::string to_string(TargetClass c) {
    return c == TargetClass::passenger_car ? "passenger_car" : "pedestrian";
}

std::string to_string(SensingMode m) {
    return m == SensingMode::monostatic ? "monostatic" : "bistatic";
}

TargetClass target_class_from_string(const std::string& s) {
    if (s == "passenger_car") return TargetClass::passenger_car;
    if (s == "pedestrian") return TargetClass::pedestrian;
    throw std::invalid_argument("unknown target class: " + s);
}

SensingMode sensing_mode_from_string(const std::string& s) {
    if (s == "monostatic") return SensingMode::monostatic;
    if (s == "bistatic") return SensingMode::bistatic;
    throw std::invalid_argument("unknown sensing mode: " + s);
}

RcsModel rcs_model_for(TargetClass cls, SensingMode mode) {
    // Fitted log-normal parameters per class and geometry, dBsm.
    if (cls == TargetClass::passenger_car)
        return mode == SensingMode::bistatic ? RcsModel{-0.1, 6.1} : RcsModel{7.7, 8.4};
    return mode == SensingMode::bistatic ? RcsModel{-14.4, 6.7} : RcsModel{-6.2, 10.0};
}

double rcs_sample_dbsm(const RcsModel& model, Rng& rng) {
    if (model.sigma_dbsm < 0.0)
        throw std::invalid_argument("rcs_sample_dbsm: sigma must be >= 0");
    return model.mu_dbsm + model.sigma_dbsm * rng.normal();
}

namespace {

// Smooth band ripple: three low-order sinusoids with seeded coefficients.
// Peak magnitude excursion equals mag_peak_db, peak phase excursion
// phase_peak_deg.
Eigen::VectorXcd make_ripple(Rng& rng, int length, double mag_peak_db,
                             double phase_peak_deg) {
    Eigen::ArrayXd mag_db = Eigen::ArrayXd::Zero(length);
    Eigen::ArrayXd phase_deg = Eigen::ArrayXd::Zero(length);
    double mag_norm = 0.0, phase_norm = 0.0;
    double amp_m[3], amp_p[3], cyc_m[3], cyc_p[3], ph_m[3], ph_p[3];
    for (int k = 0; k < 3; ++k) {
        amp_m[k] = 0.25 + rng.uniform();
        cyc_m[k] = 1.0 + std::floor(rng.uniform() * 4.0);
        ph_m[k] = rng.uniform() * 2.0 * kPi;
        amp_p[k] = 0.25 + rng.uniform();
        cyc_p[k] = 1.0 + std::floor(rng.uniform() * 4.0);
        ph_p[k] = rng.uniform() * 2.0 * kPi;
        mag_norm += amp_m[k];
        phase_norm += amp_p[k];
    }
    for (int j = 0; j < length; ++j) {
        const double x = static_cast<double>(j) / length;
        double m = 0.0, p = 0.0;
        for (int k = 0; k < 3; ++k) {
            m += amp_m[k] * std::cos(2.0 * kPi * cyc_m[k] * x + ph_m[k]);
            p += amp_p[k] * std::cos(2.0 * kPi * cyc_p[k] * x + ph_p[k]);
        }
        mag_db(j) = mag_peak_db * m / mag_norm;
        phase_deg(j) = phase_peak_deg * p / phase_norm;
    }
    Eigen::VectorXcd ripple(length);
    for (int j = 0; j < length; ++j) {
        const double amp = std::pow(10.0, mag_db(j) / 20.0);
        const double ph = phase_deg(j) / kDegPerRad;
        ripple(j) = std::polar(amp, ph);
    }
    return ripple;
}

}  // namespace

FrontEndModel FrontEndModel::seeded(std::uint64_t seed, int zc_length,
                                    const Options& opts) {
    if (zc_length < 3)
        throw std::invalid_argument("FrontEndModel::seeded: zc_length too small");
    if (opts.tx_ripple_db > 3.0 || opts.rx_ripple_db > 3.0 ||
        opts.tx_ripple_db < 0.0 || opts.rx_ripple_db < 0.0)
        throw std::invalid_argument(
            "FrontEndModel::seeded: ripple peak must lie in [0, 3] dB");
    FrontEndModel fe;
    fe.seed = seed;
    Rng rng_tx(derive_seed(seed, 0x74787269ull));
    Rng rng_rx(derive_seed(seed, 0x72787269ull));
    fe.tx_ripple = make_ripple(rng_tx, zc_length, opts.tx_ripple_db, opts.tx_phase_deg);
    fe.rx_ripple = make_ripple(rng_rx, zc_length, opts.rx_ripple_db, opts.rx_phase_deg);
    fe.rx_gain_offset_db = opts.rx_gain_offset_db;
    fe.noise_figure_db = opts.noise_figure_db;
    fe.noise_enabled = opts.noise_enabled;
    return fe;
}

FrontEndModel FrontEndModel::ideal(int zc_length, double noise_figure_db,
                                   bool noise_enabled) {
    FrontEndModel fe;
    fe.tx_ripple = Eigen::VectorXcd::Ones(zc_length);
    fe.rx_ripple = Eigen::VectorXcd::Ones(zc_length);
    fe.noise_figure_db = noise_figure_db;
    fe.noise_enabled = noise_enabled;
    return fe;
}

ComplexBaseband apply_channel(const TxFrame& frame, const ChannelRealization& channel,
                              const FrontEndModel& fe, const SounderConfig& cfg,
                              Rng& rng) {
    const int l = cfg.zc_length;
    const int n = cfg.fft_size;
    const int reps = cfg.n_repetitions;
    if (frame.zc_length() != l || frame.fft_size != n || frame.repetitions != reps)
        throw std::invalid_argument("apply_channel: frame numerology != cfg");
    if (std::abs(frame.baseband.sample_rate_hz - cfg.sample_rate_hz()) > 1e-6)
        throw std::invalid_argument("apply_channel: sample-rate mismatch");
    if (fe.tx_ripple.size() != l || fe.rx_ripple.size() != l)
        throw std::invalid_argument("apply_channel: front-end ripple length != zc_length");
    // The repeating frame makes the channel circular over one period, so any
    // delay inside (-period, period) is representable; clock skew can push a
    // physical delay slightly negative (it aliases to the tail of the grid).
    // Anything beyond a period is ambiguous and rejected.
    const double period_s = cfg.zc_period_s();
    for (const auto& tap : channel.taps) {
        if (!(std::abs(tap.delay_s) < period_s))
            throw std::invalid_argument(
                "apply_channel: tap delay exceeds one sequence period (cyclically ambiguous)");
    }

    // Per-subcarrier response over the occupied bins.
    const double scs = cfg.subcarrier_spacing_hz;
    Eigen::VectorXcd y(l);
    const double rx_gain = std::pow(10.0, fe.rx_gain_offset_db / 20.0);
    for (int j = 0; j < l; ++j) {
        const double f = subcarrier_offset(j, l) * scs;
        std::complex<double> h{0.0, 0.0};
        for (const auto& tap : channel.taps) {
            const double phi = -2.0 * kPi * f * tap.delay_s;
            h += tap.gain * std::complex<double>(std::cos(phi), std::sin(phi));
        }
        y(j) = frame.freq_reference(j) * fe.tx_ripple(j) * h * fe.rx_ripple(j) * rx_gain;
    }

    // The frame repeats with no cyclic prefix, so in steady state the channel
    // acts circularly on each period: remodulate and tile.
    Eigen::VectorXcd period;
    {
        Eigen::VectorXcd bins = map_symbol_to_bins(y, n);
        dft_inverse(bins, period);
    }

    ComplexBaseband out;
    out.sample_rate_hz = frame.baseband.sample_rate_hz;
    out.dbm_at_unit_power = frame.baseband.dbm_at_unit_power;
    const Eigen::Index m = static_cast<Eigen::Index>(reps) * n;
    out.samples.resize(m);
    for (int r = 0; r < reps; ++r)
        out.samples.segment(static_cast<Eigen::Index>(r) * n, n) = period;

    if (fe.noise_enabled) {
        // White Gaussian noise, band-limited to the occupied bandwidth, with
        // total power kTB + NF referred to the absolute anchor. Generated on
        // the in-band bins of the capture-length grid.
        const double noise_dbm = cfg.thermal_noise_dbm() + fe.noise_figure_db;
        const double sigma2 = std::pow(10.0, (noise_dbm - out.dbm_at_unit_power) / 10.0);
        const Eigen::Index mm = m;
        const std::int64_t half = static_cast<std::int64_t>(l) * reps / 2;
        const std::int64_t n_in = 2 * half + 1;
        const double bin_var =
            sigma2 * static_cast<double>(mm) * static_cast<double>(mm) / n_in;
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(mm);
        for (std::int64_t o = -half; o <= half; ++o) {
            const Eigen::Index bin = o >= 0 ? o : mm + o;
            w(bin) = rng.cnormal(bin_var);
        }
        Eigen::VectorXcd noise;
        dft_inverse(w, noise);
        out.samples += noise;
    }
    return out;
}

double measure_power_dbm(const ComplexBaseband& signal) {
    const double p = signal.digital_power();
    if (!(p > 0.0))
        throw std::invalid_argument("measure_power_dbm: zero-power signal");
    return signal.dbm_at_unit_power + 10.0 * std::log10(p);
}

}  // namespace csound
