// SPDX-License-Identifier: Apache-2.0
#include "csound/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace csound {

double path_loss_from_power(double tx_eirp_dbm, double received_dbm, double g_rx_dbi) {
    return tx_eirp_dbm + g_rx_dbi - received_dbm;
}

namespace {

void check_fit_inputs(const std::vector<PathLossSample>& samples, double d0_m, int min_n) {
    if (!(d0_m > 0.0)) throw std::invalid_argument("fit_path_loss: d0 must be positive");
    if (static_cast<int>(samples.size()) < min_n)
        throw std::invalid_argument("fit_path_loss: need at least " + std::to_string(min_n) +
                                    " samples");
    double lo = samples.front().distance_m, hi = lo;
    for (const auto& s : samples) {
        if (!(s.distance_m > 0.0))
            throw std::invalid_argument("fit_path_loss: distances must be positive");
        if (!std::isfinite(s.path_loss_db))
            throw std::invalid_argument("fit_path_loss: non-finite path loss");
        lo = std::min(lo, s.distance_m);
        hi = std::max(hi, s.distance_m);
    }
    if (!(hi > lo))
        throw std::invalid_argument("fit_path_loss: need at least two distinct distances");
}

}  // namespace

PathLossFit fit_path_loss(const std::vector<PathLossSample>& samples, double d0_m) {
    check_fit_inputs(samples, d0_m, 3);
    const int n = static_cast<int>(samples.size());

    // ordinary least squares on x = 10*log10(d/d0), so the slope is the
    // path-loss exponent directly
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
        const double x = 10.0 * std::log10(s.distance_m / d0_m);
        sx += x;
        sy += s.path_loss_db;
        sxx += x * x;
        sxy += x * s.path_loss_db;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;

    double rss = 0.0;
    for (const auto& s : samples) {
        const double x = 10.0 * std::log10(s.distance_m / d0_m);
        const double r = s.path_loss_db - (intercept + slope * x);
        rss += r * r;
    }

    PathLossFit fit;
    fit.ple = slope;
    fit.intercept_db = intercept;
    fit.sigma_db = std::sqrt(rss / (n - 2));
    fit.d0_m = d0_m;
    fit.anchored = false;
    fit.n_samples = n;
    return fit;
}

PathLossFit fit_path_loss_anchored(const std::vector<PathLossSample>& samples,
                                   double frequency_ghz, double d0_m) {
    check_fit_inputs(samples, d0_m, 2);
    if (!(frequency_ghz > 0.0))
        throw std::invalid_argument("fit_path_loss_anchored: frequency must be positive");
    const int n = static_cast<int>(samples.size());
    const double intercept = fspl_db(d0_m, frequency_ghz);

    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : samples) {
        const double x = 10.0 * std::log10(s.distance_m / d0_m);
        sxx += x * x;
        sxy += x * (s.path_loss_db - intercept);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit_path_loss_anchored: samples give no slope information");
    const double slope = sxy / sxx;

    double rss = 0.0;
    for (const auto& s : samples) {
        const double x = 10.0 * std::log10(s.distance_m / d0_m);
        const double r = s.path_loss_db - (intercept + slope * x);
        rss += r * r;
    }

    PathLossFit fit;
    fit.ple = slope;
    fit.intercept_db = intercept;
    fit.sigma_db = std::sqrt(rss / (n - 1));
    fit.d0_m = d0_m;
    fit.anchored = true;
    fit.n_samples = n;
    return fit;
}

namespace {

std::vector<std::size_t> angle_sorted_order(const std::vector<BeamDefinition>& beams) {
    std::vector<std::size_t> order(beams.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (beams[a].az_deg != beams[b].az_deg) return beams[a].az_deg < beams[b].az_deg;
        if (beams[a].el_deg != beams[b].el_deg) return beams[a].el_deg < beams[b].el_deg;
        return beams[a].beam_id < beams[b].beam_id;
    });
    return order;
}

void check_beam_stack(const std::vector<Pdp>& beam_pdps,
                      const std::vector<BeamDefinition>& beams, const char* who) {
    if (beam_pdps.empty()) throw std::invalid_argument(std::string(who) + ": no profiles");
    if (beam_pdps.size() != beams.size())
        throw std::invalid_argument(std::string(who) + ": profile/beam count mismatch");
    for (const auto& p : beam_pdps) {
        if (!p.threshold_applied)
            throw std::invalid_argument(std::string(who) + ": profiles must be thresholded");
        if (p.power_mw.size() != beam_pdps.front().power_mw.size())
            throw std::invalid_argument(std::string(who) + ": profile length mismatch");
    }
}

double retained_sum_mw(const Pdp& p) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.power_mw.size(); ++i) {
        if (p.retained[i]) sum += p.power_mw[i];
    }
    return sum;
}

}  // namespace

std::vector<PapEntry> build_pap(const std::vector<Pdp>& beam_pdps,
                                const std::vector<BeamDefinition>& beams) {
    check_beam_stack(beam_pdps, beams, "build_pap");
    std::vector<PapEntry> pap;
    pap.reserve(beams.size());
    for (std::size_t i : angle_sorted_order(beams)) {
        PapEntry e;
        e.beam_id = beams[i].beam_id;
        e.face = beams[i].face;
        e.az_deg = beams[i].az_deg;
        e.el_deg = beams[i].el_deg;
        e.power_mw = retained_sum_mw(beam_pdps[i]);
        pap.push_back(e);
    }
    return pap;
}

Padp build_padp(const std::vector<Pdp>& beam_pdps, const std::vector<BeamDefinition>& beams) {
    check_beam_stack(beam_pdps, beams, "build_padp");
    const auto order = angle_sorted_order(beams);
    const Eigen::Index n_taps = beam_pdps.front().power_mw.size();

    Padp padp;
    padp.power_mw = Eigen::ArrayXXd::Zero(static_cast<Eigen::Index>(order.size()), n_taps);
    padp.az_deg.resize(static_cast<Eigen::Index>(order.size()));
    padp.el_deg.resize(static_cast<Eigen::Index>(order.size()));
    padp.tap_spacing_s = beam_pdps.front().tap_spacing_s;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t i = order[r];
        padp.beam_ids.push_back(beams[i].beam_id);
        padp.az_deg[static_cast<Eigen::Index>(r)] = beams[i].az_deg;
        padp.el_deg[static_cast<Eigen::Index>(r)] = beams[i].el_deg;
        for (Eigen::Index t = 0; t < n_taps; ++t) {
            if (beam_pdps[i].retained[t])
                padp.power_mw(static_cast<Eigen::Index>(r), t) = beam_pdps[i].power_mw[t];
        }
    }
    return padp;
}

TargetIsolation isolate_target(const std::vector<Pdp>& snapshots,
                               const std::vector<double>& expected_delay_s,
                               double half_width_s) {
    if (snapshots.size() < 3)
        throw std::invalid_argument("isolate_target: need at least 3 snapshots for a background");
    if (snapshots.size() != expected_delay_s.size())
        throw std::invalid_argument("isolate_target: snapshot/delay count mismatch");
    if (!(half_width_s > 0.0))
        throw std::invalid_argument("isolate_target: window half-width must be positive");
    const Eigen::Index n_taps = snapshots.front().power_mw.size();
    const double spacing = snapshots.front().tap_spacing_s;
    for (const auto& p : snapshots) {
        if (p.power_mw.size() != n_taps || p.tap_spacing_s != spacing)
            throw std::invalid_argument("isolate_target: profiles do not share a delay grid");
    }

    TargetIsolation iso;
    iso.background_mw.resize(n_taps);
    std::vector<double> column(snapshots.size());
    for (Eigen::Index t = 0; t < n_taps; ++t) {
        for (std::size_t s = 0; s < snapshots.size(); ++s) column[s] = snapshots[s].power_mw[t];
        const std::size_t mid = column.size() / 2;
        std::nth_element(column.begin(), column.begin() + mid, column.end());
        double median = column[mid];
        if (column.size() % 2 == 0) {
            std::nth_element(column.begin(), column.begin() + mid - 1, column.begin() + mid);
            median = 0.5 * (median + column[mid - 1]);
        }
        iso.background_mw[t] = median;
    }

    iso.target_power_mw.resize(static_cast<Eigen::Index>(snapshots.size()));
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
        const int lo = std::max<int>(
            0, static_cast<int>(std::ceil((expected_delay_s[s] - half_width_s) / spacing)));
        const int hi = std::min<int>(
            static_cast<int>(n_taps) - 1,
            static_cast<int>(std::floor((expected_delay_s[s] + half_width_s) / spacing)));
        if (lo > hi)
            throw std::invalid_argument("isolate_target: expected delay falls outside the profile");
        double sum = 0.0;
        for (int t = lo; t <= hi; ++t) {
            sum += std::max(snapshots[s].power_mw[t] - iso.background_mw[t], 0.0);
        }
        iso.window_lo.push_back(lo);
        iso.window_hi.push_back(hi);
        iso.target_power_mw[static_cast<Eigen::Index>(s)] = sum;
    }
    return iso;
}

double rcs_gamma_dbsm(double target_power_dbm, const SensingGeometry& geom,
                      double frequency_ghz, double tx_eirp_dbm,
                      double g_tx_dbi, double g_rx_dbi) {
    const double d1 = geom.d1_m();
    const double d2 = geom.d2_m();
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw std::invalid_argument("rcs_gamma_dbsm: target coincides with a terminal");
    // the measured power already includes any real antenna gains, and so do
    // the legs, so the gains cancel out of the inversion
    const double path_loss = tx_eirp_dbm - target_power_dbm;
    const double legs = fspl_db(d1, frequency_ghz, g_tx_dbi, 0.0) +
                        fspl_db(d2, frequency_ghz, 0.0, g_rx_dbi);
    // invert: legs - gain = loss, with gain = gamma + 10log10(4*pi/lambda^2)
    return legs - path_loss - scattering_gain_db(0.0, frequency_ghz);
}

RcsModel fit_rcs(const std::vector<double>& gamma_dbsm) {
    if (gamma_dbsm.size() < 2)
        throw std::invalid_argument("fit_rcs: need at least 2 estimates");
    const double n = static_cast<double>(gamma_dbsm.size());
    double mean = 0.0;
    for (double g : gamma_dbsm) mean += g;
    mean /= n;
    double ss = 0.0;
    for (double g : gamma_dbsm) ss += (g - mean) * (g - mean);

    RcsModel model;
    model.mu_dbsm = mean;
    model.sigma_dbsm = std::sqrt(ss / (n - 1.0));
    return model;
}

LinkBudget link_budget(const SounderConfig& cfg, double rx_gain_dbi,
                       double snr_min_db, bool array_port) {
    require_valid(cfg);
    LinkBudget b;
    b.tx_eirp_dbm = cfg.tx_eirp_dbm.value;
    b.rx_gain_dbi = rx_gain_dbi;
    b.processing_gain_db = cfg.processing_gain_db();
    b.snr_min_db = snr_min_db;
    const double nf = array_port ? cfg.rx_noise_figure_array_db : cfg.rx_noise_figure_omni_db;
    b.noise_floor_dbm = cfg.thermal_noise_dbm() + nf;
    b.max_path_loss_db = b.tx_eirp_dbm + b.rx_gain_dbi + b.processing_gain_db -
                         b.snr_min_db - b.noise_floor_dbm;
    return b;
}

}  // namespace csound
