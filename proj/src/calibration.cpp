// SPDX-License-Identifier: Apache-2.0
#include "csound/calibration.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "csound/array.hpp"
#include "csound/scene.hpp"

namespace csound {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double peak_to_peak(const Eigen::ArrayXd& db) {
    return db.maxCoeff() - db.minCoeff();
}

double median_of(const Eigen::ArrayXd& values) {
    std::vector<double> v(values.data(), values.data() + values.size());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
        return 0.5 * (hi + v[mid - 1]);
    }
    return hi;
}

}  // namespace

TxFlatnessResult cal_tx_flatness(const Eigen::ArrayXd& measured_spectrum_dbm,
                                 double target_eirp_dbm, double antenna_gain_dbi,
                                 double bound_db) {
    const int l = static_cast<int>(measured_spectrum_dbm.size());
    if (l < 1) throw std::invalid_argument("cal_tx_flatness: empty spectrum");
    if (!measured_spectrum_dbm.isFinite().all())
        throw std::invalid_argument("cal_tx_flatness: non-finite spectrum sample");
    if (bound_db <= 0.0) throw std::invalid_argument("cal_tx_flatness: bound must be positive");

    TxFlatnessResult out;
    out.port_target_dbm = target_eirp_dbm - antenna_gain_dbi;
    out.per_bin_target_dbm = out.port_target_dbm - 10.0 * std::log10(static_cast<double>(l));

    Eigen::ArrayXd correction_db = out.per_bin_target_dbm - measured_spectrum_dbm;
    const double mean_correction = correction_db.mean();

    // The drive level absorbs the mean; each bin's attenuator only has
    // bound_db of swing around it.
    std::vector<int> out_of_range;
    for (int j = 0; j < l; ++j) {
        if (std::abs(correction_db[j] - mean_correction) > bound_db) out_of_range.push_back(j);
    }
    if (!out_of_range.empty()) {
        std::ostringstream msg;
        msg << "cal_tx_flatness: " << out_of_range.size() << " bins need more than "
            << bound_db << " dB of relative correction (first: bin " << out_of_range.front()
            << ", " << correction_db[out_of_range.front()] - mean_correction << " dB)";
        throw std::runtime_error(msg.str());
    }

    out.coefficients.resize(l);
    for (int j = 0; j < l; ++j) {
        out.coefficients[j] = std::complex<double>(std::pow(10.0, correction_db[j] / 20.0), 0.0);
    }

    Eigen::ArrayXd corrected_dbm = measured_spectrum_dbm + correction_db;
    out.pre_ripple_db = peak_to_peak(measured_spectrum_dbm);
    out.post_ripple_db = peak_to_peak(corrected_dbm);
    out.mean_error_db = corrected_dbm.mean() - out.per_bin_target_dbm;
    return out;
}

RxFlatnessResult cal_rx_flatness(const Eigen::VectorXcd& rx_spectrum,
                                 const Eigen::VectorXcd& cable_response) {
    const int l = static_cast<int>(rx_spectrum.size());
    if (l < 1) throw std::invalid_argument("cal_rx_flatness: empty spectrum");
    if (cable_response.size() != l)
        throw std::invalid_argument("cal_rx_flatness: cable response length mismatch");

    const double cable_scale = cable_response.cwiseAbs().mean();
    if (!(cable_scale > 0.0))
        throw std::invalid_argument("cal_rx_flatness: cable response is zero");

    Eigen::VectorXcd through(l);
    for (int j = 0; j < l; ++j) {
        if (std::abs(cable_response[j]) < 1e-12 * cable_scale) {
            std::ostringstream msg;
            msg << "cal_rx_flatness: cable response vanishes at bin " << j;
            throw std::invalid_argument(msg.str());
        }
        through[j] = rx_spectrum[j] / cable_response[j];
        if (!(std::abs(through[j]) > 0.0) || !std::isfinite(std::abs(through[j]))) {
            std::ostringstream msg;
            msg << "cal_rx_flatness: no usable through signal at bin " << j;
            throw std::runtime_error(msg.str());
        }
    }

    // Zero-dB-mean inverse: flatness correction only, absolute level is the
    // incident-power step's job.
    double mean_log = 0.0;
    for (int j = 0; j < l; ++j) mean_log += std::log(std::abs(through[j]));
    mean_log /= l;
    const double geometric_mean = std::exp(mean_log);

    RxFlatnessResult out;
    out.coefficients.resize(l);
    Eigen::ArrayXd pre_db(l), post_db(l);
    for (int j = 0; j < l; ++j) {
        out.coefficients[j] = geometric_mean / through[j];
        pre_db[j] = 20.0 * std::log10(std::abs(through[j]));
        post_db[j] = 20.0 * std::log10(std::abs(out.coefficients[j] * through[j]));
    }
    out.pre_ripple_db = peak_to_peak(pre_db);
    out.post_ripple_db = peak_to_peak(post_db);
    return out;
}

IncidentPowerResult cal_incident_power(const Pdp& pdp, double distance_m,
                                       double frequency_ghz, double tx_eirp_dbm) {
    if (pdp.power_mw.size() < 2)
        throw std::invalid_argument("cal_incident_power: profile too short");
    if (!(distance_m > 0.0) || !(frequency_ghz > 0.0))
        throw std::invalid_argument("cal_incident_power: distance and frequency must be positive");

    int peak_bin = 0;
    const double peak_mw = pdp.power_mw.maxCoeff(&peak_bin);
    if (!(peak_mw > 0.0))
        throw std::runtime_error("cal_incident_power: no signal in the profile");
    const double median_mw = median_of(pdp.power_mw);
    if (peak_mw < 100.0 * median_mw)
        throw std::runtime_error(
            "cal_incident_power: no dominant tap (peak under 20 dB above the profile median); "
            "the reference path is not clean enough to calibrate against");

    IncidentPowerResult out;
    out.peak_bin = peak_bin;
    out.measured_dbm = 10.0 * std::log10(peak_mw);
    out.expected_dbm = tx_eirp_dbm - fspl_db(distance_m, frequency_ghz);
    out.offset_db = out.expected_dbm - out.measured_dbm;
    return out;
}

OmniVerifyResult verify_omni_vs_beams(const OmniPdp& synthesized,
                                      const Pdp& omni_reference, double bound_db) {
    auto synth = total_power_dbm(synthesized);
    auto omni = total_power_dbm(omni_reference);
    if (!synth || !omni)
        throw std::runtime_error("verify_omni_vs_beams: a profile has no retained power");

    OmniVerifyResult out;
    out.bound_db = bound_db;
    out.synthesized_total_dbm = *synth;
    out.omni_total_dbm = *omni;
    out.delta_db = out.synthesized_total_dbm - out.omni_total_dbm;
    out.pass = std::abs(out.delta_db) <= bound_db;
    return out;
}

namespace {

// Bench measurement of the transmit port: per-bin power in dBm through the
// transmit ripple, referenced to the port (radiated minus antenna gain).
Eigen::ArrayXd bench_tx_spectrum_dbm(const TxFrame& frame, const FrontEndModel& fe,
                                     const SounderConfig& cfg, double antenna_gain_dbi) {
    const int l = cfg.zc_length;
    const double base = cfg.tx_eirp_dbm.value - antenna_gain_dbi
                        - 10.0 * std::log10(static_cast<double>(l));
    Eigen::ArrayXd dbm(l);
    for (int j = 0; j < l; ++j) {
        const double amp = std::abs(frame.freq_reference[j] * fe.tx_ripple[j]);
        dbm[j] = base + 20.0 * std::log10(amp);
    }
    return dbm;
}

// Cable used for the through-measurement: known 20 dB pad plus its electrical
// length, both handed to the solver as ground truth.
Eigen::VectorXcd bench_cable_response(const SounderConfig& cfg) {
    const int l = cfg.zc_length;
    const double loss = std::pow(10.0, -20.0 / 20.0);
    const double delay_s = 50e-9;
    Eigen::VectorXcd cable(l);
    for (int j = 0; j < l; ++j) {
        const double f = subcarrier_offset(j, l) * cfg.subcarrier_spacing_hz;
        cable[j] = std::polar(loss, -2.0 * kPi * f * delay_s);
    }
    return cable;
}

// VNA-grade through-measurement: the receiver's equalized spectrum when the
// flattened frame runs through the cable and one receive chain, noiseless.
Eigen::VectorXcd bench_through_spectrum(const TxFrame& flattened, const FrontEndModel& fe,
                                        const Eigen::VectorXcd& cable) {
    const int l = static_cast<int>(flattened.freq_reference.size());
    const double gain = std::pow(10.0, fe.rx_gain_offset_db / 20.0);
    Eigen::VectorXcd spectrum(l);
    for (int j = 0; j < l; ++j) {
        // the receiver divides by its own digital reference, so the frame
        // symbol drops out and only the hardware chain remains
        spectrum[j] = fe.tx_ripple[j] * cable[j] * fe.rx_ripple[j] * gain;
    }
    return spectrum;
}

// Pick the calibration beam of a face: the one pointing closest to the face
// boresight (smallest squared off-boresight angle, lowest id on ties).
const BeamDefinition& cal_beam_for_face(const std::vector<BeamDefinition>& beams, int face) {
    const BeamDefinition* best = nullptr;
    double best_metric = 0.0;
    const double face_az = 90.0 * face;
    for (const auto& b : beams) {
        if (b.face != face) continue;
        const double az_rel = wrap_deg(b.az_deg - face_az);
        const double metric = az_rel * az_rel + b.el_deg * b.el_deg;
        if (!best || metric < best_metric - 1e-12) {
            best = &b;
            best_metric = metric;
        }
    }
    if (!best) throw std::logic_error("cal_beam_for_face: face has no beams");
    return *best;
}

Eigen::Vector3d unit_from_angles(double az_deg, double el_deg) {
    const double az = az_deg * kPi / 180.0;
    const double el = el_deg * kPi / 180.0;
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

// Free-space capture at the reference distance through one chain, optionally
// via a beam pointed straight at the transmitter.
IncidentPowerResult measure_incident(const SounderConfig& cfg, const TxFrame& flattened,
                                     const FrontEndModel& fe, const Eigen::VectorXcd& rx_coeff,
                                     const BeamDefinition* beam, const CalOptions& opts,
                                     Rng& rng) {
    Scene scene;
    scene.rx.position = Eigen::Vector3d::Zero();
    if (beam) {
        scene.tx.position = opts.reference_distance_m * unit_from_angles(beam->az_deg, beam->el_deg);
    } else {
        scene.tx.position = {opts.reference_distance_m, 0.0, 0.0};
    }
    scene.shadowing_sigma_db = 0.0;
    scene.seed = opts.seed;

    ChannelRealization ch = realize_channel(scene, 0.0, cfg, rng);
    if (beam) {
        for (auto& tap : ch.taps) {
            const double g = effective_rx_gain_db(*beam, tap.aoa_az_deg, tap.aoa_el_deg);
            tap.gain *= std::pow(10.0, g / 20.0);
        }
    }

    FrontEndModel chain = fe;
    chain.noise_enabled = fe.noise_enabled && opts.noise;
    ComplexBaseband capture = apply_channel(flattened, ch, chain, cfg, rng);
    Cir cir = correlate(capture, flattened, cfg, &rx_coeff, 0.0);
    Pdp pdp = pdp_from_cir(cir);
    return cal_incident_power(pdp, opts.reference_distance_m,
                              cfg.band.center_frequency_ghz, cfg.tx_eirp_dbm.value);
}

}  // namespace

Calibration run_calibration(const SounderConfig& cfg, const FrontEndModel& fe_omni,
                            const FrontEndModel* fe_array, const CalOptions& opts) {
    require_valid(cfg);
    if (!(opts.reference_distance_m > 0.0))
        throw std::invalid_argument("run_calibration: reference distance must be positive");
    const int l = cfg.zc_length;
    if (fe_omni.tx_ripple.size() != l || fe_omni.rx_ripple.size() != l)
        throw std::invalid_argument("run_calibration: omni front end does not match the configuration");
    const bool with_array = !cfg.band.omni_only();
    if (with_array) {
        if (!fe_array)
            throw std::invalid_argument("run_calibration: array band needs an array front end");
        if (fe_array->tx_ripple.size() != l || fe_array->rx_ripple.size() != l)
            throw std::invalid_argument("run_calibration: array front end does not match the configuration");
        if ((fe_array->tx_ripple - fe_omni.tx_ripple).norm() > 1e-12 * std::sqrt(double(l)))
            throw std::invalid_argument(
                "run_calibration: the two links must share one transmit chain");
    }

    Calibration cal;
    cal.report.center_frequency_ghz = cfg.band.center_frequency_ghz;
    cal.report.reference_distance_m = opts.reference_distance_m;

    Rng rng(derive_seed(opts.seed, 0xca1, 0, 0));
    TxFrame frame = build_sounding_frame(cfg);

    // Step 1: flatten the transmit spectrum at the port.
    Eigen::ArrayXd port_dbm = bench_tx_spectrum_dbm(frame, fe_omni, cfg, opts.tx_antenna_gain_dbi);
    cal.report.tx = cal_tx_flatness(port_dbm, cfg.tx_eirp_dbm.value, opts.tx_antenna_gain_dbi);
    cal.coefficients.tx = cal.report.tx.coefficients;
    TxFrame flattened = apply_tx_coefficients(frame, cal.coefficients.tx);

    // Step 2: flatten each receive chain over the reference cable.
    Eigen::VectorXcd cable = bench_cable_response(cfg);
    cal.report.rx_omni =
        cal_rx_flatness(bench_through_spectrum(flattened, fe_omni, cable), cable);
    cal.coefficients.rx_omni = cal.report.rx_omni.coefficients;
    if (with_array) {
        cal.report.rx_array =
            cal_rx_flatness(bench_through_spectrum(flattened, *fe_array, cable), cable);
        cal.coefficients.rx_array = cal.report.rx_array->coefficients;
    }

    // Step 3: incident-power offset over the air, omni port first.
    cal.report.incident = measure_incident(cfg, flattened, fe_omni,
                                           cal.coefficients.rx_omni, nullptr, opts, rng);
    cal.coefficients.omni_offset_db = cal.report.incident.offset_db;

    // Then once per array face through its boresight beam. The stored face
    // offset removes the cal beam's boresight gain so processing can restate
    // it for whichever beam a capture used.
    if (with_array) {
        std::vector<BeamDefinition> beams = build_beam_table(cfg.band);
        cal.coefficients.face_offset_db.assign(4, 0.0);
        for (int face = 0; face < 4; ++face) {
            const BeamDefinition& beam = cal_beam_for_face(beams, face);
            IncidentPowerResult r = measure_incident(cfg, flattened, *fe_array,
                                                     cal.coefficients.rx_array, &beam, opts, rng);
            const double boresight = beam.peak_gain_dbi - beam.scan_loss_db;
            cal.coefficients.face_offset_db[face] = r.offset_db + boresight;
            cal.report.faces.push_back(r);
        }
    }
    return cal;
}

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXcd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back({v[i].real(), v[i].imag()});
    }
    return arr;
}

Eigen::VectorXcd vector_from_json(const json& arr) {
    Eigen::VectorXcd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = {arr[i].at(0).get<double>(), arr[i].at(1).get<double>()};
    }
    return v;
}

json tx_result_to_json(const TxFlatnessResult& r) {
    return {{"coefficients", vector_to_json(r.coefficients)},
            {"port_target_dbm", r.port_target_dbm},
            {"per_bin_target_dbm", r.per_bin_target_dbm},
            {"pre_ripple_db", r.pre_ripple_db},
            {"post_ripple_db", r.post_ripple_db},
            {"mean_error_db", r.mean_error_db}};
}

TxFlatnessResult tx_result_from_json(const json& j) {
    TxFlatnessResult r;
    r.coefficients = vector_from_json(j.at("coefficients"));
    r.port_target_dbm = j.at("port_target_dbm").get<double>();
    r.per_bin_target_dbm = j.at("per_bin_target_dbm").get<double>();
    r.pre_ripple_db = j.at("pre_ripple_db").get<double>();
    r.post_ripple_db = j.at("post_ripple_db").get<double>();
    r.mean_error_db = j.at("mean_error_db").get<double>();
    return r;
}

json rx_result_to_json(const RxFlatnessResult& r) {
    return {{"coefficients", vector_to_json(r.coefficients)},
            {"pre_ripple_db", r.pre_ripple_db},
            {"post_ripple_db", r.post_ripple_db}};
}

RxFlatnessResult rx_result_from_json(const json& j) {
    RxFlatnessResult r;
    r.coefficients = vector_from_json(j.at("coefficients"));
    r.pre_ripple_db = j.at("pre_ripple_db").get<double>();
    r.post_ripple_db = j.at("post_ripple_db").get<double>();
    return r;
}

json incident_to_json(const IncidentPowerResult& r) {
    return {{"offset_db", r.offset_db},
            {"expected_dbm", r.expected_dbm},
            {"measured_dbm", r.measured_dbm},
            {"peak_bin", r.peak_bin}};
}

IncidentPowerResult incident_from_json(const json& j) {
    IncidentPowerResult r;
    r.offset_db = j.at("offset_db").get<double>();
    r.expected_dbm = j.at("expected_dbm").get<double>();
    r.measured_dbm = j.at("measured_dbm").get<double>();
    r.peak_bin = j.at("peak_bin").get<int>();
    return r;
}

}  // namespace

std::string cal_to_json(const Calibration& cal) {
    json j;
    j["coefficients"] = {
        {"tx", vector_to_json(cal.coefficients.tx)},
        {"rx_omni", vector_to_json(cal.coefficients.rx_omni)},
        {"rx_array", vector_to_json(cal.coefficients.rx_array)},
        {"omni_offset_db", cal.coefficients.omni_offset_db},
        {"face_offset_db", cal.coefficients.face_offset_db},
    };
    json rep;
    rep["center_frequency_ghz"] = cal.report.center_frequency_ghz;
    rep["reference_distance_m"] = cal.report.reference_distance_m;
    rep["tx"] = tx_result_to_json(cal.report.tx);
    rep["rx_omni"] = rx_result_to_json(cal.report.rx_omni);
    if (cal.report.rx_array) rep["rx_array"] = rx_result_to_json(*cal.report.rx_array);
    rep["incident"] = incident_to_json(cal.report.incident);
    json faces = json::array();
    for (const auto& f : cal.report.faces) faces.push_back(incident_to_json(f));
    rep["faces"] = faces;
    if (cal.report.verify) {
        rep["verify"] = {{"omni_total_dbm", cal.report.verify->omni_total_dbm},
                         {"synthesized_total_dbm", cal.report.verify->synthesized_total_dbm},
                         {"delta_db", cal.report.verify->delta_db},
                         {"bound_db", cal.report.verify->bound_db},
                         {"pass", cal.report.verify->pass}};
    }
    j["report"] = rep;
    return j.dump(2);
}

Calibration cal_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    Calibration cal;
    const json& c = j.at("coefficients");
    cal.coefficients.tx = vector_from_json(c.at("tx"));
    cal.coefficients.rx_omni = vector_from_json(c.at("rx_omni"));
    cal.coefficients.rx_array = vector_from_json(c.at("rx_array"));
    cal.coefficients.omni_offset_db = c.at("omni_offset_db").get<double>();
    cal.coefficients.face_offset_db = c.at("face_offset_db").get<std::vector<double>>();

    const json& rep = j.at("report");
    cal.report.center_frequency_ghz = rep.at("center_frequency_ghz").get<double>();
    cal.report.reference_distance_m = rep.at("reference_distance_m").get<double>();
    cal.report.tx = tx_result_from_json(rep.at("tx"));
    cal.report.rx_omni = rx_result_from_json(rep.at("rx_omni"));
    if (rep.contains("rx_array")) cal.report.rx_array = rx_result_from_json(rep.at("rx_array"));
    cal.report.incident = incident_from_json(rep.at("incident"));
    for (const auto& f : rep.at("faces")) cal.report.faces.push_back(incident_from_json(f));
    if (rep.contains("verify")) {
        OmniVerifyResult v;
        v.omni_total_dbm = rep.at("verify").at("omni_total_dbm").get<double>();
        v.synthesized_total_dbm = rep.at("verify").at("synthesized_total_dbm").get<double>();
        v.delta_db = rep.at("verify").at("delta_db").get<double>();
        v.bound_db = rep.at("verify").at("bound_db").get<double>();
        v.pass = rep.at("verify").at("pass").get<bool>();
        cal.report.verify = v;
    }
    return cal;
}

}  // namespace csound
