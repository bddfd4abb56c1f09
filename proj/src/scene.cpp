// SPDX-License-Identifier: Apache-2.0
#include "csound/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace csound {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegPerRad = 57.29577951308232;

std::complex<double> carrier_phase(double delay_s, double f_hz) {
    // reduce via the fractional cycle count to keep the argument small
    const double cycles = f_hz * delay_s;
    const double frac = cycles - std::floor(cycles);
    const double p = -2.0 * kPi * frac;
    return {std::cos(p), std::sin(p)};
}
}  // namespace

Eigen::Vector3d Track::position_at(double t_s) const {
    if (points.empty())
        throw std::invalid_argument("Track: no points");
    if (points.size() == 1 || t_s <= points.front().t_s)
        return points.front().position;
    if (t_s >= points.back().t_s) return points.back().position;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (t_s <= points[i].t_s) {
            const auto& a = points[i - 1];
            const auto& b = points[i];
            const double u = (t_s - a.t_s) / (b.t_s - a.t_s);
            return a.position + u * (b.position - a.position);
        }
    }
    return points.back().position;
}

void bearing_deg(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                 double& az_deg, double& el_deg) {
    const Eigen::Vector3d d = to - from;
    const double r = d.norm();
    if (r == 0.0) {
        az_deg = 0.0;
        el_deg = 0.0;
        return;
    }
    az_deg = std::atan2(d.y(), d.x()) * kDegPerRad;
    el_deg = std::asin(std::clamp(d.z() / r, -1.0, 1.0)) * kDegPerRad;
}

ChannelRealization realize_channel(const Scene& scene, double t_s,
                                   const SounderConfig& cfg, Rng& rng) {
    const double f_ghz = cfg.band.center_frequency_ghz;
    const double f_hz = cfg.center_frequency_hz();
    ChannelRealization ch;
    ch.timestamp_s = t_s;

    const Eigen::Vector3d tx_pos = scene.tx.position_at(t_s);
    const Eigen::Vector3d rx_pos = scene.rx.position_at(t_s);

    if (!scene.los_blocked) {
        const double d = (rx_pos - tx_pos).norm();
        if (!(d > 0.0))
            throw std::invalid_argument(
                "realize_channel: coincident terminals need los_blocked");
        PathTap tap;
        tap.origin = TapOrigin::line_of_sight;
        tap.delay_s = d / kSpeedOfLight;
        double loss_db = fspl_db(d, f_ghz, 0.0, 0.0);
        if (scene.shadowing_sigma_db > 0.0) {
            // Shadowing is a property of the place, not of the run: key the
            // draw on the scene seed and the centimetre-quantized distance so
            // repeated campaigns over the same path see the same profile.
            const auto q = static_cast<std::uint64_t>(std::llround(d * 100.0));
            Rng shadow(derive_seed(scene.seed, 0x5ad0eull, q));
            loss_db += scene.shadowing_sigma_db * shadow.normal();
        }
        tap.gain = std::pow(10.0, -loss_db / 20.0) * carrier_phase(tap.delay_s, f_hz);
        bearing_deg(tx_pos, rx_pos, tap.aod_az_deg, tap.aod_el_deg);
        bearing_deg(rx_pos, tx_pos, tap.aoa_az_deg, tap.aoa_el_deg);
        ch.taps.push_back(tap);
    }

    for (const auto& env : scene.environment) {
        PathTap tap;
        tap.origin = TapOrigin::environment;
        tap.delay_s = env.delay_s;
        tap.gain = std::pow(10.0, env.path_gain_db / 20.0) *
                   carrier_phase(env.delay_s, f_hz);
        tap.aod_az_deg = env.aod_az_deg;
        tap.aod_el_deg = env.aod_el_deg;
        tap.aoa_az_deg = env.aoa_az_deg;
        tap.aoa_el_deg = env.aoa_el_deg;
        ch.taps.push_back(tap);
    }

    for (std::size_t i = 0; i < scene.targets.size(); ++i) {
        const auto& tgt = scene.targets[i];
        if (tgt.blocked) continue;
        SensingGeometry geom;
        geom.tx = tx_pos;
        geom.rx = rx_pos;
        geom.target = tgt.track.position_at(t_s);

        double gamma;
        if (tgt.rcs_policy == RcsPolicy::frozen) {
            Rng frozen(derive_seed(scene.seed, 0xfc5ull, i));
            gamma = rcs_sample_dbsm(tgt.model(), frozen);
        } else {
            gamma = rcs_sample_dbsm(tgt.model(), rng);
        }

        PathTap tap;
        tap.origin = TapOrigin::target;
        tap.target_index = static_cast<int>(i);
        tap.delay_s = bistatic_delay_s(geom.tx, geom.rx, geom.target);
        const double pl = target_path_loss_db(geom, gamma, f_ghz, 0.0, 0.0);
        tap.gain = std::pow(10.0, -pl / 20.0) * carrier_phase(tap.delay_s, f_hz);
        bearing_deg(geom.tx, geom.target, tap.aod_az_deg, tap.aod_el_deg);
        bearing_deg(geom.rx, geom.target, tap.aoa_az_deg, tap.aoa_el_deg);
        ch.taps.push_back(tap);
    }

    for (const auto& tap : ch.taps) {
        if (tap.delay_s < 0.0 || tap.delay_s > cfg.max_excess_delay_s) {
            std::ostringstream os;
            os << "realize_channel: tap delay " << tap.delay_s
               << " s outside [0, " << cfg.max_excess_delay_s << "]";
            throw std::invalid_argument(os.str());
        }
    }

    std::stable_sort(ch.taps.begin(), ch.taps.end(),
                     [](const PathTap& a, const PathTap& b) { return a.delay_s < b.delay_s; });
    return ch;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : keys)
            if (item.key() == k) { known = true; break; }
        if (!known)
            throw std::invalid_argument("scene: unknown key \"" + item.key() +
                                        "\" in " + where);
    }
}

Eigen::Vector3d parse_vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("scene: " + where + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Track parse_track(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument("scene: " + where + " must be a non-empty array");
    Track track;
    for (const auto& p : j) {
        reject_unknown(p, {"t_s", "position_m"}, where);
        Track::Point pt;
        pt.t_s = p.at("t_s").get<double>();
        pt.position = parse_vec3(p.at("position_m"), where + ".position_m");
        if (!track.points.empty() && pt.t_s <= track.points.back().t_s)
            throw std::invalid_argument("scene: " + where +
                                        " times must be strictly increasing");
        track.points.push_back(pt);
    }
    return track;
}

SceneNode parse_node(const json& j, const std::string& where) {
    reject_unknown(j, {"position_m", "gain_dbi", "track"}, where);
    SceneNode node;
    if (j.contains("position_m"))
        node.position = parse_vec3(j.at("position_m"), where + ".position_m");
    node.gain_dbi = j.value("gain_dbi", 0.0);
    if (j.contains("track")) {
        node.track = parse_track(j.at("track"), where + ".track");
        node.position = node.track->points.front().position;
    } else if (!j.contains("position_m")) {
        throw std::invalid_argument("scene: " + where + " needs position_m or track");
    }
    return node;
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json track_to_json(const Track& t) {
    json arr = json::array();
    for (const auto& p : t.points)
        arr.push_back({{"t_s", p.t_s}, {"position_m", vec3_to_json(p.position)}});
    return arr;
}

json node_to_json(const SceneNode& n) {
    json j;
    j["position_m"] = vec3_to_json(n.position);
    j["gain_dbi"] = n.gain_dbi;
    if (n.track) j["track"] = track_to_json(*n.track);
    return j;
}

}  // namespace

Scene parse_scene(const std::string& json_text) {
    const json j = json::parse(json_text);
    if (!j.is_object())
        throw std::invalid_argument("scene: top level must be a JSON object");
    reject_unknown(j,
                   {"tx", "rx", "los_blocked", "environment", "targets",
                    "shadowing_sigma_db", "seed"},
                   "scene");
    Scene scene;
    scene.tx = parse_node(j.at("tx"), "tx");
    scene.rx = parse_node(j.at("rx"), "rx");
    scene.los_blocked = j.value("los_blocked", false);
    scene.shadowing_sigma_db = j.value("shadowing_sigma_db", 0.0);
    scene.seed = j.value("seed", 1ull);

    if (j.contains("environment")) {
        for (const auto& e : j.at("environment")) {
            reject_unknown(e,
                           {"delay_s", "path_gain_db", "aod_az_deg", "aod_el_deg",
                            "aoa_az_deg", "aoa_el_deg"},
                           "environment[]");
            EnvironmentTap tap;
            tap.delay_s = e.at("delay_s").get<double>();
            tap.path_gain_db = e.at("path_gain_db").get<double>();
            tap.aod_az_deg = e.value("aod_az_deg", 0.0);
            tap.aod_el_deg = e.value("aod_el_deg", 0.0);
            tap.aoa_az_deg = e.value("aoa_az_deg", 0.0);
            tap.aoa_el_deg = e.value("aoa_el_deg", 0.0);
            if (tap.delay_s < 0.0)
                throw std::invalid_argument("scene: environment delay_s must be >= 0");
            scene.environment.push_back(tap);
        }
    }

    if (j.contains("targets")) {
        for (const auto& t : j.at("targets")) {
            reject_unknown(t,
                           {"class", "mode", "track", "blocked", "rcs_policy",
                            "rcs_mu_dbsm", "rcs_sigma_dbsm"},
                           "targets[]");
            SceneTarget tgt;
            tgt.cls = target_class_from_string(t.at("class").get<std::string>());
            tgt.mode = sensing_mode_from_string(t.at("mode").get<std::string>());
            tgt.track = parse_track(t.at("track"), "targets[].track");
            tgt.blocked = t.value("blocked", false);
            const std::string policy = t.value("rcs_policy", std::string("redraw"));
            if (policy == "redraw")
                tgt.rcs_policy = RcsPolicy::redraw;
            else if (policy == "frozen")
                tgt.rcs_policy = RcsPolicy::frozen;
            else
                throw std::invalid_argument("scene: rcs_policy must be redraw or frozen");
            if (t.contains("rcs_mu_dbsm") || t.contains("rcs_sigma_dbsm")) {
                RcsModel m = tgt.model();
                m.mu_dbsm = t.value("rcs_mu_dbsm", m.mu_dbsm);
                m.sigma_dbsm = t.value("rcs_sigma_dbsm", m.sigma_dbsm);
                if (m.sigma_dbsm < 0.0)
                    throw std::invalid_argument("scene: rcs_sigma_dbsm must be >= 0");
                tgt.rcs_override = m;
            }
            scene.targets.push_back(tgt);
        }
    }
    return scene;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scene: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_scene(os.str());
}

std::string scene_to_json(const Scene& scene) {
    json j;
    j["tx"] = node_to_json(scene.tx);
    j["rx"] = node_to_json(scene.rx);
    j["los_blocked"] = scene.los_blocked;
    j["shadowing_sigma_db"] = scene.shadowing_sigma_db;
    j["seed"] = scene.seed;
    j["environment"] = json::array();
    for (const auto& e : scene.environment)
        j["environment"].push_back({{"delay_s", e.delay_s},
                                    {"path_gain_db", e.path_gain_db},
                                    {"aod_az_deg", e.aod_az_deg},
                                    {"aod_el_deg", e.aod_el_deg},
                                    {"aoa_az_deg", e.aoa_az_deg},
                                    {"aoa_el_deg", e.aoa_el_deg}});
    j["targets"] = json::array();
    for (const auto& t : scene.targets) {
        json tj;
        tj["class"] = to_string(t.cls);
        tj["mode"] = to_string(t.mode);
        tj["track"] = track_to_json(t.track);
        tj["blocked"] = t.blocked;
        tj["rcs_policy"] = t.rcs_policy == RcsPolicy::frozen ? "frozen" : "redraw";
        if (t.rcs_override) {
            tj["rcs_mu_dbsm"] = t.rcs_override->mu_dbsm;
            tj["rcs_sigma_dbsm"] = t.rcs_override->sigma_dbsm;
        }
        j["targets"].push_back(tj);
    }
    return j.dump(2);
}

std::string scene_digest(const Scene& scene) { return fnv1a_hex(scene_to_json(scene)); }

}  // namespace csound
