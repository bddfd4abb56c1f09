// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csound/channel.hpp"
#include "csound/core.hpp"

namespace csound {

// Piecewise-linear trajectory. A single point is a static position; times
// must be strictly increasing and queries clamp to the end points.
struct Track {
    struct Point {
        double t_s = 0.0;
        Eigen::Vector3d position = Eigen::Vector3d::Zero();
    };
    std::vector<Point> points;

    Eigen::Vector3d position_at(double t_s) const;
};

// A terminal of the link (transmitter or receiver).
struct SceneNode {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double gain_dbi = 0.0;           // fixed antenna gain of the port
    std::optional<Track> track;      // overrides position when present

    Eigen::Vector3d position_at(double t_s) const {
        return track ? track->position_at(t_s) : position;
    }
};

enum class RcsPolicy { redraw, frozen };

// A mobile scatterer with a statistical scattering gain.
struct SceneTarget {
    TargetClass cls = TargetClass::passenger_car;
    SensingMode mode = SensingMode::bistatic;
    Track track;
    bool blocked = false;
    RcsPolicy rcs_policy = RcsPolicy::redraw;
    std::optional<RcsModel> rcs_override;  // replaces the catalog model

    RcsModel model() const { return rcs_override ? *rcs_override : rcs_model_for(cls, mode); }
};

// A fixed multipath component, specified directly in delay/power/angles.
// path_gain_db is incident power at an isotropic receive antenna relative
// to the radiated EIRP (i.e. minus the path loss).
struct EnvironmentTap {
    double delay_s = 0.0;
    double path_gain_db = 0.0;
    double aod_az_deg = 0.0;
    double aod_el_deg = 0.0;
    double aoa_az_deg = 0.0;
    double aoa_el_deg = 0.0;
};

// Full propagation scene. The seed drives every scene-owned random quantity
// (frozen RCS draws, the shadowing profile), so one scene file pins one
// environment realization.
struct Scene {
    SceneNode tx;
    SceneNode rx;
    bool los_blocked = false;
    std::vector<EnvironmentTap> environment;
    std::vector<SceneTarget> targets;
    double shadowing_sigma_db = 0.0;  // log-normal shadowing on the LOS path
    std::uint64_t seed = 1;
};

/// Realize the tap list at time t_s. LOS and target gains come from the
/// propagation formulas (EIRP-referenced, isotropic RX; carrier phase from
/// the absolute delay); environment taps pass through as specified. rng
/// drives per-snapshot draws (redrawn RCS); frozen draws and shadowing key
/// off the scene seed only.
ChannelRealization realize_channel(const Scene& scene, double t_s,
                                   const SounderConfig& cfg, Rng& rng);

/// Angles of arrival seen from `from` towards `to`: azimuth atan2(dy, dx),
/// elevation asin(dz / range), degrees.
void bearing_deg(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                 double& az_deg, double& el_deg);

Scene parse_scene(const std::string& json_text);
Scene load_scene(const std::string& path);
std::string scene_to_json(const Scene& scene);

/// Stable digest of the canonical scene serialization (FNV-1a 64, hex).
std::string scene_digest(const Scene& scene);

}  // namespace csound
