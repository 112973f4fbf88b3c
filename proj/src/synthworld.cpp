#include "msslam/synthworld.hpp"

#include <algorithm>
#include <cmath>

#include "msslam/errors.hpp"

namespace msslam {

namespace {

constexpr std::uint64_t kBaseStreamTag = 0xb5;
constexpr std::uint64_t kDriftStreamTag = 0xd7;

std::uint64_t family_stream(std::uint64_t desc_seed, FeatureFamily family, std::uint64_t tag) {
  return hash_combine(hash_combine(desc_seed, static_cast<std::uint64_t>(family)), tag);
}

Eigen::VectorXf unit_normal_vector(Rng rng, int dim) {
  Eigen::VectorXf v(dim);
  for (int i = 0; i < dim; ++i) v(i) = static_cast<float>(rng.normal());
  const float n = v.norm();
  return n > 0.0f ? Eigen::VectorXf(v / n) : v;
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

Pose camera_pose(const Eigen::Vector2d& position, double yaw, double height) {
  // camera looks along +z, x right, y down; world is z-up
  const Eigen::Vector3d forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Eigen::Vector3d down(0.0, 0.0, -1.0);
  Pose p;
  p.rotation.col(0) = right;
  p.rotation.col(1) = down;
  p.rotation.col(2) = forward;
  p.translation = Eigen::Vector3d(position.x(), position.y(), height);
  return p;
}

}  // namespace

FeatureFamilyConfig family_preset(FeatureFamily family) {
  FeatureFamilyConfig cfg;
  cfg.family = family;
  const FamilyTraits traits = family_traits(family);
  cfg.dimension = traits.dimension;
  cfg.binary = traits.binary;
  switch (family) {
    case FeatureFamily::kSurf:       cfg.illum_sensitivity_scale = 1.00; cfg.dropout_slope = 0.55; break;
    case FeatureFamily::kSift:       cfg.illum_sensitivity_scale = 1.00; cfg.dropout_slope = 0.55; break;
    case FeatureFamily::kBrief:      cfg.illum_sensitivity_scale = 0.55; cfg.dropout_slope = 0.95; break;
    case FeatureFamily::kBrisk:      cfg.illum_sensitivity_scale = 0.50; cfg.dropout_slope = 0.90; break;
    case FeatureFamily::kKaze:       cfg.illum_sensitivity_scale = 0.85; cfg.dropout_slope = 0.45; break;
    case FeatureFamily::kFreak:      cfg.illum_sensitivity_scale = 0.60; cfg.dropout_slope = 1.00; break;
    case FeatureFamily::kDaisy:      cfg.illum_sensitivity_scale = 0.85; cfg.dropout_slope = 0.45; break;
    case FeatureFamily::kSuperPoint: cfg.illum_sensitivity_scale = 0.45; cfg.dropout_slope = 0.15; break;
  }
  return cfg;
}

Eigen::VectorXf LandmarkSpec::base_descriptor(const FeatureFamilyConfig& family) const {
  const int dim = family.dimension;
  Rng rng(family_stream(desc_seed, family.family, kBaseStreamTag));
  if (family.binary) {
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    return v;
  }
  return unit_normal_vector(rng, dim);
}

Eigen::VectorXf LandmarkSpec::sensitivity(const FeatureFamilyConfig& family) const {
  const int dim = family.dimension;
  Rng rng(family_stream(desc_seed, family.family, kDriftStreamTag));
  if (family.binary) {
    // per-bit flip thresholds; a bit toggles once effective illumination
    // scaled by the family rate passes its threshold
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v(i) = static_cast<float>(rng.uniform());
    return v;
  }
  return Eigen::VectorXf(unit_normal_vector(rng, dim) * static_cast<float>(response_gain));
}

World generate_world(std::uint64_t seed, const WorldParams& params) {
  if (params.landmark_count <= 0) throw InvalidParams("generate_world: landmark_count must be positive");
  if (params.window_lit_fraction < 0.0 || params.window_lit_fraction > 1.0) {
    throw InvalidParams("generate_world: window_lit_fraction out of range");
  }
  if ((params.room_max - params.room_min).minCoeff() <= 0.0) {
    throw InvalidParams("generate_world: empty room extents");
  }

  World world;
  world.seed = seed;
  world.params = params;
  Rng rng(hash_combine(seed, 0x776f726cULL));

  const Eigen::Vector3d extent = params.room_max - params.room_min;
  const int window_lit =
      static_cast<int>(std::lround(params.landmark_count * params.window_lit_fraction));

  auto sample_band = [&](LandmarkSpec& lm) {
    if (rng.uniform() < params.banded_fraction) {
      const double width = rng.uniform(params.min_band_width, params.max_band_width);
      const double center = rng.uniform();
      double lo = center - 0.5 * width;
      if (lo < 0.0) lo = 0.0;
      if (lo + width > 1.0) lo = 1.0 - width;
      lm.band_lo = lo;
      lm.band_hi = lo + width;
    } else {
      lm.band_lo = 0.0;
      lm.band_hi = 1.0;
    }
  };

  for (int i = 0; i < params.landmark_count; ++i) {
    LandmarkSpec lm;
    lm.id = i;
    lm.region = i < window_lit ? LandmarkRegion::kWindowLit : LandmarkRegion::kInterior;
    if (lm.region == LandmarkRegion::kWindowLit) {
      // strip along the window wall (y = room_max.y)
      lm.position.x() = params.room_min.x() + rng.uniform() * extent.x();
      lm.position.y() = params.room_max.y() - rng.uniform() * 0.25 * extent.y();
      lm.position.z() = params.room_min.z() + rng.uniform() * extent.z();
    } else {
      lm.position = params.room_min + Eigen::Vector3d(rng.uniform() * extent.x(),
                                                      rng.uniform() * 0.75 * extent.y(),
                                                      rng.uniform() * extent.z());
    }
    lm.stable = rng.uniform() < params.stable_fraction;
    sample_band(lm);
    lm.response_gain = rng.uniform(0.4, 1.6);
    lm.desc_seed = rng.next_u64();
    world.landmarks.push_back(lm);
  }

  // descriptive picture-wall cluster at x = room_min.x, centered on the
  // start pose's view
  const double wall_x = params.room_min.x() + 0.05;
  const double wall_cy = params.room_min.y() + 0.5 * extent.y();
  for (int i = 0; i < params.wall_landmark_count; ++i) {
    LandmarkSpec lm;
    lm.id = params.landmark_count + i;
    lm.region = LandmarkRegion::kInterior;
    lm.position = Eigen::Vector3d(wall_x + rng.uniform() * 0.1, wall_cy + rng.uniform(-1.0, 1.0),
                                  0.8 + rng.uniform() * 1.2);
    lm.stable = rng.uniform() < params.wall_stable_fraction;
    lm.band_lo = 0.0;
    lm.band_hi = 1.0;
    lm.response_gain = params.wall_response_gain * rng.uniform(0.5, 1.5);
    lm.desc_seed = rng.next_u64();
    world.landmarks.push_back(lm);
  }
  return world;
}

FeatureFrame render_frame(const World& world, const Pose& gt_pose, double time_min,
                          const CameraIntrinsics& k, const FeatureFamilyConfig& family, Rng& rng,
                          std::vector<int>* landmark_ids) {
  FeatureFrame frame;
  frame.family = family.family;
  if (landmark_ids) landmark_ids->clear();

  const double level = world.schedule.global_level(time_min);
  const Eigen::Vector3d forward = gt_pose.rotation.col(2);
  const bool facing_window = forward.y() > world.schedule.window_facing_cos;
  const bool auto_exposed = facing_window && level > world.schedule.window_bright_level;

  std::vector<Keypoint> keypoints;
  std::vector<Eigen::VectorXf> descriptors;

  const Eigen::Matrix3d rt = gt_pose.rotation.transpose();
  for (const LandmarkSpec& lm : world.landmarks) {
    const Eigen::Vector3d p_cam = rt * (lm.position - gt_pose.translation);
    if (p_cam.z() < world.params.near_plane || p_cam.z() > world.params.far_plane) continue;
    const Eigen::Vector2d pixel = project(p_cam, k);
    if (!in_image(pixel, k, 1.0)) continue;

    double e_eff = level;
    if (auto_exposed && lm.region == LandmarkRegion::kInterior) {
      e_eff = level * world.schedule.window_gain;
    }
    if (e_eff < lm.band_lo || e_eff > lm.band_hi) continue;
    if (!lm.stable && family.dropout_slope > 0.0) {
      // detection threshold crossing: the state flips between two
      // illuminations with probability slope * delta
      const std::uint64_t h = family_stream(lm.desc_seed, family.family, 0xa1);
      const double threshold = static_cast<double>(h >> 11) * 0x1.0p-53;
      const double x = (h & 1) ? e_eff : 1.0 - e_eff;
      if (threshold < family.dropout_slope * x) continue;
    }
    if (rng.uniform() < 0.02) continue;  // detector flake

    Keypoint kp;
    kp.pixel = pixel + Eigen::Vector2d(rng.normal(0.0, world.params.pixel_noise),
                                       rng.normal(0.0, world.params.pixel_noise));
    if (!in_image(kp.pixel, k, 0.0)) continue;
    kp.depth = std::max(0.05, p_cam.z() * (1.0 + rng.normal(0.0, world.params.depth_noise_rel)));

    Eigen::VectorXf desc = lm.base_descriptor(family);
    const Eigen::VectorXf drift = lm.sensitivity(family);
    if (family.binary) {
      const float flip_level =
          static_cast<float>(std::min(1.0, family.illum_sensitivity_scale * lm.response_gain * e_eff));
      for (int d = 0; d < desc.size(); ++d) {
        bool bit = desc(d) > 0.5f;
        if (drift(d) < flip_level) bit = !bit;
        if (rng.uniform() < world.params.binary_noise_flip) bit = !bit;
        desc(d) = bit ? 1.0f : 0.0f;
      }
    } else {
      desc += drift * static_cast<float>(family.illum_sensitivity_scale * e_eff);
      const float sigma =
          static_cast<float>(world.params.descriptor_noise / std::sqrt(static_cast<double>(desc.size())));
      for (int d = 0; d < desc.size(); ++d) desc(d) += sigma * static_cast<float>(rng.normal());
    }
    keypoints.push_back(kp);
    descriptors.push_back(std::move(desc));
    if (landmark_ids) landmark_ids->push_back(lm.id);
  }

  frame.keypoints = std::move(keypoints);
  frame.descriptors.resize(family.dimension, static_cast<int>(descriptors.size()));
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    frame.descriptors.col(static_cast<int>(i)) = descriptors[i];
  }
  frame.word_ids.assign(static_cast<std::size_t>(frame.count()), kNoWord);
  return frame;
}

TrajectorySpec default_patrol(const WorldParams& params) {
  const double x0 = params.room_min.x();
  const double y0 = params.room_min.y();
  const double w = params.room_max.x() - x0;
  const double h = params.room_max.y() - y0;
  TrajectorySpec traj;
  // start in front of the picture wall, looking at it
  traj.waypoints.push_back({{x0 + 0.16 * w, y0 + 0.5 * h}, M_PI, false, 4.0});
  traj.waypoints.push_back({{x0 + 0.44 * w, y0 + 0.24 * h}, 0.0, true, 0.0});
  traj.waypoints.push_back({{x0 + 0.81 * w, y0 + 0.30 * h}, 0.0, false, 0.0});
  traj.waypoints.push_back({{x0 + 0.85 * w, y0 + 0.72 * h}, 0.0, true, 0.0});
  traj.waypoints.push_back({{x0 + 0.50 * w, y0 + 0.80 * h}, 0.0, false, 0.0});
  traj.waypoints.push_back({{x0 + 0.25 * w, y0 + 0.72 * h}, 0.0, false, 0.0});
  traj.waypoints.push_back({{x0 + 0.16 * w, y0 + 0.5 * h}, M_PI, false, 4.0});
  return traj;
}

std::vector<Pose> sample_trajectory(const TrajectorySpec& traj, Rng& rng) {
  struct Key {
    double t;
    Eigen::Vector2d pos;
    double yaw;
  };
  std::vector<Key> keys;

  std::vector<Waypoint> wps = traj.waypoints;
  for (Waypoint& wp : wps) {
    wp.position.x() += rng.normal(0.0, traj.waypoint_jitter_pos);
    wp.position.y() += rng.normal(0.0, traj.waypoint_jitter_pos);
    wp.yaw += rng.normal(0.0, traj.waypoint_jitter_yaw);
  }
  if (wps.empty()) return {};

  double t = 0.0;
  double yaw = wps.front().yaw;
  keys.push_back({t, wps.front().position, yaw});

  auto add_waypoint_actions = [&](const Waypoint& wp) {
    if (wp.rotate_in_place) {
      // full panorama in quarter turns
      for (int q = 1; q <= 4; ++q) {
        t += (M_PI_2) / traj.turn_rate_rps;
        keys.push_back({t, wp.position, yaw + q * M_PI_2});
      }
      yaw = wrap_angle(yaw + 2.0 * M_PI);
    }
    if (wp.dwell_s > 0.0) {
      yaw = wp.yaw;
      keys.push_back({t + 0.2, wp.position, yaw});
      t += wp.dwell_s;
      keys.push_back({t, wp.position, yaw});
    }
  };

  add_waypoint_actions(wps.front());
  for (std::size_t i = 1; i < wps.size(); ++i) {
    const Eigen::Vector2d delta = wps[i].position - wps[i - 1].position;
    const double dist = delta.norm();
    if (dist > 1e-9) {
      const double heading = std::atan2(delta.y(), delta.x());
      // turn toward the travel heading, then walk
      const double turn = std::abs(wrap_angle(heading - yaw));
      t += turn / traj.turn_rate_rps;
      keys.push_back({t, wps[i - 1].position, heading});
      yaw = heading;
      t += dist / traj.speed_mps;
      keys.push_back({t, wps[i].position, heading});
    }
    add_waypoint_actions(wps[i]);
  }

  // sample at 1 Hz with wrap-aware yaw interpolation
  std::vector<Pose> poses;
  const double t_end = keys.back().t;
  std::size_t seg = 0;
  for (double tk = 0.0; tk <= t_end + 1e-9; tk += 1.0) {
    while (seg + 1 < keys.size() && keys[seg + 1].t < tk) ++seg;
    const Key& a = keys[seg];
    const Key& b = keys[std::min(seg + 1, keys.size() - 1)];
    const double span = std::max(1e-9, b.t - a.t);
    const double u = std::min(1.0, std::max(0.0, (tk - a.t) / span));
    const Eigen::Vector2d pos = a.pos + u * (b.pos - a.pos);
    const double dyaw = wrap_angle(b.yaw - a.yaw);
    poses.push_back(camera_pose(pos, a.yaw + u * dyaw, traj.camera_height));
  }
  return poses;
}

SessionData simulate_session(const World& world, const TrajectorySpec& traj, double start_time_min,
                             const FeatureFamilyConfig& family, const OdometryNoise& noise,
                             std::uint64_t seed, const CameraIntrinsics& k) {
  SessionData session;
  session.start_time_min = start_time_min;
  session.family = family.family;
  session.seed = seed;
  session.camera = k;

  Rng traj_rng(hash_combine(seed, 0x74726aULL));
  const std::vector<Pose> gt = sample_trajectory(traj, traj_rng);
  Rng noise_rng(hash_combine(seed, 0x6f646fULL));
  Rng render_rng(hash_combine(hash_combine(seed, world.seed), 0x72656eULL));

  Pose odom;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    SessionRecord rec;
    rec.timestamp = static_cast<double>(i);
    rec.gt_pose = gt[i];
    if (i == 0) {
      odom = gt[0];
    } else {
      Pose step = compose(invert(gt[i - 1]), gt[i]);
      Vec6<double> eta;
      for (int d = 0; d < 3; ++d) eta(d) = noise_rng.normal(0.0, noise.sigma_rot);
      for (int d = 3; d < 6; ++d) eta(d) = noise_rng.normal(0.0, noise.sigma_trans);
      step = compose(step, se3_exp(eta));
      odom = compose(odom, step);
    }
    rec.odom_pose = odom;
    Rng frame_rng = render_rng.fork(static_cast<std::uint64_t>(i));
    rec.frame = render_frame(world, gt[i], start_time_min + static_cast<double>(i) / 60.0, k,
                             family, frame_rng);
    rec.frame.frame_id = static_cast<std::int64_t>(i);
    rec.frame.timestamp = rec.timestamp;
    session.records.push_back(std::move(rec));
  }
  return session;
}

CameraIntrinsics default_sim_camera() {
  CameraIntrinsics k;
  k.fx = 330.0;
  k.fy = 330.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

std::vector<double> mapping_session_times() { return {1.0, 42.0, 69.0, 102.0, 131.0, 170.0}; }

std::vector<double> localization_session_times() { return {6.0, 46.0, 73.0, 105.0, 134.0, 177.0}; }

}  // namespace msslam
