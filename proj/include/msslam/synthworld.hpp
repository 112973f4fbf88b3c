#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "msslam/camera.hpp"
#include "msslam/descriptor.hpp"
#include "msslam/rng.hpp"
#include "msslam/se3.hpp"

namespace msslam {

// Emulated extractor family: dimensions per family plus two illumination
// response knobs. The sensitivity scale moves descriptor values per unit
// illumination shift; the dropout slope removes re-detections as the shift
// grows. Values are calibration knobs of the simulator, ranked to mirror how
// robust the real extractors are.
struct FeatureFamilyConfig {
  FeatureFamily family = FeatureFamily::kSurf;
  int dimension = 64;
  bool binary = false;
  double illum_sensitivity_scale = 1.0;
  double dropout_slope = 0.5;

  // Probability that an unstable landmark's detection state flips between
  // two illuminations a distance delta apart. Realized exactly by the
  // per-landmark detection thresholds.
  double detection_dropout(double illum_delta) const {
    return std::min(1.0, dropout_slope * std::abs(illum_delta));
  }
};

FeatureFamilyConfig family_preset(FeatureFamily family);

enum class LandmarkRegion : std::uint8_t { kWindowLit, kInterior };

struct LandmarkSpec {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  LandmarkRegion region = LandmarkRegion::kInterior;
  double band_lo = 0.0;  // world-level visibility band in illumination units
  double band_hi = 1.0;
  bool stable = false;          // immune to family-level dropout
  double response_gain = 1.0;   // per-landmark drift magnitude multiplier
  std::uint64_t desc_seed = 0;  // derives per-family appearance streams

  // Deterministic per-family appearance model.
  Eigen::VectorXf base_descriptor(const FeatureFamilyConfig& family) const;
  Eigen::VectorXf sensitivity(const FeatureFamilyConfig& family) const;
};

// Sunset ramp: full daylight at start_min, darkness at end_min. When the
// camera faces the windows in bright conditions, auto-exposure drops the
// effective illumination of interior landmarks by window_gain.
struct IlluminationSchedule {
  double start_min = 0.0;
  double end_min = 180.0;
  double window_gain = 0.15;
  double window_facing_cos = 0.5;
  double window_bright_level = 0.5;

  double global_level(double t_min) const {
    if (end_min <= start_min) return 0.0;
    const double x = (t_min - start_min) / (end_min - start_min);
    return std::min(1.0, std::max(0.0, 1.0 - x));
  }
};

struct WorldParams {
  int landmark_count = 450;
  double window_lit_fraction = 0.3;
  Eigen::Vector3d room_min = {0.0, 0.0, 0.2};
  Eigen::Vector3d room_max = {8.0, 5.0, 2.4};
  double stable_fraction = 0.45;
  double banded_fraction = 0.4;   // landmarks with a narrowed visibility band
  double min_band_width = 0.35;
  double max_band_width = 0.7;
  int wall_landmark_count = 70;   // descriptive cluster at the start wall
  double wall_stable_fraction = 0.9;
  double wall_response_gain = 0.15;
  double near_plane = 0.3;
  double far_plane = 12.0;
  double pixel_noise = 0.3;
  double depth_noise_rel = 0.002;
  double descriptor_noise = 0.08;    // total norm for real families
  double binary_noise_flip = 0.01;   // per-bit flip probability per frame
};

struct World {
  std::uint64_t seed = 0;
  WorldParams params;
  IlluminationSchedule schedule;
  std::vector<LandmarkSpec> landmarks;
};

World generate_world(std::uint64_t seed, const WorldParams& params);

// Renders the landmark observations of one camera pose at one time of day.
// landmark_ids, when given, receives the source landmark of each keypoint.
FeatureFrame render_frame(const World& world, const Pose& gt_pose, double time_min,
                          const CameraIntrinsics& k, const FeatureFamilyConfig& family, Rng& rng,
                          std::vector<int>* landmark_ids = nullptr);

struct Waypoint {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // floor plan coordinates
  double yaw = 0.0;                                    // used while dwelling / rotating
  bool rotate_in_place = false;
  double dwell_s = 0.0;
};

struct TrajectorySpec {
  std::vector<Waypoint> waypoints;
  double speed_mps = 0.45;
  double turn_rate_rps = 0.7;
  double camera_height = 1.3;
  double waypoint_jitter_pos = 0.03;  // per-session placement jitter
  double waypoint_jitter_yaw = 0.03;
};

// Patrol loop through the room, starting and ending in front of the
// descriptive wall, with rotate-in-place waypoints along the way.
TrajectorySpec default_patrol(const WorldParams& params);

// Camera poses at a fixed rate (1 Hz) along the trajectory.
std::vector<Pose> sample_trajectory(const TrajectorySpec& traj, Rng& rng);

struct OdometryNoise {
  double sigma_rot = 0.0015;   // radians per step and axis
  double sigma_trans = 0.004;  // meters per step and axis
};

struct SessionRecord {
  double timestamp = 0.0;
  Pose odom_pose;
  Pose gt_pose;
  FeatureFrame frame;
};

struct SessionData {
  std::string name;
  double start_time_min = 0.0;
  FeatureFamily family = FeatureFamily::kSurf;
  std::uint64_t seed = 0;
  CameraIntrinsics camera;
  std::vector<SessionRecord> records;
};

SessionData simulate_session(const World& world, const TrajectorySpec& traj, double start_time_min,
                             const FeatureFamilyConfig& family, const OdometryNoise& noise,
                             std::uint64_t seed, const CameraIntrinsics& k);

CameraIntrinsics default_sim_camera();

// The experiment timetable: six mapping sessions and six localization
// sessions spread across a 180-minute sunset span.
std::vector<double> mapping_session_times();
std::vector<double> localization_session_times();

}  // namespace msslam
