#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "msslam/camera.hpp"
#include "msslam/se3.hpp"

namespace msslam {

// 3D point in the reference frame observed at a pixel of the query camera.
struct Correspondence {
  Eigen::Vector3d point3 = Eigen::Vector3d::Zero();
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct PnpConfig {
  int min_correspondences = 6;
  int min_inliers = 20;
  double reprojection_threshold_px = 2.0;
  int max_ransac_iterations = 100;
  double ransac_confidence = 0.999;
  int minimal_solver_iterations = 30;
  int refine_iterations = 50;
  double degeneracy_condition_limit = 1e8;
  std::uint64_t seed = 0;
};

enum class PnpStatus {
  kOk,
  kTooFewCorrespondences,
  kNoConsensus,
};

struct PnpResult {
  PnpStatus status = PnpStatus::kNoConsensus;
  RigidTransform<double> pose;  // maps reference-frame points into the query camera
  std::vector<bool> inlier_mask;
  int inlier_count = 0;
  double rmse_px = 0.0;

  bool ok() const { return status == PnpStatus::kOk; }
};

// RANSAC over 6-point minimal samples solved by damped Gauss-Newton, followed
// by Levenberg-Marquardt refinement on the consensus set. Deterministic for a
// fixed cfg.seed. An optional initial guess seeds the minimal solver.
PnpResult solve_pnp_ransac(const std::vector<Correspondence>& correspondences,
                           const CameraIntrinsics& k, const PnpConfig& cfg,
                           const std::optional<RigidTransform<double>>& initial_guess = {});

// Reprojection cost 0.5 * sum ||project(pose * p_i) - z_i||^2 and its gradient
// with respect to a left-multiplicative se3 tangent at the given pose.
double reprojection_cost(const std::vector<Correspondence>& correspondences,
                         const CameraIntrinsics& k, const RigidTransform<double>& pose);
Vec6<double> reprojection_gradient(const std::vector<Correspondence>& correspondences,
                                   const CameraIntrinsics& k,
                                   const RigidTransform<double>& pose);

namespace detail {

struct LmOptions {
  int max_iterations = 50;
  double lambda_init = 1e-3;
  double lambda_scale = 10.0;
  double relative_tolerance = 1e-9;
  int max_consecutive_failures = 5;
};

enum class LmStatus { kConverged, kMaxIterations, kDiverged, kInfeasible };

struct LmResult {
  LmStatus status = LmStatus::kMaxIterations;
  RigidTransform<double> pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
};

// Pose-only reprojection optimizer shared by the minimal solver, the
// consensus refinement and the two-frame bundle adjustment.
LmResult optimize_reprojection(const std::vector<Correspondence>& correspondences,
                               const CameraIntrinsics& k,
                               const RigidTransform<double>& initial, const LmOptions& options);

}  // namespace detail

}  // namespace msslam
