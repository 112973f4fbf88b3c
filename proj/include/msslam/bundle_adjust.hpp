#pragma once

#include <vector>

#include "msslam/camera.hpp"
#include "msslam/descriptor.hpp"
#include "msslam/pnp.hpp"
#include "msslam/se3.hpp"

namespace msslam {

struct BundleAdjustConfig {
  int max_iterations = 20;
  double relative_tolerance = 1e-9;
  double lambda_init = 1e-3;
  double lambda_scale = 10.0;
  int max_consecutive_failures = 5;
};

enum class BundleAdjustStatus { kOk, kDiverged };

struct BundleAdjustResult {
  BundleAdjustStatus status = BundleAdjustStatus::kOk;
  RigidTransform<double> pose;  // refined transform mapping frame_a points into frame_b's camera
  double initial_error = 0.0;   // total squared reprojection error over both frames
  double final_error = 0.0;

  bool ok() const { return status == BundleAdjustStatus::kOk; }
};

// Refines the relative pose of a matched frame pair. 3D points are fixed,
// back-projected from frame_a's keypoint depths; the total squared
// reprojection error over both frames never increases. Matches without depth
// in frame_a are ignored.
BundleAdjustResult bundle_adjust_pair(const FeatureFrame& frame_a, const FeatureFrame& frame_b,
                                      const std::vector<Match>& matches,
                                      const CameraIntrinsics& k,
                                      const RigidTransform<double>& initial,
                                      const BundleAdjustConfig& cfg = {});

}  // namespace msslam
