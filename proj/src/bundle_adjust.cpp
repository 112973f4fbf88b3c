#include "msslam/bundle_adjust.hpp"

#include <cmath>

namespace msslam {

BundleAdjustResult bundle_adjust_pair(const FeatureFrame& frame_a, const FeatureFrame& frame_b,
                                      const std::vector<Match>& matches,
                                      const CameraIntrinsics& k,
                                      const RigidTransform<double>& initial,
                                      const BundleAdjustConfig& cfg) {
  if (frame_a.family != frame_b.family) {
    throw FamilyMismatch("bundle_adjust_pair: frames hold different descriptor families");
  }

  // Points are fixed at frame_a's back-projections; only the relative pose
  // moves. Frame-a residuals are constant and enter the reported error only.
  std::vector<Correspondence> in_b;
  double constant_error = 0.0;
  for (const Match& m : matches) {
    const Keypoint& kp_a = frame_a.keypoints[static_cast<std::size_t>(m.index_a)];
    if (kp_a.depth <= 0.0) continue;
    const Eigen::Vector3d p = back_project(kp_a.pixel, kp_a.depth, k);
    constant_error += (project(p, k) - kp_a.pixel).squaredNorm();
    in_b.push_back({p, frame_b.keypoints[static_cast<std::size_t>(m.index_b)].pixel});
  }

  detail::LmOptions opts;
  opts.max_iterations = cfg.max_iterations;
  opts.lambda_init = cfg.lambda_init;
  opts.lambda_scale = cfg.lambda_scale;
  opts.relative_tolerance = cfg.relative_tolerance;
  opts.max_consecutive_failures = cfg.max_consecutive_failures;

  const detail::LmResult lm = detail::optimize_reprojection(in_b, k, initial, opts);

  BundleAdjustResult result;
  result.pose = lm.pose;
  result.initial_error = constant_error + 2.0 * lm.initial_cost;
  result.final_error = constant_error + 2.0 * lm.final_cost;
  result.status = (lm.status == detail::LmStatus::kDiverged ||
                   lm.status == detail::LmStatus::kInfeasible)
                      ? BundleAdjustStatus::kDiverged
                      : BundleAdjustStatus::kOk;
  return result;
}

}  // namespace msslam
