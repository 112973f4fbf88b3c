#include "msslam/registration.hpp"

#include <cmath>

#include "msslam/rng.hpp"

namespace msslam {

const char* registration_stage_name(RegistrationStage stage) {
  switch (stage) {
    case RegistrationStage::kNone: return "none";
    case RegistrationStage::kGlobalMatch: return "global_match";
    case RegistrationStage::kGlobalPnp: return "global_pnp";
    case RegistrationStage::kGuidedMatch: return "guided_match";
    case RegistrationStage::kGuidedPnp: return "guided_pnp";
    case RegistrationStage::kRefine: return "refine";
  }
  return "?";
}

namespace {

// Correspondences: target back-projections against query pixels.
std::vector<Correspondence> to_correspondences(const FeatureFrame& target,
                                               const FeatureFrame& query,
                                               const std::vector<Match>& matches,
                                               const CameraIntrinsics& k) {
  std::vector<Correspondence> corrs;
  corrs.reserve(matches.size());
  for (const Match& m : matches) {
    const Keypoint& kp = target.keypoints[static_cast<std::size_t>(m.index_a)];
    if (kp.depth <= 0.0) continue;
    corrs.push_back({back_project(kp.pixel, kp.depth, k),
                     query.keypoints[static_cast<std::size_t>(m.index_b)].pixel});
  }
  return corrs;
}

int final_inliers(const std::vector<Correspondence>& corrs, const CameraIntrinsics& k,
                  const Pose& w, double threshold, double& rmse) {
  int count = 0;
  double sq = 0.0;
  for (const Correspondence& c : corrs) {
    const Eigen::Vector3d q = transform_point(w, c.point3);
    if (q.z() <= 1e-12) continue;
    const double e = (project(q, k) - c.pixel).norm();
    if (e < threshold) {
      ++count;
      sq += e * e;
    }
  }
  rmse = count > 0 ? std::sqrt(sq / count) : 0.0;
  return count;
}

}  // namespace

RegistrationResult estimate_transform(const FeatureFrame& query, const FeatureFrame& target,
                                      const CameraIntrinsics& k, const RegistrationConfig& cfg,
                                      const std::optional<Pose>& prior) {
  if (query.family != target.family) {
    throw FamilyMismatch("estimate_transform: frames hold different descriptor families");
  }
  RegistrationResult result;

  PnpConfig pnp_cfg = cfg.pnp;
  pnp_cfg.seed = hash_combine(cfg.seed, 0x5265673143ULL);

  // step 1: global matching + PnP; w maps target-frame points into the query camera
  std::optional<Pose> w1;
  const std::vector<Match> global = nndr_match(target, query, cfg.nndr_ratio);
  const std::vector<Correspondence> global_corrs = to_correspondences(target, query, global, k);
  if (static_cast<int>(global_corrs.size()) >= pnp_cfg.min_correspondences) {
    const PnpResult step1 = solve_pnp_ransac(global_corrs, k, pnp_cfg);
    if (step1.ok()) {
      w1 = step1.pose;
      result.step1_inliers = step1.inlier_count;
    } else {
      result.failed_stage = RegistrationStage::kGlobalPnp;
    }
  } else {
    result.failed_stage = RegistrationStage::kGlobalMatch;
  }
  if (!w1) {
    if (!(cfg.allow_prior_guess && prior)) return result;
    w1 = invert(*prior);  // motion prior arrives as the query's pose in the target frame
  }

  // step 2: guided matching from the motion estimate, PnP refit, refinement
  const std::vector<Match> guided = guided_match(target, query, *w1, k, cfg.window_px, cfg.nndr_ratio);
  result.step2_matches = static_cast<int>(guided.size());
  const std::vector<Correspondence> guided_corrs = to_correspondences(target, query, guided, k);
  if (static_cast<int>(guided_corrs.size()) < pnp_cfg.min_correspondences) {
    result.failed_stage = RegistrationStage::kGuidedMatch;
    return result;
  }
  PnpConfig refit_cfg = pnp_cfg;
  refit_cfg.seed = hash_combine(cfg.seed, 0x5265673253ULL);
  const PnpResult step2 = solve_pnp_ransac(guided_corrs, k, refit_cfg, w1);
  if (!step2.ok()) {
    result.failed_stage = RegistrationStage::kGuidedPnp;
    return result;
  }

  std::vector<Match> inlier_matches;
  for (std::size_t i = 0, c = 0; i < guided.size(); ++i) {
    if (target.keypoints[static_cast<std::size_t>(guided[i].index_a)].depth <= 0.0) continue;
    if (step2.inlier_mask[c]) inlier_matches.push_back(guided[i]);
    ++c;
  }
  const BundleAdjustResult refined =
      bundle_adjust_pair(target, query, inlier_matches, k, step2.pose, cfg.bundle);
  const Pose w_final = refined.ok() ? refined.pose : step2.pose;

  result.inlier_count =
      final_inliers(guided_corrs, k, w_final, pnp_cfg.reprojection_threshold_px, result.rmse_px);
  if (!refined.ok() || result.inlier_count < pnp_cfg.min_inliers) {
    result.failed_stage = RegistrationStage::kRefine;
    result.inlier_count = 0;
    return result;
  }
  result.accepted = true;
  result.failed_stage = RegistrationStage::kNone;
  result.transform = invert(w_final);
  return result;
}

}  // namespace msslam
