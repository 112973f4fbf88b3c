#pragma once

#include <optional>

#include "msslam/bundle_adjust.hpp"
#include "msslam/matching.hpp"
#include "msslam/pnp.hpp"

namespace msslam {

enum class RegistrationStage : std::uint8_t {
  kNone,        // accepted
  kGlobalMatch, // step 1: not enough distance-ratio matches
  kGlobalPnp,   // step 1: PnP found no consensus
  kGuidedMatch, // step 2: window matching starved
  kGuidedPnp,   // step 2: PnP refit failed
  kRefine,      // bundle adjustment diverged or final inliers below the bar
};

const char* registration_stage_name(RegistrationStage stage);

struct RegistrationConfig {
  double nndr_ratio = kDefaultNndrRatio;
  double window_px = kDefaultGuidedWindowPx;
  PnpConfig pnp;
  BundleAdjustConfig bundle;
  bool allow_prior_guess = false;
  std::uint64_t seed = 0;
};

struct RegistrationResult {
  bool accepted = false;
  RegistrationStage failed_stage = RegistrationStage::kNone;
  Pose transform;         // pose of the query camera expressed in the target frame
  int inlier_count = 0;   // final-step inliers
  int step1_inliers = 0;
  int step2_matches = 0;
  double rmse_px = 0.0;
};

// Two-step 6DoF estimation between a query frame and a map frame: global
// distance-ratio matching + PnP, then window-guided matching from the first
// motion estimate, a PnP refit and a final bundle refinement. The target
// frame supplies the 3D points (keypoint depths).
RegistrationResult estimate_transform(const FeatureFrame& query, const FeatureFrame& target,
                                      const CameraIntrinsics& k, const RegistrationConfig& cfg,
                                      const std::optional<Pose>& prior = {});

}  // namespace msslam
