#pragma once

#include <vector>

#include "msslam/camera.hpp"
#include "msslam/descriptor.hpp"
#include "msslam/se3.hpp"

namespace msslam {

inline constexpr double kDefaultNndrRatio = 0.8;
inline constexpr double kDefaultGuidedWindowPx = 20.0;

// Nearest-neighbor distance ratio matching from a into b. A match (i, j) is
// kept when j is i's nearest neighbor and d(i, nn1) < ratio * d(i, nn2); the
// result is one-to-one (smallest-distance claimant per j wins).
std::vector<Match> nndr_match(const FeatureFrame& a, const FeatureFrame& b, double ratio = kDefaultNndrRatio);

// Projects a's 3D features (needs depth) into b through transform_ab and
// matches against b's keypoints inside a square window of half-side
// window_px. The ratio test runs within the window only; a single candidate
// is accepted directly.
std::vector<Match> guided_match(const FeatureFrame& a, const FeatureFrame& b,
                                const RigidTransform<double>& transform_ab,
                                const CameraIntrinsics& k,
                                double window_px = kDefaultGuidedWindowPx,
                                double ratio = kDefaultNndrRatio);

}  // namespace msslam
