#include "msslam/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msslam {

namespace {

void check_families(const FeatureFrame& a, const FeatureFrame& b) {
  if (a.family != b.family) {
    throw FamilyMismatch("matching: frames hold different descriptor families");
  }
}

// Keeps only the smallest-distance claimant per target index.
std::vector<Match> enforce_one_to_one(std::vector<Match> candidates, int b_count) {
  std::vector<int> claimant(static_cast<std::size_t>(b_count), -1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Match& m = candidates[c];
    int& slot = claimant[static_cast<std::size_t>(m.index_b)];
    if (slot < 0 || m.distance < candidates[static_cast<std::size_t>(slot)].distance) {
      slot = static_cast<int>(c);
    }
  }
  std::vector<Match> out;
  for (int slot : claimant) {
    if (slot >= 0) out.push_back(candidates[static_cast<std::size_t>(slot)]);
  }
  std::sort(out.begin(), out.end(),
            [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
  return out;
}

float to_family_distance(float squared, bool binary) {
  return binary ? squared : std::sqrt(squared);
}

}  // namespace

std::vector<Match> nndr_match(const FeatureFrame& a, const FeatureFrame& b, double ratio) {
  check_families(a, b);
  const bool binary = family_traits(a.family).binary;
  std::vector<Match> candidates;
  if (a.count() == 0 || b.count() < 2) return candidates;

  for (int i = 0; i < a.count(); ++i) {
    float best = std::numeric_limits<float>::infinity();
    float second = std::numeric_limits<float>::infinity();
    int best_j = -1;
    for (int j = 0; j < b.count(); ++j) {
      const float d = squared_distance(a.descriptors.col(i), b.descriptors.col(j));
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    const float d1 = to_family_distance(best, binary);
    const float d2 = to_family_distance(second, binary);
    if (best_j >= 0 && d1 < static_cast<float>(ratio) * d2) {
      candidates.push_back({i, best_j, d1});
    }
  }
  return enforce_one_to_one(std::move(candidates), b.count());
}

std::vector<Match> guided_match(const FeatureFrame& a, const FeatureFrame& b,
                                const RigidTransform<double>& transform_ab,
                                const CameraIntrinsics& k, double window_px, double ratio) {
  check_families(a, b);
  const bool binary = family_traits(a.family).binary;
  std::vector<Match> candidates;
  if (window_px <= 0.0 || a.count() == 0 || b.count() == 0) return candidates;

  for (int i = 0; i < a.count(); ++i) {
    const Keypoint& kp = a.keypoints[static_cast<std::size_t>(i)];
    if (kp.depth <= 0.0) continue;  // projection needs 3D
    const Eigen::Vector3d p_b = transform_point(transform_ab, back_project(kp.pixel, kp.depth, k));
    if (p_b.z() <= 0.0) continue;
    const Eigen::Vector2d predicted = project(p_b, k);

    float best = std::numeric_limits<float>::infinity();
    float second = std::numeric_limits<float>::infinity();
    int best_j = -1;
    for (int j = 0; j < b.count(); ++j) {
      const Eigen::Vector2d delta = b.keypoints[static_cast<std::size_t>(j)].pixel - predicted;
      if (std::abs(delta.x()) > window_px || std::abs(delta.y()) > window_px) continue;
      const float d = squared_distance(a.descriptors.col(i), b.descriptors.col(j));
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j < 0) continue;
    const float d1 = to_family_distance(best, binary);
    const float d2 = to_family_distance(second, binary);
    // A lone candidate in the window is unambiguous.
    if (!std::isfinite(second) || d1 < static_cast<float>(ratio) * d2) {
      candidates.push_back({i, best_j, d1});
    }
  }
  return enforce_one_to_one(std::move(candidates), b.count());
}

}  // namespace msslam
