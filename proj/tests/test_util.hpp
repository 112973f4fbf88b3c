#pragma once

#include <Eigen/Dense>
#include <vector>

#include "msslam/camera.hpp"
#include "msslam/descriptor.hpp"
#include "msslam/pnp.hpp"
#include "msslam/rng.hpp"
#include "msslam/se3.hpp"

namespace msslam::testutil {

inline CameraIntrinsics default_camera() {
  CameraIntrinsics k;
  k.fx = 500.0;
  k.fy = 500.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

inline Pose random_pose(Rng& rng, double max_angle = 0.5, double max_translation = 1.0) {
  Vec6<double> tangent;
  for (int i = 0; i < 3; ++i) tangent(i) = rng.uniform(-max_angle, max_angle);
  for (int i = 3; i < 6; ++i) tangent(i) = rng.uniform(-max_translation, max_translation);
  return se3_exp(tangent);
}

// Scene points in the reference frame such that both the reference camera and
// the query camera (at `pose` relative to the reference) see them.
inline std::vector<Eigen::Vector3d> random_visible_points(Rng& rng, const Pose& pose,
                                                          const CameraIntrinsics& k, int count) {
  std::vector<Eigen::Vector3d> points;
  while (static_cast<int>(points.size()) < count) {
    const Eigen::Vector3d p(rng.uniform(-2.5, 2.5), rng.uniform(-1.8, 1.8), rng.uniform(1.5, 6.0));
    const Eigen::Vector3d q = transform_point(pose, p);
    if (q.z() < 0.2) continue;
    if (!in_image(project(q, k), k, 1.0)) continue;
    if (!in_image(project(p, k), k, 1.0)) continue;
    points.push_back(p);
  }
  return points;
}

inline std::vector<Correspondence> make_correspondences(const std::vector<Eigen::Vector3d>& points,
                                                        const Pose& pose,
                                                        const CameraIntrinsics& k,
                                                        Rng& rng, double pixel_noise = 0.0) {
  std::vector<Correspondence> corrs;
  corrs.reserve(points.size());
  for (const Eigen::Vector3d& p : points) {
    Eigen::Vector2d px = project(transform_point(pose, p), k);
    if (pixel_noise > 0.0) {
      px.x() += rng.normal(0.0, pixel_noise);
      px.y() += rng.normal(0.0, pixel_noise);
    }
    corrs.push_back({p, px});
  }
  return corrs;
}

inline Eigen::VectorXf random_unit_descriptor(Rng& rng, int dim) {
  Eigen::VectorXf v(dim);
  for (int i = 0; i < dim; ++i) v(i) = static_cast<float>(rng.normal());
  v.normalize();
  return v;
}

}  // namespace msslam::testutil
