#pragma once

#include <Eigen/Dense>

#include "msslam/errors.hpp"
#include "msslam/se3.hpp"

namespace msslam {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cx < width && cy > 0.0 && cy < height;
  }
};

inline Eigen::Vector2d project(const Eigen::Vector3d& p, const CameraIntrinsics& k) {
  if (p.z() <= 0.0) {
    throw NonPositiveDepth("project: point depth must be positive");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

inline Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double depth,
                                    const CameraIntrinsics& k) {
  if (depth <= 0.0) {
    throw NonPositiveDepth("back_project: depth must be positive");
  }
  return {(pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth};
}

inline bool in_image(const Eigen::Vector2d& pixel, const CameraIntrinsics& k,
                     double margin = 0.0) {
  return pixel.x() >= margin && pixel.x() <= k.width - 1 - margin && pixel.y() >= margin &&
         pixel.y() <= k.height - 1 - margin;
}

// d(pixel)/d(camera point) for a point with positive depth.
inline Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& p,
                                                       const CameraIntrinsics& k) {
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
  return j;
}

}  // namespace msslam
