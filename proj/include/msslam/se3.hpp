#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace msslam {

template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec6 = Eigen::Matrix<S, 6, 1>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Mat4 = Eigen::Matrix<S, 4, 4>;
template <typename S>
using Mat6 = Eigen::Matrix<S, 6, 6>;

// Rigid 6DoF transform: p_out = rotation * p_in + translation.
template <typename S>
struct RigidTransform {
  Mat3<S> rotation = Mat3<S>::Identity();
  Vec3<S> translation = Vec3<S>::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3<S>& r, const Vec3<S>& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return RigidTransform(); }

  Mat4<S> matrix() const {
    Mat4<S> m = Mat4<S>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }
};

using Pose = RigidTransform<double>;

template <typename S>
Vec3<S> transform_point(const RigidTransform<S>& x, const Vec3<S>& p) {
  return x.rotation * p + x.translation;
}

// Applies b then a.
template <typename S>
RigidTransform<S> compose(const RigidTransform<S>& a, const RigidTransform<S>& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

template <typename S>
RigidTransform<S> invert(const RigidTransform<S>& x) {
  Mat3<S> rt = x.rotation.transpose();
  return {rt, -(rt * x.translation)};
}

template <typename S>
Mat3<S> skew(const Vec3<S>& w) {
  Mat3<S> m;
  m << S(0), -w.z(), w.y(), w.z(), S(0), -w.x(), -w.y(), w.x(), S(0);
  return m;
}

// Exponential map. Tangent layout is (rotation, translation).
template <typename S>
RigidTransform<S> se3_exp(const Vec6<S>& tangent) {
  const Vec3<S> w = tangent.template head<3>();
  const Vec3<S> v = tangent.template tail<3>();
  const S theta2 = w.squaredNorm();
  const S theta = std::sqrt(theta2);
  const Mat3<S> wx = skew(w);

  S a, b, c;  // coefficients of I, [w]x, [w]x^2 blends
  if (theta < S(1e-6)) {
    a = S(1) - theta2 / S(6);
    b = S(0.5) - theta2 / S(24);
    c = S(1) / S(6) - theta2 / S(120);
  } else {
    a = std::sin(theta) / theta;
    b = (S(1) - std::cos(theta)) / theta2;
    c = (S(1) - a) / theta2;
  }
  const Mat3<S> wx2 = wx * wx;
  RigidTransform<S> out;
  out.rotation = Mat3<S>::Identity() + a * wx + b * wx2;
  const Mat3<S> V = Mat3<S>::Identity() + b * wx + c * wx2;
  out.translation = V * v;
  return out;
}

// Logarithm map, inverse of se3_exp. Robust near rotation angle pi via the
// angle-axis decomposition.
template <typename S>
Vec6<S> se3_log(const RigidTransform<S>& x) {
  Eigen::AngleAxis<S> aa(x.rotation);
  const S theta = aa.angle();
  const Vec3<S> w = theta * aa.axis();
  const Mat3<S> wx = skew(w);

  Mat3<S> v_inv;
  if (theta < S(1e-6)) {
    v_inv = Mat3<S>::Identity() - S(0.5) * wx + (S(1) / S(12)) * (wx * wx);
  } else {
    const S half = S(0.5) * theta;
    const S cot_half = std::cos(half) / std::sin(half);
    const S coeff = (S(1) - half * cot_half) / (theta * theta);
    v_inv = Mat3<S>::Identity() - S(0.5) * wx + coeff * (wx * wx);
  }
  Vec6<S> tangent;
  tangent.template head<3>() = w;
  tangent.template tail<3>() = v_inv * x.translation;
  return tangent;
}

template <typename S>
bool is_valid_rotation(const Mat3<S>& r, S tol = S(1e-9)) {
  const S orth = (r * r.transpose() - Mat3<S>::Identity()).template lpNorm<Eigen::Infinity>();
  return orth <= tol && std::abs(r.determinant() - S(1)) <= tol;
}

// Re-orthonormalizes a rotation that accumulated floating point drift.
template <typename S>
Mat3<S> project_to_so3(const Mat3<S>& r) {
  Eigen::JacobiSVD<Mat3<S>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3<S> u = svd.matrixU();
  Mat3<S> v = svd.matrixV();
  Mat3<S> out = u * v.transpose();
  if (out.determinant() < S(0)) {
    u.col(2) *= S(-1);
    out = u * v.transpose();
  }
  return out;
}

template <typename S>
S rotation_angle(const Mat3<S>& r) {
  return Eigen::AngleAxis<S>(r).angle();
}

// Rotation part of a relative pose between a and b, in radians.
template <typename S>
S rotation_distance(const RigidTransform<S>& a, const RigidTransform<S>& b) {
  return rotation_angle<S>(Mat3<S>(a.rotation.transpose() * b.rotation));
}

template <typename S>
S translation_distance(const RigidTransform<S>& a, const RigidTransform<S>& b) {
  return (a.translation - b.translation).norm();
}

inline Pose rotation_about_z(double angle, const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
  return Pose(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix(), t);
}

}  // namespace msslam
