#include "msslam/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msslam/errors.hpp"
#include "msslam/rng.hpp"

namespace msslam {

namespace {

constexpr double kInfeasibleCost = std::numeric_limits<double>::infinity();

// 0.5 * sum of squared pixel residuals; infinite when a point falls behind
// the camera (step candidates that do so are rejected).
double cost_at(const std::vector<Correspondence>& corrs, const CameraIntrinsics& k,
               const RigidTransform<double>& pose) {
  double cost = 0.0;
  for (const Correspondence& c : corrs) {
    const Eigen::Vector3d q = transform_point(pose, c.point3);
    if (q.z() <= 1e-12) return kInfeasibleCost;
    const Eigen::Vector2d r(k.fx * q.x() / q.z() + k.cx - c.pixel.x(),
                            k.fy * q.y() / q.z() + k.cy - c.pixel.y());
    cost += 0.5 * r.squaredNorm();
  }
  return cost;
}

struct NormalEquations {
  Mat6<double> jtj = Mat6<double>::Zero();
  Vec6<double> jtr = Vec6<double>::Zero();
  bool feasible = true;
};

// Jacobian of the residual wrt a left-multiplicative tangent (w, v):
// d(exp(d) * pose * p)/dd at d = 0 is [-[q]x | I] with q = pose * p.
NormalEquations build_normal_equations(const std::vector<Correspondence>& corrs,
                                       const CameraIntrinsics& k,
                                       const RigidTransform<double>& pose) {
  NormalEquations eq;
  for (const Correspondence& c : corrs) {
    const Eigen::Vector3d q = transform_point(pose, c.point3);
    if (q.z() <= 1e-12) {
      eq.feasible = false;
      return eq;
    }
    const Eigen::Vector2d r(k.fx * q.x() / q.z() + k.cx - c.pixel.x(),
                            k.fy * q.y() / q.z() + k.cy - c.pixel.y());
    Eigen::Matrix<double, 2, 6> j;
    j.leftCols<3>() = projection_jacobian(q, k) * (-skew(q));
    j.rightCols<3>() = projection_jacobian(q, k);
    eq.jtj.noalias() += j.transpose() * j;
    eq.jtr.noalias() += j.transpose() * r;
  }
  return eq;
}

double reprojection_error_px(const Correspondence& c, const CameraIntrinsics& k,
                             const RigidTransform<double>& pose) {
  const Eigen::Vector3d q = transform_point(pose, c.point3);
  if (q.z() <= 1e-12) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d r(k.fx * q.x() / q.z() + k.cx - c.pixel.x(),
                          k.fy * q.y() / q.z() + k.cy - c.pixel.y());
  return r.norm();
}

std::vector<Correspondence> select(const std::vector<Correspondence>& corrs,
                                   const std::vector<bool>& mask) {
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (mask[i]) out.push_back(corrs[i]);
  }
  return out;
}

int count_inliers(const std::vector<Correspondence>& corrs, const CameraIntrinsics& k,
                  const RigidTransform<double>& pose, double threshold,
                  std::vector<bool>& mask) {
  mask.assign(corrs.size(), false);
  int count = 0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (reprojection_error_px(corrs[i], k, pose) < threshold) {
      mask[i] = true;
      ++count;
    }
  }
  return count;
}

}  // namespace

namespace detail {

LmResult optimize_reprojection(const std::vector<Correspondence>& corrs,
                               const CameraIntrinsics& k, const RigidTransform<double>& initial,
                               const LmOptions& options) {
  LmResult result;
  result.pose = initial;
  result.initial_cost = cost_at(corrs, k, initial);
  result.final_cost = result.initial_cost;
  if (!std::isfinite(result.initial_cost)) {
    result.status = LmStatus::kInfeasible;
    return result;
  }

  double lambda = options.lambda_init;
  double cost = result.initial_cost;
  int consecutive_failures = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const NormalEquations eq = build_normal_equations(corrs, k, result.pose);
    if (!eq.feasible) {
      result.status = LmStatus::kInfeasible;
      return result;
    }
    Mat6<double> damped = eq.jtj;
    damped.diagonal().array() += lambda;
    const Vec6<double> delta = damped.ldlt().solve(-eq.jtr);
    if (!delta.allFinite()) {
      result.status = LmStatus::kDiverged;
      return result;
    }
    if (delta.norm() < 1e-14) {
      result.status = LmStatus::kConverged;
      return result;
    }
    const RigidTransform<double> candidate = compose(se3_exp(delta), result.pose);
    const double new_cost = cost_at(corrs, k, candidate);
    if (new_cost < cost) {
      const double rel_change = (cost - new_cost) / std::max(cost, 1e-300);
      result.pose = candidate;
      result.pose.rotation = project_to_so3(result.pose.rotation);
      cost = new_cost;
      result.final_cost = cost;
      lambda = std::max(lambda / options.lambda_scale, 1e-12);
      consecutive_failures = 0;
      if (rel_change < options.relative_tolerance) {
        result.status = LmStatus::kConverged;
        return result;
      }
    } else {
      // a rejected step that barely moves the cost means we are at a minimum
      const double rel_increase = (new_cost - cost) / std::max(cost, 1e-300);
      if (rel_increase < options.relative_tolerance) {
        result.status = LmStatus::kConverged;
        return result;
      }
      lambda = std::min(lambda * options.lambda_scale, 1e16);
      ++consecutive_failures;
      if (consecutive_failures >= options.max_consecutive_failures) {
        result.status = LmStatus::kDiverged;
        return result;
      }
    }
  }
  result.status = LmStatus::kMaxIterations;
  return result;
}

}  // namespace detail

double reprojection_cost(const std::vector<Correspondence>& corrs, const CameraIntrinsics& k,
                         const RigidTransform<double>& pose) {
  return cost_at(corrs, k, pose);
}

Vec6<double> reprojection_gradient(const std::vector<Correspondence>& corrs,
                                   const CameraIntrinsics& k,
                                   const RigidTransform<double>& pose) {
  return build_normal_equations(corrs, k, pose).jtr;
}

PnpResult solve_pnp_ransac(const std::vector<Correspondence>& corrs, const CameraIntrinsics& k,
                           const PnpConfig& cfg,
                           const std::optional<RigidTransform<double>>& initial_guess) {
  PnpResult result;
  const int n = static_cast<int>(corrs.size());
  const int sample_size = std::max(cfg.min_correspondences, 6);
  if (n < sample_size) {
    result.status = PnpStatus::kTooFewCorrespondences;
    result.inlier_mask.assign(corrs.size(), false);
    return result;
  }

  Rng rng(hash_combine(cfg.seed, 0x706e70ULL));
  const RigidTransform<double> start = initial_guess.value_or(RigidTransform<double>());

  detail::LmOptions minimal_opts;
  minimal_opts.max_iterations = cfg.minimal_solver_iterations;
  minimal_opts.relative_tolerance = 1e-12;

  int best_count = 0;
  RigidTransform<double> best_pose;
  std::vector<bool> mask;

  int allowed_iterations = cfg.max_ransac_iterations;
  std::vector<int> indices(static_cast<std::size_t>(sample_size));
  for (int it = 0; it < allowed_iterations; ++it) {
    // sample without replacement
    for (int s = 0; s < sample_size; ++s) {
      bool fresh = true;
      do {
        indices[static_cast<std::size_t>(s)] = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        fresh = true;
        for (int t = 0; t < s; ++t) {
          if (indices[static_cast<std::size_t>(t)] == indices[static_cast<std::size_t>(s)]) fresh = false;
        }
      } while (!fresh);
    }
    std::vector<Correspondence> sample;
    sample.reserve(static_cast<std::size_t>(sample_size));
    for (int idx : indices) sample.push_back(corrs[static_cast<std::size_t>(idx)]);

    // Coplanar/collinear samples make the normal equations ill-conditioned;
    // skip them and draw again.
    const NormalEquations eq = build_normal_equations(sample, k, start);
    if (!eq.feasible) continue;
    Eigen::JacobiSVD<Mat6<double>> svd(eq.jtj);
    const double smin = svd.singularValues()(5);
    if (smin <= 0.0 || svd.singularValues()(0) / smin > cfg.degeneracy_condition_limit) continue;

    const detail::LmResult fit = detail::optimize_reprojection(sample, k, start, minimal_opts);
    if (fit.status == detail::LmStatus::kInfeasible || fit.status == detail::LmStatus::kDiverged) {
      continue;
    }
    const int inliers = count_inliers(corrs, k, fit.pose, cfg.reprojection_threshold_px, mask);
    if (inliers > best_count) {
      best_count = inliers;
      best_pose = fit.pose;
      // Adaptive iteration bound from the observed inlier ratio.
      const double w = static_cast<double>(inliers) / static_cast<double>(n);
      const double denom = std::log(std::max(1e-12, 1.0 - std::pow(w, sample_size)));
      if (denom < 0.0) {
        const int needed =
            static_cast<int>(std::ceil(std::log(1.0 - cfg.ransac_confidence) / denom));
        allowed_iterations = std::min(allowed_iterations, std::max(it + 1, needed));
      }
    }
  }

  if (best_count < std::max(cfg.min_inliers, sample_size)) {
    result.status = PnpStatus::kNoConsensus;
    result.inlier_mask.assign(corrs.size(), false);
    result.inlier_count = 0;
    return result;
  }

  // Two rounds of refine + inlier re-selection on the consensus set.
  detail::LmOptions refine_opts;
  refine_opts.max_iterations = cfg.refine_iterations;
  refine_opts.relative_tolerance = 1e-12;
  RigidTransform<double> pose = best_pose;
  count_inliers(corrs, k, pose, cfg.reprojection_threshold_px, mask);
  for (int round = 0; round < 2; ++round) {
    const std::vector<Correspondence> inlier_set = select(corrs, mask);
    if (static_cast<int>(inlier_set.size()) < sample_size) break;
    const detail::LmResult refined = detail::optimize_reprojection(inlier_set, k, pose, refine_opts);
    if (refined.status == detail::LmStatus::kInfeasible) break;
    pose = refined.pose;
    count_inliers(corrs, k, pose, cfg.reprojection_threshold_px, mask);
  }

  result.inlier_count = count_inliers(corrs, k, pose, cfg.reprojection_threshold_px, mask);
  if (result.inlier_count < cfg.min_inliers) {
    result.status = PnpStatus::kNoConsensus;
    result.inlier_mask.assign(corrs.size(), false);
    result.inlier_count = 0;
    return result;
  }
  result.status = PnpStatus::kOk;
  result.pose = pose;
  result.inlier_mask = mask;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (!mask[i]) continue;
    const double e = reprojection_error_px(corrs[i], k, pose);
    sq_sum += e * e;
  }
  result.rmse_px = std::sqrt(sq_sum / std::max(1, result.inlier_count));
  return result;
}

}  // namespace msslam
