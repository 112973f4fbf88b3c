#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "msslam/graph.hpp"
#include "msslam/rng.hpp"
#include "test_util.hpp"

using namespace msslam;
using testutil::random_pose;

namespace {

FeatureFrame empty_frame() {
  FeatureFrame f;
  f.family = FeatureFamily::kSurf;
  f.descriptors.resize(64, 0);
  return f;
}

Mat6<double> diag_information(double rot, double trans) {
  Mat6<double> info = Mat6<double>::Zero();
  info.diagonal() << rot, rot, rot, trans, trans, trans;
  return info;
}

// square trajectory: four corners, yaw turning 90 degrees each step
std::vector<Pose> square_poses() {
  std::vector<Pose> poses;
  poses.push_back(rotation_about_z(0.0, {0.0, 0.0, 0.0}));
  poses.push_back(rotation_about_z(M_PI_2, {2.0, 0.0, 0.0}));
  poses.push_back(rotation_about_z(M_PI, {2.0, 2.0, 0.0}));
  poses.push_back(rotation_about_z(3.0 * M_PI_2, {0.0, 2.0, 0.0}));
  return poses;
}

Pose relative(const Pose& a, const Pose& b) { return compose(invert(a), b); }

}  // namespace

TEST_CASE("first node of the first session anchors at its odometry pose") {
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s = map.add_session(0.0, FeatureFamily::kSurf);
  const Pose odom = rotation_about_z(0.3, {1.0, 2.0, 0.0});
  const NodeId id = map.add_node(s, 0.0, odom, empty_frame());
  CHECK((map.node(id).opt_pose.matrix() - odom.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(map.anchor_node() == id);
  CHECK(map.session(s).anchored);
}

TEST_CASE("link validation") {
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s = map.add_session(0.0, FeatureFamily::kSurf);
  const NodeId a = map.add_node(s, 0.0, Pose(), empty_frame());
  const NodeId b = map.add_node(s, 1.0, Pose(), empty_frame());

  Link self{a, a, LinkKind::kLoopClosure, Pose(), Mat6<double>::Identity()};
  CHECK_THROWS_AS(map.add_link(self), InvalidParams);

  Link ghost{a, 42, LinkKind::kLoopClosure, Pose(), Mat6<double>::Identity()};
  CHECK_THROWS_AS(map.add_link(ghost), UnknownNode);

  Link bad_info{a, b, LinkKind::kOdometry, Pose(), Mat6<double>::Zero()};
  CHECK_THROWS_AS(map.add_link(bad_info), NonPositiveDefiniteInformation);

  Link ok{a, b, LinkKind::kOdometry, Pose(), Mat6<double>::Identity()};
  CHECK_NOTHROW(map.add_link(ok));
}

TEST_CASE("consistent odometry chain optimizes to zero residual") {
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s = map.add_session(0.0, FeatureFamily::kSurf);
  Rng rng(401);
  std::vector<Pose> truth;
  Pose cur;
  for (int i = 0; i < 10; ++i) {
    truth.push_back(cur);
    map.add_node(s, i, cur, empty_frame());
    cur = compose(cur, random_pose(rng, 0.2, 0.5));
  }
  for (int i = 0; i + 1 < 10; ++i) {
    map.add_link({i, i + 1, LinkKind::kOdometry, relative(truth[static_cast<std::size_t>(i)], truth[static_cast<std::size_t>(i) + 1]),
                  diag_information(100.0, 100.0)});
  }
  const OptimizeResult res = map.optimize();
  CHECK(res.unreached.empty());
  CHECK(res.final_residual < 1e-16);
  for (int i = 0; i < 10; ++i) {
    CHECK((map.node(i).opt_pose.matrix() - truth[static_cast<std::size_t>(i)].matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("a second session aligns into the frame of the oldest session") {
  // second session records the same square, but its odometry frame is offset
  // by a known rigid transform
  const Pose g = rotation_about_z(0.5, {2.0, 1.0, 0.5});
  const auto truth = square_poses();

  MultiSessionMap map(FeatureFamily::kSurf);
  const int s0 = map.add_session(0.0, FeatureFamily::kSurf);
  const int s1 = map.add_session(30.0, FeatureFamily::kSurf);

  for (std::size_t i = 0; i < truth.size(); ++i) {
    map.add_node(s0, static_cast<double>(i), truth[i], empty_frame());
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    map.add_node(s1, static_cast<double>(i), compose(g, truth[i]), empty_frame());
  }
  const Mat6<double> info = diag_information(400.0, 400.0);
  for (int i = 0; i + 1 < 4; ++i) {
    map.add_link({i, i + 1, LinkKind::kOdometry, relative(truth[static_cast<std::size_t>(i)], truth[static_cast<std::size_t>(i) + 1]), info});
    map.add_link({i + 4, i + 5, LinkKind::kOdometry, relative(truth[static_cast<std::size_t>(i)], truth[static_cast<std::size_t>(i) + 1]), info});
  }
  // exact inter-session closure at corner 1: both nodes sit at the same pose
  map.add_link({1, 5, LinkKind::kLoopClosure, Pose(), info});

  OptimizeConfig cfg;
  cfg.max_iterations = 200;
  const OptimizeResult res = map.optimize(cfg);
  CHECK(res.unreached.empty());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Pose& got = map.node(static_cast<NodeId>(4 + i)).opt_pose;
    CHECK(rotation_distance(got, truth[i]) < 1e-6);
    CHECK(translation_distance(got, truth[i]) < 1e-6);
  }
  // anchor never moves
  CHECK((map.node(0).opt_pose.matrix() - truth[0].matrix()).cwiseAbs().maxCoeff() == 0.0);
  // residual history is monotone non-increasing
  for (std::size_t i = 1; i < res.residual_history.size(); ++i) {
    CHECK(res.residual_history[i] <= res.residual_history[i - 1] + 1e-15);
  }
}

TEST_CASE("noisy odometry with exact closures improves") {
  Rng rng(409);
  const double sigma_t = 0.02, sigma_r = 0.01;
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s = map.add_session(0.0, FeatureFamily::kSurf);

  // loop trajectory: 12 nodes around a circle, returning to start
  std::vector<Pose> truth;
  for (int i = 0; i < 12; ++i) {
    const double a = 2.0 * M_PI * i / 12.0;
    truth.push_back(rotation_about_z(a, {2.0 * std::cos(a), 2.0 * std::sin(a), 0.0}));
  }
  Pose dead = truth[0];
  map.add_node(s, 0.0, dead, empty_frame());
  for (int i = 1; i < 12; ++i) {
    Pose step = relative(truth[static_cast<std::size_t>(i) - 1], truth[static_cast<std::size_t>(i)]);
    Vec6<double> noise;
    for (int d = 0; d < 3; ++d) noise(d) = rng.normal(0.0, sigma_r);
    for (int d = 3; d < 6; ++d) noise(d) = rng.normal(0.0, sigma_t);
    step = compose(step, se3_exp(noise));
    dead = compose(dead, step);
    map.add_node(s, i, dead, empty_frame());
    map.add_link({i - 1, i, LinkKind::kOdometry, step,
                  diag_information(1.0 / (sigma_r * sigma_r), 1.0 / (sigma_t * sigma_t))});
  }
  // exact closure from node 11 back to node 0
  map.add_link({11, 0, LinkKind::kLoopClosure, relative(truth[11], truth[0]),
                diag_information(1.0 / (sigma_r * sigma_r), 1.0 / (sigma_t * sigma_t))});

  const OptimizeResult res = map.optimize();
  CHECK(res.final_residual < res.initial_residual);
  // after optimization the closure link holds to within the odometry noise
  const Vec6<double> r = se3_log(compose(invert(relative(truth[11], truth[0])),
                                         relative(map.node(11).opt_pose, map.node(0).opt_pose)));
  CHECK(r.tail<3>().norm() < 3.0 * sigma_t);
  CHECK(r.head<3>().norm() < 3.0 * sigma_r);
}

TEST_CASE("optimizing an already optimal graph is a no-op") {
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s = map.add_session(0.0, FeatureFamily::kSurf);
  const auto truth = square_poses();
  for (std::size_t i = 0; i < truth.size(); ++i) map.add_node(s, static_cast<double>(i), truth[i], empty_frame());
  for (int i = 0; i + 1 < 4; ++i) {
    map.add_link({i, i + 1, LinkKind::kOdometry, relative(truth[static_cast<std::size_t>(i)], truth[static_cast<std::size_t>(i) + 1]),
                  Mat6<double>::Identity()});
  }
  map.optimize();
  const std::vector<Pose> before = {map.node(0).opt_pose, map.node(1).opt_pose,
                                    map.node(2).opt_pose, map.node(3).opt_pose};
  map.optimize();
  for (int i = 0; i < 4; ++i) {
    CHECK((map.node(i).opt_pose.matrix() - before[static_cast<std::size_t>(i)].matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("a session without inter-session links is reported unreached") {
  MultiSessionMap map(FeatureFamily::kSurf);
  const int s0 = map.add_session(0.0, FeatureFamily::kSurf);
  const int s1 = map.add_session(30.0, FeatureFamily::kSurf);
  map.add_node(s0, 0.0, Pose(), empty_frame());
  map.add_node(s0, 1.0, rotation_about_z(0.1, {1.0, 0.0, 0.0}), empty_frame());
  map.add_link({0, 1, LinkKind::kOdometry, rotation_about_z(0.1, {1.0, 0.0, 0.0}),
                Mat6<double>::Identity()});

  const Pose off = rotation_about_z(1.0, {5.0, 5.0, 0.0});
  map.add_node(s1, 0.0, off, empty_frame());
  const Pose before = map.node(2).opt_pose;

  const OptimizeResult res = map.optimize();
  REQUIRE(res.unreached.size() == 1);
  CHECK(res.unreached[0] == 2);
  CHECK((map.node(2).opt_pose.matrix() - before.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(map.session(s1).anchored);
}
