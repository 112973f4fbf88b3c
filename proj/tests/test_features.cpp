#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "msslam/matching.hpp"
#include "msslam/rng.hpp"
#include "test_util.hpp"

using namespace msslam;
using testutil::default_camera;
using testutil::random_pose;
using testutil::random_unit_descriptor;

namespace {

FeatureFrame make_frame(FeatureFamily family, const std::vector<Eigen::VectorXf>& descs) {
  FeatureFrame f;
  f.family = family;
  const int n = static_cast<int>(descs.size());
  f.descriptors.resize(descs.empty() ? family_traits(family).dimension : descs[0].size(), n);
  for (int i = 0; i < n; ++i) {
    f.descriptors.col(i) = descs[static_cast<std::size_t>(i)];
    f.keypoints.push_back({{100.0 + i, 100.0}, 1.0});
    f.word_ids.push_back(kNoWord);
  }
  return f;
}

// O(n^2) reference: same semantics as nndr_match, written independently with
// plain loops over descriptor_distance.
std::vector<Match> nndr_oracle(const FeatureFrame& a, const FeatureFrame& b, double ratio) {
  struct Cand {
    int i, j;
    float d;
  };
  std::vector<Cand> cands;
  if (b.count() < 2) return {};
  for (int i = 0; i < a.count(); ++i) {
    int best_j = -1;
    float best = std::numeric_limits<float>::infinity();
    float second = std::numeric_limits<float>::infinity();
    for (int j = 0; j < b.count(); ++j) {
      const float d = descriptor_distance(a.descriptor(i), b.descriptor(j));
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j >= 0 && best < static_cast<float>(ratio) * second) cands.push_back({i, best_j, best});
  }
  std::vector<Match> out;
  for (int j = 0; j < b.count(); ++j) {
    int win = -1;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (cands[c].j != j) continue;
      if (win < 0 || cands[c].d < cands[static_cast<std::size_t>(win)].d) win = static_cast<int>(c);
    }
    if (win >= 0) {
      out.push_back({cands[static_cast<std::size_t>(win)].i, j, cands[static_cast<std::size_t>(win)].d});
    }
  }
  std::sort(out.begin(), out.end(), [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
  return out;
}

bool same_matches(const std::vector<Match>& x, const std::vector<Match>& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].index_a != y[i].index_a || x[i].index_b != y[i].index_b) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("descriptor distance trivial cases") {
  Descriptor a{FeatureFamily::kSurf, Eigen::VectorXf::Zero(64)};
  CHECK(descriptor_distance(a, a) == 0.0f);

  Eigen::VectorXf b1(4), b2(4);
  b1 << 1, 0, 1, 0;
  b2 << 1, 1, 1, 1;
  CHECK(descriptor_distance({FeatureFamily::kBrief, b1}, {FeatureFamily::kBrief, b2}) == 2.0f);

  Eigen::VectorXf r1(2), r2(2);
  r1 << 3, 4;
  r2 << 0, 0;
  CHECK(descriptor_distance({FeatureFamily::kSurf, r1}, {FeatureFamily::kSurf, r2}) ==
        doctest::Approx(5.0f));

  CHECK_THROWS_AS(descriptor_distance({FeatureFamily::kSurf, r1}, {FeatureFamily::kKaze, r1}),
                  FamilyMismatch);
}

TEST_CASE("nndr matches an unambiguous nearest neighbor") {
  Rng rng(101);
  const Eigen::VectorXf probe = random_unit_descriptor(rng, 64);
  std::vector<Eigen::VectorXf> bs;
  bs.push_back(probe);
  for (int i = 0; i < 5; ++i) bs.push_back(10.0f * random_unit_descriptor(rng, 64));
  const auto a = make_frame(FeatureFamily::kSurf, {probe});
  const auto b = make_frame(FeatureFamily::kSurf, bs);
  const auto matches = nndr_match(a, b, 0.8);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0].index_a == 0);
  CHECK(matches[0].index_b == 0);
}

TEST_CASE("nndr rejects ambiguous duplicates") {
  Rng rng(103);
  const Eigen::VectorXf probe = random_unit_descriptor(rng, 64);
  const Eigen::VectorXf twin = probe + 0.1f * random_unit_descriptor(rng, 64);
  const auto a = make_frame(FeatureFamily::kSurf, {probe});
  const auto b = make_frame(FeatureFamily::kSurf, {twin, twin});
  CHECK(nndr_match(a, b, 0.99).empty());
}

TEST_CASE("nndr equals the brute-force oracle with planted pairs") {
  Rng rng(107);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<Eigen::VectorXf> as, bs;
    for (int i = 0; i < 200; ++i) as.push_back(random_unit_descriptor(rng, 64));
    for (int i = 0; i < 160; ++i) bs.push_back(random_unit_descriptor(rng, 64));
    // plant 40 noisy true pairs
    for (int i = 0; i < 40; ++i) {
      Eigen::VectorXf noisy = as[static_cast<std::size_t>(i)];
      for (int d = 0; d < noisy.size(); ++d) noisy(d) += 0.01f * static_cast<float>(rng.normal());
      bs[static_cast<std::size_t>(i * 4)] = noisy;
    }
    const auto a = make_frame(FeatureFamily::kSurf, as);
    const auto b = make_frame(FeatureFamily::kSurf, bs);
    const auto got = nndr_match(a, b, 0.8);
    const auto expected = nndr_oracle(a, b, 0.8);
    CHECK(same_matches(got, expected));
    CHECK(got.size() >= 35);  // nearly all planted pairs survive
  }
}

TEST_CASE("nndr output is one-to-one in both directions") {
  Rng rng(109);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<Eigen::VectorXf> as, bs;
    const int na = 30 + static_cast<int>(rng.uniform_index(100));
    const int nb = 30 + static_cast<int>(rng.uniform_index(100));
    for (int i = 0; i < na; ++i) as.push_back(random_unit_descriptor(rng, 32));
    for (int i = 0; i < nb; ++i) bs.push_back(random_unit_descriptor(rng, 32));
    const auto matches =
        nndr_match(make_frame(FeatureFamily::kSurf, as), make_frame(FeatureFamily::kSurf, bs), 0.95);
    std::set<int> seen_a, seen_b;
    for (const Match& m : matches) {
      CHECK(seen_a.insert(m.index_a).second);
      CHECK(seen_b.insert(m.index_b).second);
    }
  }
}

TEST_CASE("lowering the nndr ratio never adds matches") {
  Rng rng(113);
  std::vector<Eigen::VectorXf> as, bs;
  for (int i = 0; i < 120; ++i) as.push_back(random_unit_descriptor(rng, 64));
  for (int i = 0; i < 120; ++i) bs.push_back(random_unit_descriptor(rng, 64));
  for (int i = 0; i < 30; ++i) bs[static_cast<std::size_t>(i)] = as[static_cast<std::size_t>(i)];
  const auto a = make_frame(FeatureFamily::kSurf, as);
  const auto b = make_frame(FeatureFamily::kSurf, bs);
  std::vector<double> ratios = {0.2, 0.4, 0.6, 0.8, 0.9, 0.99};
  for (std::size_t r = 1; r < ratios.size(); ++r) {
    const auto lo = nndr_match(a, b, ratios[r - 1]);
    const auto hi = nndr_match(a, b, ratios[r]);
    std::set<std::pair<int, int>> hi_set;
    for (const Match& m : hi) hi_set.insert({m.index_a, m.index_b});
    for (const Match& m : lo) CHECK(hi_set.count({m.index_a, m.index_b}) == 1);
    CHECK(lo.size() <= hi.size());
  }
}

TEST_CASE("family mismatch throws") {
  const auto a = make_frame(FeatureFamily::kSurf, {Eigen::VectorXf::Zero(64)});
  const auto b = make_frame(FeatureFamily::kKaze, {Eigen::VectorXf::Zero(64)});
  CHECK_THROWS_AS(nndr_match(a, b, 0.8), FamilyMismatch);
  CHECK_THROWS_AS(guided_match(a, b, Pose(), default_camera(), 20.0), FamilyMismatch);
}

namespace {

// Two views of one synthetic point cloud with distinctive descriptors; the
// planted correspondence is index-aligned.
struct GuidedFixture {
  FeatureFrame a;
  FeatureFrame b;
  Pose truth;
  int covisible = 0;
};

GuidedFixture make_guided_fixture(Rng& rng, double pixel_error) {
  GuidedFixture fx;
  fx.truth = random_pose(rng, 0.15, 0.3);
  const CameraIntrinsics k = default_camera();
  const auto points = testutil::random_visible_points(rng, fx.truth, k, 60);
  std::vector<Eigen::VectorXf> descs;
  for (std::size_t i = 0; i < points.size(); ++i) descs.push_back(random_unit_descriptor(rng, 64));

  std::vector<Eigen::VectorXf> da, db;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d& p = points[i];
    const Eigen::Vector3d q = transform_point(fx.truth, p);
    fx.a.keypoints.push_back({project(p, k), p.z()});
    Eigen::Vector2d zb = project(q, k);
    if (pixel_error > 0.0) {
      zb.x() += rng.normal(0.0, pixel_error);
      zb.y() += rng.normal(0.0, pixel_error);
    }
    fx.b.keypoints.push_back({zb, q.z()});
    da.push_back(descs[i]);
    db.push_back(descs[i]);
    ++fx.covisible;
  }
  fx.a.family = fx.b.family = FeatureFamily::kSurf;
  fx.a.descriptors.resize(64, static_cast<int>(da.size()));
  fx.b.descriptors.resize(64, static_cast<int>(db.size()));
  for (std::size_t i = 0; i < da.size(); ++i) {
    fx.a.descriptors.col(static_cast<int>(i)) = da[i];
    fx.b.descriptors.col(static_cast<int>(i)) = db[i];
    fx.a.word_ids.push_back(kNoWord);
    fx.b.word_ids.push_back(kNoWord);
  }
  return fx;
}

}  // namespace

TEST_CASE("guided match finds every co-visible landmark under the true transform") {
  Rng rng(127);
  const auto fx = make_guided_fixture(rng, 0.0);
  const auto matches = guided_match(fx.a, fx.b, fx.truth, default_camera(), 20.0);
  CHECK(static_cast<int>(matches.size()) == fx.covisible);
  for (const Match& m : matches) CHECK(m.index_a == m.index_b);
}

TEST_CASE("guided match with zero window is empty") {
  Rng rng(131);
  const auto fx = make_guided_fixture(rng, 0.0);
  CHECK(guided_match(fx.a, fx.b, fx.truth, default_camera(), 0.0).empty());
}

TEST_CASE("guided match skips features without depth") {
  Rng rng(137);
  auto fx = make_guided_fixture(rng, 0.0);
  for (auto& kp : fx.a.keypoints) kp.depth = 0.0;
  CHECK(guided_match(fx.a, fx.b, fx.truth, default_camera(), 20.0).empty());
}

TEST_CASE("guided match under a sloppy transform recovers the nndr true positives") {
  Rng rng(139);
  for (int inst = 0; inst < 10; ++inst) {
    auto fx = make_guided_fixture(rng, 0.0);
    // corrupt the transform until the mean projection error is around 5 px
    Vec6<double> d = Vec6<double>::Zero();
    d(1) = 0.004;
    d(3) = 0.02;
    const Pose sloppy = compose(se3_exp(d), fx.truth);

    const auto guided = guided_match(fx.a, fx.b, sloppy, default_camera(), 20.0);
    const auto global = nndr_match(fx.a, fx.b, 0.8);
    std::set<std::pair<int, int>> guided_set;
    for (const Match& m : guided) guided_set.insert({m.index_a, m.index_b});
    for (const Match& m : global) {
      if (m.index_a == m.index_b) {  // true positives only
        CHECK(guided_set.count({m.index_a, m.index_b}) == 1);
      }
    }
    CHECK(guided.size() >= global.size());
  }
}
