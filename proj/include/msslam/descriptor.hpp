#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msslam/errors.hpp"

namespace msslam {

// Emulated descriptor families. Dimensions and real/binary storage follow the
// usual extractor outputs (binary ones are BRIEF, BRISK and FREAK).
enum class FeatureFamily : std::uint8_t {
  kSurf,
  kSift,
  kBrief,
  kBrisk,
  kKaze,
  kFreak,
  kDaisy,
  kSuperPoint,
};

struct FamilyTraits {
  int dimension;
  bool binary;
};

inline FamilyTraits family_traits(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::kSurf: return {64, false};
    case FeatureFamily::kSift: return {128, false};
    case FeatureFamily::kBrief: return {32, true};
    case FeatureFamily::kBrisk: return {64, true};
    case FeatureFamily::kKaze: return {64, false};
    case FeatureFamily::kFreak: return {64, true};
    case FeatureFamily::kDaisy: return {200, false};
    case FeatureFamily::kSuperPoint: return {256, false};
  }
  return {0, false};
}

inline const char* family_name(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::kSurf: return "SU";
    case FeatureFamily::kSift: return "SI";
    case FeatureFamily::kBrief: return "BF";
    case FeatureFamily::kBrisk: return "BK";
    case FeatureFamily::kKaze: return "KA";
    case FeatureFamily::kFreak: return "FR";
    case FeatureFamily::kDaisy: return "DY";
    case FeatureFamily::kSuperPoint: return "SP";
  }
  return "??";
}

bool family_from_name(const std::string& name, FeatureFamily& out);

std::vector<FeatureFamily> all_families();

struct Descriptor {
  FeatureFamily family = FeatureFamily::kSurf;
  Eigen::VectorXf values;

  int dimension() const { return static_cast<int>(values.size()); }
};

// Distance in descriptor space: Euclidean for real-valued families, Hamming
// for binary ones. For 0/1 vectors the squared Euclidean norm *is* the
// Hamming distance, so both share one code path.
inline float squared_distance(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  return (a - b).squaredNorm();
}

inline float descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.family != b.family || a.values.size() != b.values.size()) {
    throw FamilyMismatch("descriptor_distance: family or dimension mismatch");
  }
  const float sq = squared_distance(a.values, b.values);
  return family_traits(a.family).binary ? sq : std::sqrt(sq);
}

struct Keypoint {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;  // meters; 0 means unknown
};

constexpr std::int32_t kNoWord = -1;

// One camera observation: keypoints, descriptors (one per column) and the
// quantized word ids, all parallel.
struct FeatureFrame {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  FeatureFamily family = FeatureFamily::kSurf;
  std::vector<Keypoint> keypoints;
  Eigen::MatrixXf descriptors;  // dimension x count
  std::vector<std::int32_t> word_ids;

  int count() const { return static_cast<int>(keypoints.size()); }

  Descriptor descriptor(int i) const { return {family, descriptors.col(i)}; }

  bool consistent() const {
    return descriptors.cols() == count() &&
           word_ids.size() == static_cast<std::size_t>(count()) &&
           (count() == 0 || descriptors.rows() == family_traits(family).dimension);
  }
};

struct Match {
  int index_a = -1;
  int index_b = -1;
  float distance = 0.0f;
};

}  // namespace msslam
