#include "msslam/descriptor.hpp"

namespace msslam {

bool family_from_name(const std::string& name, FeatureFamily& out) {
  for (FeatureFamily f : all_families()) {
    if (name == family_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

std::vector<FeatureFamily> all_families() {
  return {FeatureFamily::kSurf,  FeatureFamily::kSift,  FeatureFamily::kBrief,
          FeatureFamily::kBrisk, FeatureFamily::kKaze,  FeatureFamily::kFreak,
          FeatureFamily::kDaisy, FeatureFamily::kSuperPoint};
}

}  // namespace msslam
