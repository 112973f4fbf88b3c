#pragma once

#include <stdexcept>
#include <string>

namespace msslam {

// Contract violations throw; recoverable algorithmic outcomes (PnP consensus
// failure, registration rejection, ...) are reported through result statuses.

struct NonPositiveDepth : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FamilyMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TooFewCorrespondences : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnknownNode : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonPositiveDefiniteInformation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyVocabulary : std::logic_error {
  using std::logic_error::logic_error;
};

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MissingLogs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace msslam
