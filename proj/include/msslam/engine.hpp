#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "msslam/bayes.hpp"
#include "msslam/graph.hpp"
#include "msslam/registration.hpp"
#include "msslam/synthworld.hpp"

namespace msslam {

enum class EngineMode : std::uint8_t { kMapping, kLocalization };

enum class FrameOutcome : std::uint8_t { kLoopClosure, kProximity, kFailed };

const char* frame_outcome_name(FrameOutcome outcome);

struct EngineConfig {
  CameraIntrinsics camera;
  RegistrationConfig registration;
  BayesConfig bayes;
  VocabularyConfig vocabulary;
  OptimizeConfig optimize;
  double proximity_radius = 1.0;     // meters
  int proximity_candidates = 3;
  int recent_window = 10;            // newest nodes kept out of detection
  int lost_after_failures = 10;
  double lost_radius_growth = 0.02;  // meters of search radius per unlocalized frame
  double max_lost_radius = 4.0;
  bool optimize_on_closure = true;
  double closure_information_rot = 4e4;
  double closure_information_trans = 4e4;
  OdometryNoise odometry_noise;      // odometry link information model
  std::uint64_t seed = 0;
};

// Per-frame record. In localization mode this is the event log row; in
// mapping mode it additionally carries the created node.
struct FrameEvent {
  double timestamp = 0.0;
  FrameOutcome outcome = FrameOutcome::kFailed;
  RegistrationStage failed_stage = RegistrationStage::kNone;
  bool no_candidates = false;     // nothing to match against
  NodeId matched_node = -1;
  int matched_session = -1;
  Pose correction;                // predicted^-1 * corrected
  double jump_mm = 0.0;
  double inlier_pct = 0.0;
  NodeId node_id = -1;            // mapping only
  Pose estimated_pose;            // global estimate after the frame

  bool localized() const { return outcome != FrameOutcome::kFailed; }
};

struct SessionSummary {
  int session_id = -1;
  bool anchored = false;
  std::int64_t anchor_frame_index = -1;
  int frames = 0;
  int localized_frames = 0;
};

// Multi-session engine: owns the map, the vocabulary and the loop-closure
// belief. Mapping appends nodes and verified links; localization only tracks
// the pose and records events.
class SlamEngine {
 public:
  explicit SlamEngine(EngineConfig cfg);
  SlamEngine(EngineConfig cfg, MultiSessionMap prior_map);

  // Opens a new mapping session appended to the prior map.
  int start_session(double start_time_min, FeatureFamily family);
  // Switches to read-only localization against the current map.
  void start_localization();

  FrameEvent process_frame(const Pose& odom_pose, FeatureFrame frame, double timestamp);

  SessionSummary finish_session();

  // Nodes within the radius of the current estimate, most visually similar
  // first, truncated to the configured candidate count.
  std::vector<NodeId> detect_proximity(const Pose& current_opt_pose, const LikelihoodVector& lik,
                                       double radius) const;

  EngineMode mode() const { return mode_; }
  const MultiSessionMap& map() const { return map_; }
  MultiSessionMap&& take_map() { return std::move(map_); }
  const Belief& belief() const { return belief_; }
  const std::vector<FrameEvent>& events() const { return events_; }

 private:
  bool node_eligible(NodeId id, bool for_proximity) const;
  void rebase(const Pose& corrected, const Pose& odom);
  void recenter_belief(NodeId matched);
  FrameEvent make_failure(double timestamp, RegistrationStage stage, bool no_candidates,
                          const Pose& predicted) const;

  EngineConfig cfg_;
  MultiSessionMap map_;
  EngineMode mode_ = EngineMode::kMapping;
  Belief belief_;

  int current_session_ = -1;
  std::int64_t frame_index_ = 0;       // frames processed in the current session/run
  NodeId previous_node_ = -1;
  std::deque<NodeId> recent_nodes_;    // not yet eligible for detection
  std::vector<NodeId> pending_domain_; // matured nodes awaiting belief insertion
  bool have_reference_ = false;
  Pose last_corrected_;                // global estimate at the last correction
  Pose odom_at_corrected_;
  int frames_since_localized_ = 0;
  std::vector<FrameEvent> events_;
};

}  // namespace msslam
