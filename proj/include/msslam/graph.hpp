#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msslam/bayes.hpp"
#include "msslam/descriptor.hpp"
#include "msslam/se3.hpp"
#include "msslam/vocabulary.hpp"

namespace msslam {

enum class LinkKind : std::uint8_t { kOdometry, kLoopClosure, kProximity };

const char* link_kind_name(LinkKind kind);

struct Link {
  NodeId from_id = -1;
  NodeId to_id = -1;
  LinkKind kind = LinkKind::kOdometry;
  Pose transform;                                    // relative pose of to in from's frame
  Mat6<double> information = Mat6<double>::Identity();
};

struct MapNode {
  NodeId node_id = -1;
  int session_id = -1;
  double timestamp = 0.0;
  Pose odom_pose;  // session-local odometry frame
  Pose opt_pose;   // global optimized frame
  FeatureFrame frame;
};

struct SessionInfo {
  int session_id = -1;
  double start_time_min = 0.0;
  FeatureFamily family = FeatureFamily::kSurf;
  bool anchored = false;          // aligned into the global frame
  std::int64_t anchor_frame_index = -1;  // frame at which the first inter-session closure landed
  NodeId first_node = -1;
  int node_count = 0;
};

struct OptimizeConfig {
  int max_iterations = 50;
  double relative_tolerance = 1e-9;
  double lambda_init = 1e-3;
  double lambda_scale = 10.0;
  bool use_huber = false;
  double huber_delta = 1.0;
};

struct OptimizeResult {
  int iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // cost after each accepted step
  std::vector<NodeId> unreached;         // nodes not connected to the anchor; left untouched
};

// Pose graph over one or more sessions sharing a vocabulary. The first node
// of the oldest session is the gauge anchor; optimization pulls every
// connected session into its coordinate frame.
class MultiSessionMap {
 public:
  MultiSessionMap() = default;
  explicit MultiSessionMap(FeatureFamily family, VocabularyConfig vocab_cfg = {});

  int add_session(double start_time_min, FeatureFamily family);
  const SessionInfo& session(int id) const;
  SessionInfo& session(int id);
  const std::vector<SessionInfo>& sessions() const { return sessions_; }

  // Appends a node; opt_pose defaults to the session-internal dead-reckoned
  // chain (first node of a session starts at its odometry pose).
  NodeId add_node(int session_id, double timestamp, const Pose& odom_pose, FeatureFrame frame,
                  const std::optional<Pose>& opt_pose = {});
  void add_link(const Link& link);

  bool has_node(NodeId id) const;
  const MapNode& node(NodeId id) const;
  MapNode& node(NodeId id);
  const std::vector<MapNode>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  std::size_t node_count() const { return nodes_.size(); }

  Vocabulary& vocabulary() { return vocabulary_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }

  // Undirected neighbor lists over all links.
  Adjacency adjacency() const;

  NodeId anchor_node() const;

  // Rigidly moves every opt pose of one session: X -> g * X.
  void apply_rigid_alignment(int session_id, const Pose& g);

  // Damped Gauss-Newton on the se3 tangents of all anchor-connected nodes,
  // minimizing sum_links ||log(T^-1 * X_from^-1 * X_to)||^2_information.
  OptimizeResult optimize(const OptimizeConfig& cfg = {});

 private:
  std::vector<SessionInfo> sessions_;
  std::vector<MapNode> nodes_;
  std::vector<Link> links_;
  Vocabulary vocabulary_;

  friend struct MapSerializer;
};

}  // namespace msslam
