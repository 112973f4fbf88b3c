#pragma once

#include <map>
#include <optional>
#include <vector>

#include "msslam/vocabulary.hpp"

namespace msslam {

// Neighbor lists keyed by node id (pose-graph adjacency).
using Adjacency = std::map<NodeId, std::vector<NodeId>>;

struct BayesConfig {
  // Mass mixed uniformly across the whole domain each step; the remainder
  // diffuses over pose-graph neighborhoods. The transition operator is
  // symmetric and doubly stochastic, so a uniform belief is a fixed point.
  double new_place_mix = 0.1;
  // Fraction of the lazy-walk budget sent to graph neighbors.
  double neighbor_diffusion = 0.2;
  bool identity_transition = false;
  double likelihood_cap = 9.0;  // normalized likelihoods live in [1, 1 + cap]
  double detection_threshold = 0.15;
};

// Posterior over map nodes plus the new-location event.
struct Belief {
  double p_new = 1.0;
  std::vector<std::pair<NodeId, double>> p_loop;  // sorted by node id

  double probability(NodeId node) const;
  double total() const;
  std::size_t size() const { return p_loop.size(); }
};

// Normalized likelihood values for the filter: node scores standardized
// against the mean/std of the nonzero scores, the new-location event scored
// by the mean-to-std ratio.
struct NormalizedLikelihood {
  std::vector<double> node_values;  // parallel to belief.p_loop
  double new_value = 1.0;
};

NormalizedLikelihood normalize_likelihood(const Belief& belief, const LikelihoodVector& lik,
                                          const BayesConfig& cfg);

// Grows the belief domain: the new-location mass is split equally between
// the entering nodes and the event itself.
Belief add_nodes(const Belief& belief, const std::vector<NodeId>& nodes);

// One prediction + correction step.
Belief bayes_update(const Belief& belief, const LikelihoodVector& lik, const Adjacency& neighbors,
                    const BayesConfig& cfg);

// Returns the argmax node when its posterior pooled with its direct graph
// neighbors reaches the threshold.
std::optional<NodeId> check_hypothesis(const Belief& belief, double threshold,
                                       const Adjacency& neighbors);

}  // namespace msslam
