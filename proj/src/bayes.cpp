#include "msslam/bayes.hpp"

#include <algorithm>
#include <cmath>

namespace msslam {

double Belief::probability(NodeId node) const {
  const auto it = std::lower_bound(p_loop.begin(), p_loop.end(), node,
                                   [](const auto& a, NodeId b) { return a.first < b; });
  return (it != p_loop.end() && it->first == node) ? it->second : 0.0;
}

double Belief::total() const {
  double t = p_new;
  for (const auto& [node, p] : p_loop) {
    (void)node;
    t += p;
  }
  return t;
}

NormalizedLikelihood normalize_likelihood(const Belief& belief, const LikelihoodVector& lik,
                                          const BayesConfig& cfg) {
  NormalizedLikelihood out;
  out.node_values.assign(belief.p_loop.size(), 1.0);

  double sum = 0.0, sum_sq = 0.0;
  int nonzero = 0;
  std::vector<double> scores(belief.p_loop.size(), 0.0);
  for (std::size_t i = 0; i < belief.p_loop.size(); ++i) {
    const double s = lik.score(belief.p_loop[i].first);
    scores[i] = s;
    if (s > 0.0) {
      sum += s;
      sum_sq += s * s;
      ++nonzero;
    }
  }
  if (nonzero == 0) {
    // no shared words anywhere: strongest possible new-place evidence
    out.new_value = 1.0 + cfg.likelihood_cap;
    return out;
  }
  const double mean = sum / nonzero;
  const double var = std::max(0.0, sum_sq / nonzero - mean * mean);
  const double sigma = std::sqrt(var);
  if (sigma < 1e-12) {
    // zero spread carries no signal either way
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] <= 0.0) continue;
    out.node_values[i] = 1.0 + std::min(cfg.likelihood_cap, std::max(0.0, (scores[i] - mean) / sigma));
  }
  out.new_value = 1.0 + std::min(cfg.likelihood_cap, mean / sigma);
  return out;
}

Belief add_nodes(const Belief& belief, const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return belief;
  Belief out = belief;
  const double share = belief.p_new / static_cast<double>(nodes.size() + 1);
  out.p_new = share;
  for (NodeId n : nodes) {
    out.p_loop.push_back({n, share});
  }
  std::sort(out.p_loop.begin(), out.p_loop.end());
  return out;
}

Belief bayes_update(const Belief& belief, const LikelihoodVector& lik, const Adjacency& neighbors,
                    const BayesConfig& cfg) {
  const std::size_t n = belief.p_loop.size();
  Belief out = belief;

  // --- prediction ---
  std::vector<double> pred(n, 0.0);
  double pred_new = belief.p_new;
  if (!cfg.identity_transition && n > 0) {
    // index of each node in the sorted domain
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[belief.p_loop[i].first] = i;

    // restrict adjacency to the domain, find the max degree
    std::vector<std::vector<std::size_t>> adj(n);
    std::size_t max_deg = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = neighbors.find(belief.p_loop[i].first);
      if (it == neighbors.end()) continue;
      for (NodeId nb : it->second) {
        const auto jt = index.find(nb);
        if (jt != index.end() && jt->second != i) adj[i].push_back(jt->second);
      }
      max_deg = std::max(max_deg, adj[i].size());
    }

    // lazy symmetric walk: off-diagonal weight 1/(2*max_deg)
    const double w = cfg.neighbor_diffusion / (2.0 * static_cast<double>(max_deg));
    const double mix = cfg.new_place_mix / static_cast<double>(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      double stay = belief.p_loop[i].second * (1.0 - w * static_cast<double>(adj[i].size()));
      for (std::size_t j : adj[i]) stay += belief.p_loop[j].second * w;
      pred[i] = (1.0 - cfg.new_place_mix) * stay + mix;
    }
    pred_new = (1.0 - cfg.new_place_mix) * belief.p_new + mix;
  } else {
    for (std::size_t i = 0; i < n; ++i) pred[i] = belief.p_loop[i].second;
  }

  // --- correction ---
  const NormalizedLikelihood norm = normalize_likelihood(belief, lik, cfg);
  double z = pred_new * norm.new_value;
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] *= norm.node_values[i];
    z += pred[i];
  }
  if (z <= 0.0) return out;  // degenerate, keep previous belief
  out.p_new = pred_new * norm.new_value / z;
  for (std::size_t i = 0; i < n; ++i) out.p_loop[i].second = pred[i] / z;
  return out;
}

std::optional<NodeId> check_hypothesis(const Belief& belief, double threshold,
                                       const Adjacency& neighbors) {
  if (belief.p_loop.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < belief.p_loop.size(); ++i) {
    if (belief.p_loop[i].second > belief.p_loop[best].second) best = i;
  }
  const NodeId node = belief.p_loop[best].first;
  double pooled = belief.p_loop[best].second;
  const auto it = neighbors.find(node);
  if (it != neighbors.end()) {
    for (NodeId nb : it->second) pooled += belief.probability(nb);
  }
  if (pooled >= threshold) return node;
  return std::nullopt;
}

}  // namespace msslam
