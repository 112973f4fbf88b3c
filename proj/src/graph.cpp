#include "msslam/graph.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "msslam/errors.hpp"

namespace msslam {

const char* link_kind_name(LinkKind kind) {
  switch (kind) {
    case LinkKind::kOdometry: return "odometry";
    case LinkKind::kLoopClosure: return "loop_closure";
    case LinkKind::kProximity: return "proximity";
  }
  return "?";
}

MultiSessionMap::MultiSessionMap(FeatureFamily family, VocabularyConfig vocab_cfg)
    : vocabulary_(family, vocab_cfg) {}

int MultiSessionMap::add_session(double start_time_min, FeatureFamily family) {
  SessionInfo info;
  info.session_id = static_cast<int>(sessions_.size());
  info.start_time_min = start_time_min;
  info.family = family;
  info.anchored = sessions_.empty();  // the oldest session defines the global frame
  sessions_.push_back(info);
  return info.session_id;
}

const SessionInfo& MultiSessionMap::session(int id) const {
  return sessions_.at(static_cast<std::size_t>(id));
}

SessionInfo& MultiSessionMap::session(int id) {
  return sessions_.at(static_cast<std::size_t>(id));
}

NodeId MultiSessionMap::add_node(int session_id, double timestamp, const Pose& odom_pose,
                                 FeatureFrame frame, const std::optional<Pose>& opt_pose) {
  if (session_id < 0 || session_id >= static_cast<int>(sessions_.size())) {
    throw UnknownNode("add_node: unknown session");
  }
  SessionInfo& info = sessions_[static_cast<std::size_t>(session_id)];
  MapNode node;
  node.node_id = static_cast<NodeId>(nodes_.size());
  node.session_id = session_id;
  node.timestamp = timestamp;
  node.odom_pose = odom_pose;
  node.frame = std::move(frame);
  if (opt_pose) {
    node.opt_pose = *opt_pose;
  } else if (info.node_count == 0) {
    node.opt_pose = odom_pose;
  } else {
    // dead-reckon from the session's previous node
    const MapNode& prev = nodes_[static_cast<std::size_t>(node.node_id - 1)];
    node.opt_pose = compose(prev.opt_pose, compose(invert(prev.odom_pose), odom_pose));
  }
  if (info.node_count == 0) info.first_node = node.node_id;
  ++info.node_count;
  nodes_.push_back(std::move(node));
  return nodes_.back().node_id;
}

void MultiSessionMap::add_link(const Link& link) {
  if (!has_node(link.from_id) || !has_node(link.to_id)) {
    throw UnknownNode("add_link: endpoint does not exist");
  }
  if (link.kind != LinkKind::kOdometry && link.from_id == link.to_id) {
    throw InvalidParams("add_link: self-loop");
  }
  if (link.kind == LinkKind::kOdometry) {
    const MapNode& a = node(link.from_id);
    const MapNode& b = node(link.to_id);
    if (a.session_id != b.session_id || link.to_id != link.from_id + 1) {
      throw InvalidParams("add_link: odometry links connect consecutive nodes of one session");
    }
  }
  Eigen::LLT<Mat6<double>> llt(link.information);
  if (llt.info() != Eigen::Success) {
    throw NonPositiveDefiniteInformation("add_link: information matrix is not positive definite");
  }
  links_.push_back(link);
}

bool MultiSessionMap::has_node(NodeId id) const {
  return id >= 0 && id < static_cast<NodeId>(nodes_.size());
}

const MapNode& MultiSessionMap::node(NodeId id) const {
  return nodes_.at(static_cast<std::size_t>(id));
}

MapNode& MultiSessionMap::node(NodeId id) {
  return nodes_.at(static_cast<std::size_t>(id));
}

Adjacency MultiSessionMap::adjacency() const {
  Adjacency adj;
  for (const Link& l : links_) {
    adj[l.from_id].push_back(l.to_id);
    adj[l.to_id].push_back(l.from_id);
  }
  for (auto& [id, nbs] : adj) {
    (void)id;
    std::sort(nbs.begin(), nbs.end());
    nbs.erase(std::unique(nbs.begin(), nbs.end()), nbs.end());
  }
  return adj;
}

NodeId MultiSessionMap::anchor_node() const {
  if (sessions_.empty() || sessions_.front().first_node < 0) return -1;
  return sessions_.front().first_node;
}

void MultiSessionMap::apply_rigid_alignment(int session_id, const Pose& g) {
  for (MapNode& n : nodes_) {
    if (n.session_id == session_id) n.opt_pose = compose(g, n.opt_pose);
  }
}

namespace {

Vec6<double> link_residual(const Link& link, const Pose& x_from, const Pose& x_to) {
  return se3_log(compose(invert(link.transform), compose(invert(x_from), x_to)));
}

double robust_weight(double squared_norm, bool use_huber, double delta) {
  if (!use_huber) return 1.0;
  const double r = std::sqrt(squared_norm);
  return r <= delta ? 1.0 : delta / r;
}

}  // namespace

OptimizeResult MultiSessionMap::optimize(const OptimizeConfig& cfg) {
  OptimizeResult result;
  const NodeId anchor = anchor_node();
  if (anchor < 0) return result;

  // connectivity from the anchor
  const Adjacency adj = adjacency();
  std::vector<bool> reached(nodes_.size(), false);
  std::deque<NodeId> queue = {anchor};
  reached[static_cast<std::size_t>(anchor)] = true;
  while (!queue.empty()) {
    const NodeId cur = queue.front();
    queue.pop_front();
    const auto it = adj.find(cur);
    if (it == adj.end()) continue;
    for (NodeId nb : it->second) {
      if (!reached[static_cast<std::size_t>(nb)]) {
        reached[static_cast<std::size_t>(nb)] = true;
        queue.push_back(nb);
      }
    }
  }
  for (const MapNode& n : nodes_) {
    if (!reached[static_cast<std::size_t>(n.node_id)]) result.unreached.push_back(n.node_id);
  }

  // variables: reached nodes except the anchor
  std::vector<int> var_of(nodes_.size(), -1);
  std::vector<NodeId> node_of_var;
  for (const MapNode& n : nodes_) {
    if (reached[static_cast<std::size_t>(n.node_id)] && n.node_id != anchor) {
      var_of[static_cast<std::size_t>(n.node_id)] = static_cast<int>(node_of_var.size());
      node_of_var.push_back(n.node_id);
    }
  }
  std::vector<const Link*> active;
  for (const Link& l : links_) {
    if (reached[static_cast<std::size_t>(l.from_id)] && reached[static_cast<std::size_t>(l.to_id)]) {
      active.push_back(&l);
    }
  }
  if (node_of_var.empty() || active.empty()) return result;

  std::vector<Pose> state(nodes_.size());
  for (const MapNode& n : nodes_) state[static_cast<std::size_t>(n.node_id)] = n.opt_pose;

  const auto total_cost = [&](const std::vector<Pose>& poses) {
    double cost = 0.0;
    for (const Link* l : active) {
      const Vec6<double> r = link_residual(*l, poses[static_cast<std::size_t>(l->from_id)],
                                           poses[static_cast<std::size_t>(l->to_id)]);
      const double wr = r.transpose() * l->information * r;
      if (cfg.use_huber) {
        const double a = std::sqrt(std::max(0.0, wr));
        cost += a <= cfg.huber_delta ? wr : cfg.huber_delta * (2.0 * a - cfg.huber_delta);
      } else {
        cost += wr;
      }
    }
    return cost;
  };

  double cost = total_cost(state);
  result.initial_residual = cost;
  result.final_residual = cost;
  double lambda = cfg.lambda_init;
  const int dim = 6 * static_cast<int>(node_of_var.size());
  const double fd_step = 1e-7;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    result.iterations = it + 1;

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);
    std::vector<Eigen::Matrix<double, 6, 6>> block(4);

    for (const Link* l : active) {
      const int vf = var_of[static_cast<std::size_t>(l->from_id)];
      const int vt = var_of[static_cast<std::size_t>(l->to_id)];
      if (vf < 0 && vt < 0) continue;
      const Pose& xf = state[static_cast<std::size_t>(l->from_id)];
      const Pose& xt = state[static_cast<std::size_t>(l->to_id)];
      const Vec6<double> r = link_residual(*l, xf, xt);

      // central-difference Jacobians wrt right-multiplicative perturbations
      Eigen::Matrix<double, 6, 6> jf, jt;
      for (int d = 0; d < 6; ++d) {
        Vec6<double> step = Vec6<double>::Zero();
        step(d) = fd_step;
        if (vf >= 0) {
          const Vec6<double> up = link_residual(*l, compose(xf, se3_exp(step)), xt);
          step(d) = -fd_step;
          const Vec6<double> down = link_residual(*l, compose(xf, se3_exp(step)), xt);
          jf.col(d) = (up - down) / (2.0 * fd_step);
          step(d) = fd_step;
        }
        if (vt >= 0) {
          const Vec6<double> up = link_residual(*l, xf, compose(xt, se3_exp(step)));
          step(d) = -fd_step;
          const Vec6<double> down = link_residual(*l, xf, compose(xt, se3_exp(step)));
          jt.col(d) = (up - down) / (2.0 * fd_step);
        }
      }

      const double weight =
          robust_weight(r.transpose() * l->information * r, cfg.use_huber, cfg.huber_delta);
      const Mat6<double> omega = weight * l->information;
      if (vf >= 0) {
        block[0] = jf.transpose() * omega * jf;
        gradient.segment<6>(6 * vf) += jf.transpose() * omega * r;
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) triplets.emplace_back(6 * vf + a, 6 * vf + b, block[0](a, b));
      }
      if (vt >= 0) {
        block[1] = jt.transpose() * omega * jt;
        gradient.segment<6>(6 * vt) += jt.transpose() * omega * r;
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) triplets.emplace_back(6 * vt + a, 6 * vt + b, block[1](a, b));
      }
      if (vf >= 0 && vt >= 0) {
        block[2] = jf.transpose() * omega * jt;
        block[3] = block[2].transpose();
        for (int a = 0; a < 6; ++a) {
          for (int b = 0; b < 6; ++b) {
            triplets.emplace_back(6 * vf + a, 6 * vt + b, block[2](a, b));
            triplets.emplace_back(6 * vt + a, 6 * vf + b, block[3](a, b));
          }
        }
      }
    }

    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    // Marquardt damping on the diagonal
    for (int d = 0; d < dim; ++d) {
      const double diag = h.coeff(d, d);
      h.coeffRef(d, d) = diag * (1.0 + lambda) + 1e-12;
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
    bool accepted = false;
    if (solver.info() == Eigen::Success) {
      const Eigen::VectorXd delta = solver.solve(-gradient);
      if (solver.info() == Eigen::Success && delta.allFinite()) {
        std::vector<Pose> candidate = state;
        for (std::size_t v = 0; v < node_of_var.size(); ++v) {
          const NodeId id = node_of_var[v];
          candidate[static_cast<std::size_t>(id)] = compose(
              candidate[static_cast<std::size_t>(id)], se3_exp(Vec6<double>(delta.segment<6>(6 * static_cast<int>(v)))));
          candidate[static_cast<std::size_t>(id)].rotation =
              project_to_so3(candidate[static_cast<std::size_t>(id)].rotation);
        }
        const double new_cost = total_cost(candidate);
        if (new_cost < cost) {
          const double rel = (cost - new_cost) / std::max(cost, 1e-300);
          state = std::move(candidate);
          cost = new_cost;
          result.final_residual = cost;
          result.residual_history.push_back(cost);
          lambda = std::max(lambda / cfg.lambda_scale, 1e-12);
          accepted = true;
          if (rel < cfg.relative_tolerance) break;
        }
      }
    }
    if (!accepted) {
      lambda *= cfg.lambda_scale;
      if (lambda > 1e12) break;
    }
  }

  for (const MapNode& n : nodes_) {
    if (reached[static_cast<std::size_t>(n.node_id)]) {
      nodes_[static_cast<std::size_t>(n.node_id)].opt_pose = state[static_cast<std::size_t>(n.node_id)];
    }
  }
  return result;
}

}  // namespace msslam
