#include "msslam/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "msslam/errors.hpp"

namespace msslam {

namespace detail {

// Exact 2-NN kd-tree over descriptor prototypes. Candidate distances use the
// same per-pair expression as the linear scan, and ties resolve by word id,
// so both backends return identical answers.
class KdTree {
 public:
  KdTree(const Eigen::MatrixXf& points, int count) {
    indices_.resize(static_cast<std::size_t>(count));
    std::iota(indices_.begin(), indices_.end(), 0);
    if (count > 0) root_ = build(points, 0, count);
  }

  struct Best2 {
    int idx1 = -1, idx2 = -1;
    float d1 = std::numeric_limits<float>::infinity();
    float d2 = std::numeric_limits<float>::infinity();

    void offer(int idx, float d) {
      if (d < d1 || (d == d1 && idx < idx1)) {
        idx2 = idx1;
        d2 = d1;
        idx1 = idx;
        d1 = d;
      } else if (idx != idx1 && (d < d2 || (d == d2 && idx < idx2))) {
        idx2 = idx;
        d2 = d;
      }
    }
  };

  void search(const Eigen::MatrixXf& points, const Eigen::VectorXf& query, Best2& best) const {
    if (root_ >= 0) search_node(root_, points, query, best);
  }

 private:
  struct Node {
    int split_dim = -1;
    float split_val = 0.0f;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf payload into indices_
  };

  int build(const Eigen::MatrixXf& points, int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    // split on the dimension with the largest spread
    const int dim = static_cast<int>(points.rows());
    int best_dim = 0;
    float best_spread = -1.0f;
    for (int d = 0; d < dim; ++d) {
      float lo = std::numeric_limits<float>::infinity(), hi = -lo;
      for (int i = begin; i < end; ++i) {
        const float v = points(d, indices_[static_cast<std::size_t>(i)]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = d;
      }
    }
    const int mid = begin + (end - begin) / 2;
    std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                     [&](int a, int b) {
                       const float va = points(best_dim, a), vb = points(best_dim, b);
                       return va < vb || (va == vb && a < b);
                     });
    node.split_dim = best_dim;
    node.split_val = points(best_dim, indices_[static_cast<std::size_t>(mid)]);
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(points, begin, mid);
    const int right = build(points, mid, end);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }

  void search_node(int id, const Eigen::MatrixXf& points, const Eigen::VectorXf& query,
                   Best2& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.split_dim < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = indices_[static_cast<std::size_t>(i)];
        best.offer(idx, (points.col(idx) - query).squaredNorm());
      }
      return;
    }
    const float diff = query(node.split_dim) - node.split_val;
    const int near = diff < 0.0f ? node.left : node.right;
    const int far = diff < 0.0f ? node.right : node.left;
    search_node(near, points, query, best);
    // visit the far side unless it provably cannot improve (ties included)
    if (diff * diff <= best.d2) search_node(far, points, query, best);
  }

  static constexpr int kLeafSize = 8;
  std::vector<int> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace detail

double LikelihoodVector::score(NodeId node) const {
  const auto it = std::lower_bound(scores.begin(), scores.end(), node,
                                   [](const auto& a, NodeId b) { return a.first < b; });
  return (it != scores.end() && it->first == node) ? it->second : 0.0;
}

Vocabulary::Vocabulary(FeatureFamily family, VocabularyConfig cfg)
    : family_(family), cfg_(cfg) {
  prototypes_.resize(family_traits(family).dimension, 0);
}

Vocabulary::Vocabulary(const Vocabulary& other)
    : family_(other.family_),
      cfg_(other.cfg_),
      words_(other.words_),
      prototypes_(other.prototypes_),
      node_word_counts_(other.node_word_counts_),
      tree_(nullptr),
      tree_size_(0) {}

Vocabulary& Vocabulary::operator=(const Vocabulary& other) {
  if (this != &other) {
    family_ = other.family_;
    cfg_ = other.cfg_;
    words_ = other.words_;
    prototypes_ = other.prototypes_;
    node_word_counts_ = other.node_word_counts_;
    tree_.reset();
    tree_size_ = 0;
  }
  return *this;
}

Vocabulary::Vocabulary(Vocabulary&&) noexcept = default;
Vocabulary& Vocabulary::operator=(Vocabulary&&) noexcept = default;
Vocabulary::~Vocabulary() = default;

Vocabulary::TwoNearest Vocabulary::find_two_nearest(const Eigen::VectorXf& query) const {
  detail::KdTree::Best2 best;
  const int n = word_count();
  const bool use_tree = tree_ && cfg_.backend == NnBackend::kKdTree;
  if (use_tree) {
    tree_->search(prototypes_, query, best);
    for (int i = tree_size_; i < n; ++i) {
      best.offer(i, (prototypes_.col(i) - query).squaredNorm());
    }
  } else {
    for (int i = 0; i < n; ++i) {
      best.offer(i, (prototypes_.col(i) - query).squaredNorm());
    }
  }
  TwoNearest out;
  out.first = best.idx1 < 0 ? kNoWord : static_cast<WordId>(best.idx1);
  out.second = best.idx2 < 0 ? kNoWord : static_cast<WordId>(best.idx2);
  out.first_sq = best.d1;
  out.second_sq = best.d2;
  return out;
}

WordId Vocabulary::add_word(const Eigen::VectorXf& prototype) {
  const WordId id = static_cast<WordId>(words_.size());
  VisualWord w;
  w.word_id = id;
  w.prototype = Descriptor{family_, prototype};
  words_.push_back(std::move(w));
  if (prototypes_.cols() < word_count()) {
    Eigen::MatrixXf grown(prototypes_.rows(), std::max<int>(64, 2 * static_cast<int>(prototypes_.cols())));
    grown.leftCols(prototypes_.cols()) = prototypes_;
    prototypes_ = std::move(grown);
  }
  prototypes_.col(id) = prototype;
  return id;
}

void Vocabulary::maybe_rebuild_index() {
  if (cfg_.backend != NnBackend::kKdTree || family_traits(family_).binary) return;
  if (word_count() - tree_size_ >= cfg_.kdtree_rebuild_interval) {
    tree_ = std::make_unique<detail::KdTree>(prototypes_, word_count());
    tree_size_ = word_count();
  }
}

void Vocabulary::quantize_frame(FeatureFrame& f, NodeId node_id, bool indexing) {
  if (f.family != family_) {
    throw FamilyMismatch("quantize_frame: frame family differs from vocabulary family");
  }
  const bool binary = family_traits(family_).binary;
  const float ratio = static_cast<float>(cfg_.nndr_ratio);
  f.word_ids.assign(static_cast<std::size_t>(f.count()), kNoWord);

  std::vector<std::pair<WordId, int>> assigned;  // word -> count for this node
  for (int i = 0; i < f.count(); ++i) {
    const Eigen::VectorXf query = f.descriptors.col(i);
    const TwoNearest nn = find_two_nearest(query);
    WordId assigned_id = kNoWord;
    if (nn.first != kNoWord && nn.second != kNoWord) {
      const float d1 = binary ? nn.first_sq : std::sqrt(nn.first_sq);
      const float d2 = binary ? nn.second_sq : std::sqrt(nn.second_sq);
      if (d1 < ratio * d2) assigned_id = nn.first;
    }
    if (assigned_id == kNoWord && indexing) {
      assigned_id = add_word(query);
    }
    f.word_ids[static_cast<std::size_t>(i)] = assigned_id;
    if (indexing && assigned_id != kNoWord) {
      assigned.push_back({assigned_id, 1});
    }
  }

  if (indexing) {
    std::sort(assigned.begin(), assigned.end());
    for (std::size_t i = 0; i < assigned.size();) {
      std::size_t j = i;
      int count = 0;
      while (j < assigned.size() && assigned[j].first == assigned[i].first) {
        count += assigned[j].second;
        ++j;
      }
      auto& postings = words_[static_cast<std::size_t>(assigned[i].first)].postings;
      if (!postings.empty() && postings.back().first == node_id) {
        postings.back().second += count;
      } else {
        postings.push_back({node_id, count});
      }
      i = j;
    }
    node_word_counts_[node_id] += static_cast<int>(assigned.size());
    maybe_rebuild_index();
  }
}

LikelihoodVector Vocabulary::compute_likelihood(const FeatureFrame& query) const {
  if (total_indexed_nodes() == 0 || words_.empty()) {
    throw EmptyVocabulary("compute_likelihood: vocabulary has no indexed nodes");
  }
  const double n_total = static_cast<double>(total_indexed_nodes());

  std::vector<WordId> distinct;
  distinct.reserve(query.word_ids.size());
  for (WordId w : query.word_ids) {
    if (w != kNoWord) distinct.push_back(w);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::map<NodeId, double> acc;
  for (WordId w : distinct) {
    const auto& postings = words_[static_cast<std::size_t>(w)].postings;
    if (postings.empty()) continue;
    const double idf = std::log(n_total / static_cast<double>(postings.size()));
    if (idf <= 0.0) continue;  // a word present in every node carries no signal
    for (const auto& [node, count] : postings) {
      const auto it = node_word_counts_.find(node);
      const double n_i = it == node_word_counts_.end() ? 0.0 : static_cast<double>(it->second);
      if (n_i <= 0.0) continue;
      acc[node] += (static_cast<double>(count) / n_i) * idf;
    }
  }

  LikelihoodVector out;
  out.scores.assign(acc.begin(), acc.end());
  return out;
}

Vocabulary Vocabulary::restore(FeatureFamily family, VocabularyConfig cfg,
                               std::vector<VisualWord> words,
                               std::map<NodeId, int> node_word_counts) {
  Vocabulary v(family, cfg);
  v.words_ = std::move(words);
  v.node_word_counts_ = std::move(node_word_counts);
  v.prototypes_.resize(family_traits(family).dimension, std::max<int>(1, v.word_count()));
  for (int i = 0; i < v.word_count(); ++i) {
    v.prototypes_.col(i) = v.words_[static_cast<std::size_t>(i)].prototype.values;
  }
  v.maybe_rebuild_index();
  return v;
}

}  // namespace msslam
