#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "msslam/descriptor.hpp"

namespace msslam {

using NodeId = std::int64_t;
using WordId = std::int32_t;

struct VisualWord {
  WordId word_id = kNoWord;
  Descriptor prototype;
  std::vector<std::pair<NodeId, int>> postings;  // sorted by node id, counts >= 1
};

// Similarity scores per node, zero entries omitted.
struct LikelihoodVector {
  std::vector<std::pair<NodeId, double>> scores;  // sorted by node id

  double score(NodeId node) const;
  bool empty() const { return scores.empty(); }
};

enum class NnBackend {
  kExact,   // linear scan, reference backend
  kKdTree,  // exact kd-tree with periodic rebuild; binary families fall back to scan
};

struct VocabularyConfig {
  double nndr_ratio = 0.8;
  NnBackend backend = NnBackend::kKdTree;
  int kdtree_rebuild_interval = 200;
};

namespace detail {
class KdTree;
}

// Incremental visual-word vocabulary with an inverted index. Quantization
// follows the distance-ratio rule: a descriptor joins its nearest word when
// the two nearest prototypes are distinct enough, otherwise it becomes a new
// word (mapping) or stays unassigned (localization query).
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(FeatureFamily::kSurf, {}) {}
  explicit Vocabulary(FeatureFamily family, VocabularyConfig cfg = {});
  Vocabulary(const Vocabulary& other);
  Vocabulary& operator=(const Vocabulary& other);
  Vocabulary(Vocabulary&&) noexcept;
  Vocabulary& operator=(Vocabulary&&) noexcept;
  ~Vocabulary();

  FeatureFamily family() const { return family_; }
  const VocabularyConfig& config() const { return cfg_; }
  int word_count() const { return static_cast<int>(words_.size()); }
  const VisualWord& word(WordId id) const { return words_[static_cast<std::size_t>(id)]; }
  const std::vector<VisualWord>& words() const { return words_; }
  std::int64_t total_indexed_nodes() const { return static_cast<std::int64_t>(node_word_counts_.size()); }
  const std::map<NodeId, int>& node_word_counts() const { return node_word_counts_; }

  // Writes word ids into f (kNoWord for unassigned query descriptors). With
  // indexing enabled the vocabulary grows and postings are recorded under
  // node_id; otherwise the vocabulary is left untouched.
  void quantize_frame(FeatureFrame& f, NodeId node_id, bool indexing);

  // tf-idf score over the inverted index; the query must be quantized.
  LikelihoodVector compute_likelihood(const FeatureFrame& query) const;

  // Rebuilds a vocabulary from serialized state.
  static Vocabulary restore(FeatureFamily family, VocabularyConfig cfg,
                            std::vector<VisualWord> words, std::map<NodeId, int> node_word_counts);

 private:
  struct TwoNearest {
    WordId first = kNoWord;
    WordId second = kNoWord;
    float first_sq = 0.0f;
    float second_sq = 0.0f;
  };

  TwoNearest find_two_nearest(const Eigen::VectorXf& query) const;
  WordId add_word(const Eigen::VectorXf& prototype);
  void maybe_rebuild_index();

  FeatureFamily family_ = FeatureFamily::kSurf;
  VocabularyConfig cfg_;
  std::vector<VisualWord> words_;
  Eigen::MatrixXf prototypes_;  // dimension x capacity, first word_count() columns valid
  std::map<NodeId, int> node_word_counts_;
  std::unique_ptr<detail::KdTree> tree_;
  int tree_size_ = 0;  // words covered by the tree; the rest are scanned
};

}  // namespace msslam
