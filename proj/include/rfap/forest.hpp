#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfap/common.hpp"

namespace rfap::urf {

/// Row-major sample matrix (rows = samples, cols = features).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct TreeNode {
  int feature = -1;        // split feature; -1 marks a terminal
  double threshold = 0.0;  // go left when value < threshold
  int left = -1;
  int right = -1;
  int depth = 1;           // k_b; root is 1
  std::string id;          // digit string of length d_b - 1, set by index_tree

  bool is_terminal() const { return left < 0; }
};

/// One grown tree. d_b (max_depth) is the realised maximum depth; terminal
/// ids are digit strings over {0,1,2} of length d_b - 1 following the
/// parent + {1,2} * 10^(d_b - k) child recurrence, rendered positionally.
struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int max_depth = 1;            // d_b

  int digit_length() const { return max_depth - 1; }  // L_b
  /// Index of the terminal reached by routing `point` from the root.
  int route(std::span<const double> point) const;
};

struct Forest {
  std::vector<Tree> trees;
  std::size_t feature_dim = 0;
  std::vector<std::uint64_t> tree_seeds;
  std::size_t trivial_trees = 0;  // single-node trees (flagged, similarity 1)

  std::size_t size() const { return trees.size(); }
};

/// Per-sample activation pattern: entry b is the terminal digit string in
/// tree b, zero-padded to that tree's digit length.
struct RFAPVector {
  std::vector<std::string> entries;
};

struct UrfParams {
  int max_depth = 12;  // growth cap; the realised d_b may be smaller
  int min_leaf = 1;
  int mtry = 0;        // 0 = ceil(sqrt(F))
  std::uint64_t seed = 0;
};

/// Synthetic contrast data for Breiman-style unsupervised forests: each
/// column is resampled independently (with replacement) from that feature's
/// empirical marginal, destroying the joint structure.
Matrix synthesize_contrast(const Matrix& features, std::uint64_t seed);

/// Trains a binary random forest separating the real samples (class 0) from
/// marginal-resampled contrast samples (class 1): per-tree bootstrap over
/// the pooled data, Gini-gain splits over mtry random features, midpoint
/// thresholds, growth capped by max_depth / min_leaf. Trees come back
/// indexed. All-constant features yield single-node trees, valid but
/// counted in `trivial_trees`.
Forest train_urf(const Matrix& features, int n_trees, const UrfParams& params, int threads = 1);

/// Assigns node ids per the child recurrence: root 0 at depth 1, left child
/// adds 1 and right child 2 at the digit position for its depth. Sets the
/// realised d_b first; any parent-before-child traversal yields this result.
void index_tree(Tree& tree);

RFAPVector rfap_encode(const Forest& forest, std::span<const double> point);

/// 1 - mean over trees of the fraction of differing digit positions.
/// Zero-length entries (single-node trees) contribute similarity 1.
double rfap_similarity(const RFAPVector& a, const RFAPVector& b);

/// W x W matrix of pairwise RFAP similarities; symmetric, unit diagonal.
Matrix similarity_matrix(const Forest& forest, const Matrix& batch, int threads = 1);

/// Independent verification route: walks both root-to-terminal paths and
/// compares the branch direction taken at each level 2..d_b (none, once a
/// path has stopped at a terminal, which matches the padded zeros). Must
/// equal the digit-Hamming computation exactly.
double path_similarity_oracle(const Tree& tree, std::span<const double> point_a,
                              std::span<const double> point_b);

std::string forest_to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);

}  // namespace rfap::urf
