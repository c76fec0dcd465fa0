#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfap/forest.hpp"  // Matrix

namespace rfap::eval {

using urf::Matrix;

/// Q_pred x Q_true count matrix built from two equal-length label vectors
/// (labels may be any integers; rows/cols are indexed by distinct values in
/// order of first appearance).
struct ContingencyTable {
  Matrix counts;
  std::vector<int> pred_values;
  std::vector<int> true_values;

  static ContingencyTable build(const std::vector<int>& predicted,
                                const std::vector<int>& truth);
};

/// Unsupervised clustering accuracy: the fraction of samples matched under
/// the best one-to-one mapping between predicted clusters and ground-truth
/// classes (optimal assignment on the padded contingency table).
double hungarian_acc(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Minimum-cost perfect assignment on a square cost matrix; returns the
/// column chosen for each row. O(n^3) potential/augmenting-path method.
std::vector<int> solve_assignment(const Matrix& cost);

struct KMeansParams {
  int restarts = 5;
  int max_iter = 100;
  std::uint64_t seed = 0;
};

/// Lloyd's iterations from seeded random-sample initialisation; best of
/// `restarts` by within-cluster sum of squares. Labels are 0-based.
std::vector<int> kmeans(const Matrix& features, int q, const KMeansParams& params);

enum class SimilarityMethod { Cosine, L2, Knn, Rank };
SimilarityMethod similarity_method_from_string(const std::string& name);
std::string to_string(SimilarityMethod method);

struct AltSimilarityParams {
  int knn_k = 10;  // mutual k-nearest-neighbour size
  int rank_k = 5;  // top-k magnitude dimensions compared
};

/// Baseline pairwise similarities: cosine -> max(0, cos); L2 -> Gaussian
/// kernel with the median pairwise distance as bandwidth; knn -> 1 iff
/// mutually within each other's k nearest neighbours; rank -> 1 iff the
/// top-k magnitude dimension sets coincide. Symmetric with unit diagonal.
Matrix alt_similarity(const Matrix& features, SimilarityMethod method,
                      const AltSimilarityParams& params = {});

/// Mean silhouette (b - a) / max(a, b) with Euclidean distance; samples in
/// singleton clusters score 0. Requires at least two clusters.
double silhouette_score(const Matrix& features, const std::vector<int>& labels);

/// Picks Q in [q_min, q_max] maximising the silhouette of a kmeans run
/// (restarts >= 5); ties go to the smallest Q.
int estimate_q(const Matrix& features, int q_min, int q_max, std::uint64_t seed);

}  // namespace rfap::eval
