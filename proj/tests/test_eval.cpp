#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rfap/metrics.hpp"

using namespace rfap;
using namespace rfap::eval;

namespace {

// Exhaustive oracle: try every injective mapping from predicted cluster
// values onto ground-truth values (padded with dummies when sizes differ)
// and count the best agreement.
double brute_force_acc(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::vector<int> pred_values, true_values;
  for (int v : predicted)
    if (std::find(pred_values.begin(), pred_values.end(), v) == pred_values.end())
      pred_values.push_back(v);
  for (int v : truth)
    if (std::find(true_values.begin(), true_values.end(), v) == true_values.end())
      true_values.push_back(v);
  // Pad the smaller side with sentinels so the assignment is a bijection.
  while (pred_values.size() < true_values.size()) pred_values.push_back(-1000 - static_cast<int>(pred_values.size()));
  while (true_values.size() < pred_values.size()) true_values.push_back(-2000 - static_cast<int>(true_values.size()));

  std::vector<std::size_t> perm(true_values.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best = 0;
  do {
    std::size_t matched = 0;
    for (std::size_t m = 0; m < predicted.size(); ++m) {
      const auto p = static_cast<std::size_t>(
          std::find(pred_values.begin(), pred_values.end(), predicted[m]) - pred_values.begin());
      if (true_values[perm[p]] == truth[m]) ++matched;
    }
    best = std::max(best, matched);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(predicted.size());
}

Matrix gaussian_blobs(const std::vector<std::pair<double, double>>& centers,
                      std::size_t per_blob, double sigma, std::uint64_t seed,
                      std::vector<int>* labels = nullptr) {
  Matrix m(centers.size() * per_blob, 2);
  Rng rng = make_stream(seed, 1);
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t b = 0; b < centers.size(); ++b)
    for (std::size_t k = 0; k < per_blob; ++k) {
      const std::size_t r = b * per_blob + k;
      m.at(r, 0) = centers[b].first + noise(rng);
      m.at(r, 1) = centers[b].second + noise(rng);
      if (labels) labels->push_back(static_cast<int>(b));
    }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hungarian ACC
// ---------------------------------------------------------------------------

TEST_CASE("perfect predictions score 1") {
  const std::vector<int> y{1, 1, 2, 2, 3, 3};
  CHECK(hungarian_acc(y, y) == 1.0);
}

TEST_CASE("any relabelling of a perfect clustering still scores 1") {
  const std::vector<int> truth{1, 1, 2, 2, 3, 3};
  const std::vector<int> pred{7, 7, 5, 5, 6, 6};
  CHECK(hungarian_acc(pred, truth) == 1.0);
}

TEST_CASE("the worked 5/6 instance matches the exhaustive oracle") {
  const std::vector<int> truth{1, 1, 2, 2, 3, 3};
  const std::vector<int> pred{1, 1, 1, 2, 3, 3};
  CHECK(hungarian_acc(pred, truth) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(brute_force_acc(pred, truth) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("hungarian ACC equals exhaustive search on random instances") {
  Rng rng = make_stream(31, 2);
  for (int rep = 0; rep < 500; ++rep) {
    const int qp = std::uniform_int_distribution<int>(1, 5)(rng);
    const int qt = std::uniform_int_distribution<int>(1, 5)(rng);
    const int m = std::uniform_int_distribution<int>(3, 24)(rng);
    std::vector<int> pred(m), truth(m);
    for (int k = 0; k < m; ++k) {
      pred[k] = std::uniform_int_distribution<int>(1, qp)(rng);
      truth[k] = std::uniform_int_distribution<int>(1, qt)(rng);
    }
    CHECK(hungarian_acc(pred, truth) ==
          doctest::Approx(brute_force_acc(pred, truth)).epsilon(1e-12));
  }
}

TEST_CASE("ACC rejects empty and mismatched inputs") {
  CHECK_THROWS_AS(hungarian_acc({}, {}), ContractError);
  CHECK_THROWS_AS(hungarian_acc({1, 2}, {1}), ContractError);
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

TEST_CASE("two far blobs cluster perfectly") {
  std::vector<int> truth;
  const Matrix m = gaussian_blobs({{0, 0}, {50, 50}}, 25, 0.5, 32, &truth);
  const auto labels = kmeans(m, 2, {.restarts = 3, .seed = 1});
  CHECK(hungarian_acc(labels, truth) == 1.0);
}

TEST_CASE("identical points occupy a single cluster") {
  Matrix m(10, 2);
  for (auto& v : m.data) v = 2.0;
  const auto labels = kmeans(m, 2, {.restarts = 2, .seed = 3});
  std::set<int> used(labels.begin(), labels.end());
  CHECK(used.size() == 1);
}

TEST_CASE("k-means is deterministic given the seed") {
  std::vector<int> truth;
  const Matrix m = gaussian_blobs({{0, 0}, {6, 6}, {-6, 6}}, 20, 1.0, 33, &truth);
  const auto a = kmeans(m, 3, {.restarts = 4, .seed = 9});
  const auto b = kmeans(m, 3, {.restarts = 4, .seed = 9});
  CHECK(a == b);
}

TEST_CASE("k-means rejects more clusters than samples") {
  Matrix m(3, 2);
  CHECK_THROWS_AS(kmeans(m, 4, {}), ConfigError);
}

// ---------------------------------------------------------------------------
// Alternative similarities
// ---------------------------------------------------------------------------

TEST_CASE("identical vectors have similarity 1 under every method") {
  Matrix m(3, 4);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) m.at(r, c) = 0.5 + 0.1 * c;
  for (auto method : {SimilarityMethod::Cosine, SimilarityMethod::L2, SimilarityMethod::Knn,
                      SimilarityMethod::Rank}) {
    const Matrix S = alt_similarity(m, method, {.knn_k = 2, .rank_k = 2});
    for (double v : S.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("orthogonal vectors have cosine similarity 0") {
  Matrix m(2, 2);
  m.at(0, 0) = 3.0;
  m.at(1, 1) = -2.0;
  const Matrix S = alt_similarity(m, SimilarityMethod::Cosine);
  CHECK(S.at(0, 1) == 0.0);
  CHECK(S.at(1, 0) == 0.0);
}

TEST_CASE("rank similarity compares top-k magnitude index sets") {
  Matrix m(2, 3);
  m.at(0, 0) = 3;
  m.at(0, 1) = 1;
  m.at(0, 2) = 0;
  m.at(1, 0) = 2;
  m.at(1, 1) = 5;
  m.at(1, 2) = 0;
  const Matrix S = alt_similarity(m, SimilarityMethod::Rank, {.rank_k = 2});
  CHECK(S.at(0, 1) == 1.0);  // top-2 sets are both {0, 1}
  Matrix m2 = m;
  m2.at(1, 1) = 0.0;
  m2.at(1, 2) = 5.0;  // now {0, 2}
  const Matrix S2 = alt_similarity(m2, SimilarityMethod::Rank, {.rank_k = 2});
  CHECK(S2.at(0, 1) == 0.0);
}

TEST_CASE("alt similarity matrices are symmetric with unit diagonal; knn and rank are binary") {
  Rng rng = make_stream(34, 3);
  Matrix m(8, 5);
  std::uniform_real_distribution<double> dist(-2, 2);
  for (auto& v : m.data) v = dist(rng);
  for (auto method : {SimilarityMethod::Cosine, SimilarityMethod::L2, SimilarityMethod::Knn,
                      SimilarityMethod::Rank}) {
    const Matrix S = alt_similarity(m, method, {.knn_k = 3, .rank_k = 2});
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(S.at(i, i) == 1.0);
      for (std::size_t j = 0; j < 8; ++j) {
        CHECK(S.at(i, j) == S.at(j, i));
        if (method == SimilarityMethod::Knn || method == SimilarityMethod::Rank) {
          if (i != j) CHECK((S.at(i, j) == 0.0 || S.at(i, j) == 1.0));
        } else {
          CHECK(S.at(i, j) >= 0.0);
          CHECK(S.at(i, j) <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("knn similarity rejects k at or above the sample count") {
  Matrix m(4, 2);
  CHECK_THROWS_AS(alt_similarity(m, SimilarityMethod::Knn, {.knn_k = 4}), ConfigError);
}

// ---------------------------------------------------------------------------
// Silhouette and Q estimation
// ---------------------------------------------------------------------------

TEST_CASE("two tight far blobs have silhouette above 0.9") {
  std::vector<int> truth;
  const Matrix m = gaussian_blobs({{0, 0}, {40, 0}}, 20, 0.3, 35, &truth);
  CHECK(silhouette_score(m, truth) > 0.9);
}

TEST_CASE("random labels on a single blob have silhouette near zero") {
  std::vector<int> ignore;
  const Matrix m = gaussian_blobs({{0, 0}}, 60, 1.0, 36, &ignore);
  Rng rng = make_stream(37, 4);
  std::vector<int> labels(60);
  for (auto& y : labels) y = std::uniform_int_distribution<int>(0, 2)(rng);
  CHECK(std::abs(silhouette_score(m, labels)) < 0.1);
}

TEST_CASE("the symmetric two-pair configuration scores 47/63") {
  // Points 0, 1 in cluster A and 4, 5 in cluster B on a line:
  // s(0) = (4.5 - 1)/4.5 = 7/9, s(1) = (3.5 - 1)/3.5 = 5/7, mirrored for B.
  Matrix m(4, 1);
  m.at(0, 0) = 0;
  m.at(1, 0) = 1;
  m.at(2, 0) = 4;
  m.at(3, 0) = 5;
  const std::vector<int> labels{0, 0, 1, 1};
  CHECK(silhouette_score(m, labels) == doctest::Approx(47.0 / 63.0).epsilon(1e-14));
}

TEST_CASE("a single cluster is rejected") {
  Matrix m(5, 2);
  CHECK_THROWS_AS(silhouette_score(m, std::vector<int>(5, 1)), ContractError);
}

TEST_CASE("singleton clusters contribute a zero silhouette term") {
  Matrix m(3, 1);
  m.at(0, 0) = 0;
  m.at(1, 0) = 0.5;
  m.at(2, 0) = 10;
  const std::vector<int> labels{0, 0, 1};
  const double s = silhouette_score(m, labels);
  // Hand value: s(0) = (10 - 0.5)/10, s(1) = (9.5 - 0.5)/9.5, s(2) = 0.
  const double expect = ((10.0 - 0.5) / 10.0 + (9.5 - 0.5) / 9.5 + 0.0) / 3.0;
  CHECK(s == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("estimate_q recovers 3 blobs and 2 blobs over [2, 8]") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Matrix m3 = gaussian_blobs({{0, 0}, {12, 0}, {0, 12}}, 30, 0.5, 40 + seed);
    CHECK(estimate_q(m3, 2, 8, seed) == 3);
    const Matrix m2 = gaussian_blobs({{0, 0}, {14, 3}}, 30, 0.5, 50 + seed);
    CHECK(estimate_q(m2, 2, 8, seed) == 2);
  }
}

TEST_CASE("estimate_q validates its range") {
  const Matrix m = gaussian_blobs({{0, 0}, {9, 9}}, 10, 0.4, 60);
  CHECK_THROWS_AS(estimate_q(m, 1, 5, 0), ConfigError);
  CHECK_THROWS_AS(estimate_q(m, 5, 2, 0), ConfigError);
  CHECK_THROWS_AS(estimate_q(m, 2, 20, 0), ConfigError);
}
