#include "rfap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rfap::eval {

// ---------------------------------------------------------------------------
// Contingency + Hungarian ACC
// ---------------------------------------------------------------------------

ContingencyTable ContingencyTable::build(const std::vector<int>& predicted,
                                         const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw ContractError("contingency: label vectors differ in length");
  if (predicted.empty()) throw ContractError("contingency: empty input");

  ContingencyTable table;
  auto index_of = [](std::vector<int>& values, int v) {
    auto it = std::find(values.begin(), values.end(), v);
    if (it != values.end()) return static_cast<std::size_t>(it - values.begin());
    values.push_back(v);
    return values.size() - 1;
  };
  std::vector<std::pair<std::size_t, std::size_t>> cells(predicted.size());
  for (std::size_t m = 0; m < predicted.size(); ++m) {
    cells[m] = {index_of(table.pred_values, predicted[m]), index_of(table.true_values, truth[m])};
  }
  table.counts = Matrix(table.pred_values.size(), table.true_values.size());
  for (auto [r, c] : cells) table.counts.at(r, c) += 1.0;
  return table;
}

std::vector<int> solve_assignment(const Matrix& cost) {
  if (cost.rows != cost.cols) throw ContractError("solve_assignment: matrix must be square");
  const int n = static_cast<int>(cost.rows);
  // Potentials u, v and column matches; 1-based with a virtual row/col 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

double hungarian_acc(const std::vector<int>& predicted, const std::vector<int>& truth) {
  const ContingencyTable table = ContingencyTable::build(predicted, truth);
  const std::size_t n = std::max(table.counts.rows, table.counts.cols);
  Matrix cost(n, n);  // pad to square; missing cells stay at count 0
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      cost.at(r, c) = (r < table.counts.rows && c < table.counts.cols)
                          ? -table.counts.at(r, c)
                          : 0.0;
  const std::vector<int> assign = solve_assignment(cost);
  double matched = 0;
  for (std::size_t r = 0; r < table.counts.rows; ++r) {
    const int c = assign[r];
    if (c >= 0 && static_cast<std::size_t>(c) < table.counts.cols)
      matched += table.counts.at(r, c);
  }
  return matched / static_cast<double>(predicted.size());
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

struct KMeansRun {
  std::vector<int> labels;
  double wcss = std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const Matrix& x, int q, int max_iter, Rng& rng) {
  const std::size_t M = x.rows, F = x.cols;
  // Initial centroids: q distinct samples.
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Matrix centroids(q, F);
  for (int c = 0; c < q; ++c)
    std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(order[c] * F), F,
                centroids.data.begin() + static_cast<std::ptrdiff_t>(c) * F);

  KMeansRun run;
  run.labels.assign(M, 0);
  std::vector<std::size_t> counts(q, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t m = 0; m < M; ++m) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < q; ++c) {
        const double d = sq_dist(x.row(m), centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (run.labels[m] != best) {
        run.labels[m] = best;
        changed = true;
      }
    }
    // Recompute centroids; an emptied cluster takes the sample farthest from
    // its assigned centroid.
    centroids.data.assign(centroids.data.size(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t m = 0; m < M; ++m) {
      ++counts[run.labels[m]];
      for (std::size_t f = 0; f < F; ++f) centroids.at(run.labels[m], f) += x.at(m, f);
    }
    for (int c = 0; c < q; ++c) {
      if (counts[c] == 0) {
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t m = 0; m < M; ++m) {
          const double d = sq_dist(x.row(m), centroids.row(run.labels[m]));
          if (d > far_d) {
            far_d = d;
            far = m;
          }
        }
        run.labels[far] = c;
        counts[c] = 1;
        for (std::size_t f = 0; f < F; ++f) centroids.at(c, f) = x.at(far, f);
        changed = true;
        continue;
      }
      for (std::size_t f = 0; f < F; ++f) centroids.at(c, f) /= static_cast<double>(counts[c]);
    }
    if (!changed) break;
  }
  run.wcss = 0;
  for (std::size_t m = 0; m < M; ++m) run.wcss += sq_dist(x.row(m), centroids.row(run.labels[m]));
  return run;
}

}  // namespace

std::vector<int> kmeans(const Matrix& features, int q, const KMeansParams& params) {
  if (q < 1) throw ConfigError("kmeans: Q must be >= 1");
  if (static_cast<std::size_t>(q) > features.rows)
    throw ConfigError("kmeans: Q exceeds the number of samples");
  if (params.restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");

  KMeansRun best;
  for (int r = 0; r < params.restarts; ++r) {
    Rng rng = make_stream(params.seed, 0x317 + static_cast<std::uint64_t>(r));
    KMeansRun run = kmeans_once(features, q, params.max_iter, rng);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  return best.labels;
}

// ---------------------------------------------------------------------------
// Alternative similarities
// ---------------------------------------------------------------------------

SimilarityMethod similarity_method_from_string(const std::string& name) {
  if (name == "cosine") return SimilarityMethod::Cosine;
  if (name == "l2") return SimilarityMethod::L2;
  if (name == "knn") return SimilarityMethod::Knn;
  if (name == "rank") return SimilarityMethod::Rank;
  throw ConfigError("unknown similarity method: " + name);
}

std::string to_string(SimilarityMethod method) {
  switch (method) {
    case SimilarityMethod::Cosine: return "cosine";
    case SimilarityMethod::L2: return "l2";
    case SimilarityMethod::Knn: return "knn";
    case SimilarityMethod::Rank: return "rank";
  }
  return "?";
}

namespace {

Matrix cosine_similarity(const Matrix& x) {
  const std::size_t M = x.rows;
  std::vector<double> norms(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    for (double v : x.row(m)) norms[m] += v * v;
    norms[m] = std::sqrt(norms[m]);
  }
  Matrix S(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    S.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < M; ++j) {
      double dot = 0;
      for (std::size_t f = 0; f < x.cols; ++f) dot += x.at(i, f) * x.at(j, f);
      const double denom = norms[i] * norms[j];
      const double c = denom > 0 ? dot / denom : 0.0;
      S.at(i, j) = S.at(j, i) = std::max(0.0, c);
    }
  }
  return S;
}

Matrix l2_similarity(const Matrix& x) {
  const std::size_t M = x.rows;
  Matrix d2(M, M);
  std::vector<double> all;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) {
      d2.at(i, j) = d2.at(j, i) = sq_dist(x.row(i), x.row(j));
      all.push_back(std::sqrt(d2.at(i, j)));
    }
  std::sort(all.begin(), all.end());
  double sigma = all.empty() ? 1.0 : all[all.size() / 2];  // median pairwise distance
  if (sigma <= 0) sigma = 1.0;
  Matrix S(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    S.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < M; ++j)
      S.at(i, j) = S.at(j, i) = std::exp(-d2.at(i, j) / (sigma * sigma));
  }
  return S;
}

Matrix knn_similarity(const Matrix& x, int k) {
  const std::size_t M = x.rows;
  if (k < 1) throw ConfigError("knn similarity: k must be >= 1");
  if (static_cast<std::size_t>(k) >= M)
    throw ConfigError("knn similarity: k must be below the number of samples");
  // Neighbour ranks by (distance, index): deterministic under ties.
  std::vector<std::vector<std::size_t>> neighbours(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(M - 1);
    for (std::size_t j = 0; j < M; ++j)
      if (j != i) d.emplace_back(sq_dist(x.row(i), x.row(j)), j);
    std::sort(d.begin(), d.end());
    for (int n = 0; n < k; ++n) neighbours[i].push_back(d[n].second);
  }
  auto contains = [](const std::vector<std::size_t>& v, std::size_t j) {
    return std::find(v.begin(), v.end(), j) != v.end();
  };
  Matrix S(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    S.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < M; ++j) {
      const double s = (contains(neighbours[i], j) && contains(neighbours[j], i)) ? 1.0 : 0.0;
      S.at(i, j) = S.at(j, i) = s;
    }
  }
  return S;
}

Matrix rank_similarity(const Matrix& x, int k) {
  const std::size_t M = x.rows;
  if (k < 1 || static_cast<std::size_t>(k) > x.cols)
    throw ConfigError("rank similarity: k must be in [1, feature dim]");
  // Top-k magnitude dimension sets, sorted for set comparison.
  std::vector<std::vector<std::size_t>> topk(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<std::pair<double, std::size_t>> mags;
    for (std::size_t f = 0; f < x.cols; ++f) mags.emplace_back(-std::abs(x.at(m, f)), f);
    std::sort(mags.begin(), mags.end());
    for (int n = 0; n < k; ++n) topk[m].push_back(mags[n].second);
    std::sort(topk[m].begin(), topk[m].end());
  }
  Matrix S(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    S.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < M; ++j)
      S.at(i, j) = S.at(j, i) = (topk[i] == topk[j]) ? 1.0 : 0.0;
  }
  return S;
}

}  // namespace

Matrix alt_similarity(const Matrix& features, SimilarityMethod method,
                      const AltSimilarityParams& params) {
  if (features.rows < 2) throw ContractError("alt_similarity: need at least 2 samples");
  switch (method) {
    case SimilarityMethod::Cosine: return cosine_similarity(features);
    case SimilarityMethod::L2: return l2_similarity(features);
    case SimilarityMethod::Knn: return knn_similarity(features, params.knn_k);
    case SimilarityMethod::Rank: return rank_similarity(features, params.rank_k);
  }
  throw ConfigError("alt_similarity: unreachable method");
}

// ---------------------------------------------------------------------------
// Silhouette and Q estimation
// ---------------------------------------------------------------------------

double silhouette_score(const Matrix& features, const std::vector<int>& labels) {
  const std::size_t M = features.rows;
  if (labels.size() != M) throw ContractError("silhouette: label count mismatch");
  std::vector<int> distinct;
  for (int y : labels)
    if (std::find(distinct.begin(), distinct.end(), y) == distinct.end()) distinct.push_back(y);
  if (distinct.size() < 2) throw ContractError("silhouette undefined for a single cluster");

  std::vector<std::size_t> cluster_size(distinct.size(), 0);
  std::vector<std::size_t> cluster_of(M);
  for (std::size_t m = 0; m < M; ++m) {
    cluster_of[m] = static_cast<std::size_t>(
        std::find(distinct.begin(), distinct.end(), labels[m]) - distinct.begin());
    ++cluster_size[cluster_of[m]];
  }

  double total = 0;
  std::vector<double> mean_dist(distinct.size());
  for (std::size_t m = 0; m < M; ++m) {
    if (cluster_size[cluster_of[m]] == 1) continue;  // singleton scores 0
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (std::size_t n = 0; n < M; ++n) {
      if (n == m) continue;
      mean_dist[cluster_of[n]] += std::sqrt(sq_dist(features.row(m), features.row(n)));
    }
    double a = 0, b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < distinct.size(); ++c) {
      if (c == cluster_of[m]) {
        a = mean_dist[c] / static_cast<double>(cluster_size[c] - 1);
      } else if (cluster_size[c] > 0) {
        b = std::min(b, mean_dist[c] / static_cast<double>(cluster_size[c]));
      }
    }
    const double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / static_cast<double>(M);
}

int estimate_q(const Matrix& features, int q_min, int q_max, std::uint64_t seed) {
  if (q_min < 2 || q_min > q_max) throw ConfigError("estimate_q: need 2 <= q_min <= q_max");
  if (static_cast<std::size_t>(q_max) >= features.rows)
    throw ConfigError("estimate_q: q_max must be below the number of samples");
  int best_q = q_min;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int q = q_min; q <= q_max; ++q) {
    KMeansParams params;
    params.restarts = 5;
    params.seed = seed + static_cast<std::uint64_t>(q) * 101;
    const auto labels = kmeans(features, q, params);
    const double score = silhouette_score(features, labels);
    if (score > best_score + 1e-12) {
      best_score = score;
      best_q = q;
    }
  }
  return best_q;
}

}  // namespace rfap::eval
