#include "rfap/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace rfap::urf {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Contrast synthesis
// ---------------------------------------------------------------------------

Matrix synthesize_contrast(const Matrix& features, std::uint64_t seed) {
  if (features.rows < 2) throw ContractError("synthesize_contrast: need at least 2 samples");
  Matrix out(features.rows, features.cols);
  for (std::size_t c = 0; c < features.cols; ++c) {
    Rng rng = make_stream(seed, 0xC017 + c);
    std::uniform_int_distribution<std::size_t> pick(0, features.rows - 1);
    for (std::size_t r = 0; r < features.rows; ++r) out.at(r, c) = features.at(pick(rng), c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree growth
// ---------------------------------------------------------------------------

namespace {

struct GrowContext {
  const Matrix* pool;             // real + contrast samples
  const std::vector<int>* labels; // 0 real, 1 contrast
  int max_depth;
  int min_leaf;
  int mtry;
  Rng rng;
};

struct BestSplit {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();  // weighted child Gini
};

double gini(std::size_t n0, std::size_t n1) {
  const double n = static_cast<double>(n0 + n1);
  if (n == 0) return 0.0;
  const double p0 = n0 / n, p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

// Splits chosen by minimum weighted child impurity over midpoint thresholds;
// feature candidates examined in ascending index order so ties resolve
// deterministically.
BestSplit find_split(const GrowContext& ctx, const std::vector<std::size_t>& samples,
                     const std::vector<int>& candidate_features) {
  BestSplit best;
  std::vector<std::pair<double, int>> vals;
  vals.reserve(samples.size());
  for (int f : candidate_features) {
    vals.clear();
    for (std::size_t s : samples) vals.emplace_back(ctx.pool->at(s, f), (*ctx.labels)[s]);
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) continue;  // constant in node

    std::size_t left0 = 0, left1 = 0;
    std::size_t total1 = 0;
    for (const auto& [v, y] : vals) total1 += y;
    const std::size_t n = vals.size();
    const std::size_t total0 = n - total1;

    for (std::size_t k = 0; k + 1 < n; ++k) {
      left0 += (vals[k].second == 0);
      left1 += (vals[k].second == 1);
      if (vals[k].first == vals[k + 1].first) continue;  // not a boundary
      const std::size_t nl = k + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(ctx.min_leaf) ||
          nr < static_cast<std::size_t>(ctx.min_leaf))
        continue;
      const double impurity =
          (nl * gini(left0, left1) + nr * gini(total0 - left0, total1 - left1)) / n;
      if (impurity < best.impurity) {
        best.impurity = impurity;
        best.feature = f;
        best.threshold = (vals[k].first + vals[k + 1].first) / 2.0;
      }
    }
  }
  return best;
}

int grow_node(Tree& tree, GrowContext& ctx, std::vector<std::size_t> samples, int depth) {
  const int node_idx = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  tree.nodes[node_idx].depth = depth;

  std::size_t n1 = 0;
  for (std::size_t s : samples) n1 += (*ctx.labels)[s];
  const bool pure = (n1 == 0 || n1 == samples.size());
  if (depth >= ctx.max_depth || pure ||
      samples.size() < 2 * static_cast<std::size_t>(ctx.min_leaf)) {
    return node_idx;
  }

  // mtry features without replacement, then sorted for deterministic ties.
  std::vector<int> all_features(ctx.pool->cols);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::shuffle(all_features.begin(), all_features.end(), ctx.rng);
  std::vector<int> candidates(all_features.begin(),
                              all_features.begin() + std::min<std::size_t>(ctx.mtry,
                                                                           all_features.size()));
  std::sort(candidates.begin(), candidates.end());

  const BestSplit split = find_split(ctx, samples, candidates);
  if (split.feature < 0) return node_idx;  // nothing separable

  std::vector<std::size_t> left_samples, right_samples;
  for (std::size_t s : samples) {
    if (ctx.pool->at(s, split.feature) < split.threshold)
      left_samples.push_back(s);
    else
      right_samples.push_back(s);
  }
  if (left_samples.empty() || right_samples.empty()) return node_idx;

  samples.clear();
  samples.shrink_to_fit();
  tree.nodes[node_idx].feature = split.feature;
  tree.nodes[node_idx].threshold = split.threshold;
  const int left = grow_node(tree, ctx, std::move(left_samples), depth + 1);
  tree.nodes[node_idx].left = left;
  const int right = grow_node(tree, ctx, std::move(right_samples), depth + 1);
  tree.nodes[node_idx].right = right;
  return node_idx;
}

Tree grow_tree(const Matrix& pool, const std::vector<int>& labels, const UrfParams& params,
               std::uint64_t tree_seed) {
  GrowContext ctx;
  ctx.pool = &pool;
  ctx.labels = &labels;
  ctx.max_depth = params.max_depth;
  ctx.min_leaf = params.min_leaf;
  ctx.mtry = params.mtry;
  ctx.rng = make_stream(tree_seed, 0x72EE);

  std::vector<std::size_t> bootstrap(pool.rows);
  std::uniform_int_distribution<std::size_t> pick(0, pool.rows - 1);
  for (auto& s : bootstrap) s = pick(ctx.rng);

  Tree tree;
  grow_node(tree, ctx, std::move(bootstrap), 1);
  index_tree(tree);
  return tree;
}

}  // namespace

Forest train_urf(const Matrix& features, int n_trees, const UrfParams& params, int threads) {
  if (n_trees < 1) throw ConfigError("train_urf: need at least one tree");
  if (features.rows < 2) throw ContractError("train_urf: need at least 2 samples");
  if (params.max_depth < 1) throw ConfigError("train_urf: max_depth must be >= 1");
  if (params.min_leaf < 1) throw ConfigError("train_urf: min_leaf must be >= 1");
  for (double v : features.data)
    if (!std::isfinite(v)) throw DataError("train_urf: non-finite feature");

  UrfParams p = params;
  if (p.mtry <= 0)
    p.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(features.cols))));

  // Pool: real samples (class 0) on top of the feature-wise resampled
  // contrast set (class 1).
  const Matrix contrast = synthesize_contrast(features, p.seed);
  Matrix pool(features.rows * 2, features.cols);
  std::copy(features.data.begin(), features.data.end(), pool.data.begin());
  std::copy(contrast.data.begin(), contrast.data.end(),
            pool.data.begin() + static_cast<std::ptrdiff_t>(features.data.size()));
  std::vector<int> labels(pool.rows, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(features.rows), labels.end(), 1);

  Forest forest;
  forest.feature_dim = features.cols;
  forest.trees.resize(n_trees);
  forest.tree_seeds.resize(n_trees);
  for (int b = 0; b < n_trees; ++b) {
    Rng seeder = make_stream(p.seed, 0xB00 + static_cast<std::uint64_t>(b));
    forest.tree_seeds[b] = seeder();
  }

  parallel_chunks(static_cast<std::size_t>(n_trees), threads,
                  [&](std::size_t begin, std::size_t end, int) {
                    for (std::size_t b = begin; b < end; ++b)
                      forest.trees[b] = grow_tree(pool, labels, p, forest.tree_seeds[b]);
                  });

  for (const auto& t : forest.trees)
    if (t.nodes.size() == 1) ++forest.trivial_trees;
  return forest;
}

// ---------------------------------------------------------------------------
// Indexing (the tree encoding behind the activation patterns)
// ---------------------------------------------------------------------------

void index_tree(Tree& tree) {
  if (tree.nodes.empty()) throw ContractError("index_tree: empty tree");
  tree.max_depth = 1;
  for (const auto& n : tree.nodes) tree.max_depth = std::max(tree.max_depth, n.depth);

  const int digits = tree.digit_length();
  // Parent-before-child walk; children overwrite the digit slot for their
  // depth on a copy of the parent id.
  std::vector<int> stack{0};
  tree.nodes[0].id.assign(static_cast<std::size_t>(digits), '0');
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.nodes[cur];
    if (node.is_terminal()) continue;
    for (int which = 0; which < 2; ++which) {
      const int child = which == 0 ? node.left : node.right;
      TreeNode& cn = tree.nodes[child];
      if (cn.depth != node.depth + 1)
        throw ContractError("index_tree: child depth inconsistent with parent");
      cn.id = node.id;
      cn.id[static_cast<std::size_t>(cn.depth - 2)] = which == 0 ? '1' : '2';
      stack.push_back(child);
    }
  }
}

int Tree::route(std::span<const double> point) const {
  int cur = 0;
  while (!nodes[cur].is_terminal()) {
    const TreeNode& n = nodes[cur];
    cur = point[n.feature] < n.threshold ? n.left : n.right;
  }
  return cur;
}

RFAPVector rfap_encode(const Forest& forest, std::span<const double> point) {
  if (point.size() != forest.feature_dim)
    throw ShapeError("rfap_encode: feature dimension mismatch");
  for (double v : point)
    if (!std::isfinite(v)) throw DataError("rfap_encode: non-finite feature");
  RFAPVector r;
  r.entries.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) r.entries.push_back(tree.nodes[tree.route(point)].id);
  return r;
}

double rfap_similarity(const RFAPVector& a, const RFAPVector& b) {
  if (a.entries.size() != b.entries.size())
    throw ContractError("rfap_similarity: vectors from different forests");
  if (a.entries.empty()) throw ContractError("rfap_similarity: empty RFAP vector");
  double mismatch_sum = 0;
  for (std::size_t t = 0; t < a.entries.size(); ++t) {
    const std::string& ra = a.entries[t];
    const std::string& rb = b.entries[t];
    if (ra.size() != rb.size())
      throw ContractError("rfap_similarity: entry length mismatch in tree " + std::to_string(t));
    if (ra.empty()) continue;  // single-node tree, counts as identical paths
    int diff = 0;
    for (std::size_t o = 0; o < ra.size(); ++o) diff += (ra[o] != rb[o]);
    mismatch_sum += static_cast<double>(diff) / static_cast<double>(ra.size());
  }
  return 1.0 - mismatch_sum / static_cast<double>(a.entries.size());
}

Matrix similarity_matrix(const Forest& forest, const Matrix& batch, int threads) {
  if (batch.rows < 2) throw ContractError("similarity_matrix: need at least 2 samples");
  std::vector<RFAPVector> codes(batch.rows);
  parallel_chunks(batch.rows, threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t r = begin; r < end; ++r) codes[r] = rfap_encode(forest, batch.row(r));
  });

  Matrix S(batch.rows, batch.rows);
  parallel_chunks(batch.rows, threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      S.at(i, i) = 1.0;
      for (std::size_t j = i + 1; j < batch.rows; ++j)
        S.at(i, j) = rfap_similarity(codes[i], codes[j]);
    }
  });
  for (std::size_t i = 0; i < batch.rows; ++i)
    for (std::size_t j = 0; j < i; ++j) S.at(i, j) = S.at(j, i);
  return S;
}

double path_similarity_oracle(const Tree& tree, std::span<const double> point_a,
                              std::span<const double> point_b) {
  if (tree.max_depth <= 1) return 1.0;

  // Branch direction taken entering each level 2..d_b: 1 left, 2 right,
  // 0 once the path has ended at a terminal (the padded-zero levels).
  auto directions = [&](std::span<const double> p) {
    std::vector<int> dirs(static_cast<std::size_t>(tree.max_depth - 1), 0);
    int cur = 0;
    while (!tree.nodes[cur].is_terminal()) {
      const TreeNode& n = tree.nodes[cur];
      const bool go_left = p[n.feature] < n.threshold;
      dirs[static_cast<std::size_t>(n.depth - 1)] = go_left ? 1 : 2;
      cur = go_left ? n.left : n.right;
    }
    return dirs;
  };

  const auto da = directions(point_a);
  const auto db = directions(point_b);
  int shared = 0;
  for (std::size_t k = 0; k < da.size(); ++k) shared += (da[k] == db[k]);
  return static_cast<double>(shared) / static_cast<double>(tree.max_depth - 1);
}

// ---------------------------------------------------------------------------
// Serialisation
// ---------------------------------------------------------------------------

std::string forest_to_json(const Forest& forest) {
  json j;
  j["format"] = "rfap-forest-v1";
  j["feature_dim"] = forest.feature_dim;
  j["tree_seeds"] = forest.tree_seeds;
  j["trivial_trees"] = forest.trivial_trees;
  json trees = json::array();
  for (const auto& t : forest.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"depth", n.depth},
                       {"id", n.id}});
    }
    trees.push_back({{"max_depth", t.max_depth}, {"nodes", nodes}});
  }
  j["trees"] = trees;
  return j.dump(2);
}

Forest forest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("malformed forest JSON: " + std::string(e.what()));
  }
  Forest forest;
  forest.feature_dim = j.at("feature_dim").get<std::size_t>();
  forest.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
  forest.trivial_trees = j.at("trivial_trees").get<std::size_t>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    t.max_depth = tj.at("max_depth").get<int>();
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.depth = nj.at("depth").get<int>();
      n.id = nj.at("id").get<std::string>();
      t.nodes.push_back(std::move(n));
    }
    forest.trees.push_back(std::move(t));
  }
  return forest;
}

}  // namespace rfap::urf
