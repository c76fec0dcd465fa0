#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rfap/experiment.hpp"
#include "rfap/pipeline.hpp"
#include "rfap/synthetic.hpp"

using namespace rfap;
using namespace rfap::pipeline;

namespace {

// Small grid and budgets so each case stays in the seconds range.
scenario::GridConfig mini_grid() {
  scenario::GridConfig g;
  g.rows = 8;
  g.cols = 16;
  g.cell_width = 1.5;
  g.cell_length = 6.0;
  g.n_timesteps = 4;
  g.dt = 0.5;
  return g;
}

std::vector<LayerSpec> mini_backbone() {
  std::vector<LayerSpec> layers;
  layers.push_back({.kind = nn::LayerKind::Conv3d, .out_channels = 4, .kernel = {3, 3, 2}});
  layers.push_back({.kind = nn::LayerKind::Relu});
  layers.push_back({.kind = nn::LayerKind::MaxPool3d, .window = {2, 2, 1}});
  layers.push_back({.kind = nn::LayerKind::Conv3d, .out_channels = 8, .kernel = {2, 2, 2}});
  layers.push_back({.kind = nn::LayerKind::Relu});
  layers.push_back({.kind = nn::LayerKind::MaxPool3d, .window = {1, 1, 2}});
  layers.push_back({.kind = nn::LayerKind::Flatten});
  layers.push_back({.kind = nn::LayerKind::Dense, .units = 16});
  layers.push_back({.kind = nn::LayerKind::Relu});
  return layers;
}

nn::Network mini_network(std::uint64_t seed) {
  return nn::Network({1, 4, 8, 16}, mini_backbone(), seed);
}

PipelineConfig mini_config(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.pretrain_sgd = {.learning_rate = 0.05, .momentum = 0.9, .weight_decay = 1e-4,
                      .batch_size = 16, .epochs = 3};
  cfg.finetune_sgd = {.learning_rate = 0.05, .momentum = 0.9, .weight_decay = 1e-4,
                      .batch_size = 16, .epochs = 4};
  cfg.cluster_sgd = {.learning_rate = 0.02, .momentum = 0.9, .weight_decay = 1e-4,
                     .batch_size = 12, .epochs = 3};
  cfg.urf_trees = 20;
  cfg.urf.max_depth = 8;
  cfg.feature_dim = 16;
  cfg.seed = seed;
  cfg.threads = 2;
  cfg.q = 3;
  return cfg;
}

scenario::ScenarioDataset mini_dataset(std::uint64_t seed, int per_class = 12) {
  scenario::GeneratorConfig gen;
  gen.seed = seed;
  gen.n_per_class = per_class;
  gen.grid = mini_grid();
  const auto raw = scenario::generate_synthetic(gen);
  return scenario::partition_by_classes(raw, {1, 2, 3, 4}, {5, 6, 7});
}

}  // namespace

// ---------------------------------------------------------------------------
// Step I
// ---------------------------------------------------------------------------

TEST_CASE("step I never reads ground-truth labels") {
  const auto dataset = mini_dataset(1);
  nn::Network net = mini_network(1);
  auto cfg = mini_config(1);

  std::vector<const scenario::ScenarioTensor*> tensors = tensor_ptrs(dataset.labeled);
  for (const auto* t : tensor_ptrs(dataset.unlabeled)) tensors.push_back(t);

  scenario::label_audit::reset();
  const auto result = step1_pretrain(net, tensors, {}, cfg);
  CHECK(scenario::label_audit::count() == 0);
  CHECK(result.log.size() == 3);
  CHECK(!net.has_head_l());  // pretext head discarded
}

TEST_CASE("sampled pretext labels are roughly uniform over the 24 classes") {
  const auto dataset = mini_dataset(2, 20);
  nn::Network net = mini_network(2);
  auto cfg = mini_config(2);
  cfg.pretrain_sgd.epochs = 6;

  const auto tensors = tensor_ptrs(dataset.labeled);
  const auto result = step1_pretrain(net, tensors, {}, cfg);

  std::uint64_t total = 0;
  for (auto c : result.permutation_counts) total += c;
  CHECK(total == tensors.size() * 6);
  const double expected = static_cast<double>(total) / 24.0;
  double chi2 = 0;
  for (auto c : result.permutation_counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  // chi-square with 23 dof: 49.73 is the 0.999 quantile.
  CHECK(chi2 < 49.73);
}

TEST_CASE("step I rejects tensors without four frames") {
  nn::Network net = mini_network(3);
  scenario::ScenarioTensor t;
  for (int k = 0; k < 3; ++k) t.frames.emplace_back(8, 16, 0.0);
  std::vector<const scenario::ScenarioTensor*> tensors{&t};
  CHECK_THROWS_AS(step1_pretrain(net, tensors, {}, mini_config(3)), ShapeError);
}

// ---------------------------------------------------------------------------
// Step II
// ---------------------------------------------------------------------------

TEST_CASE("step II attaches a K-way head and keeps the frozen prefix bit-identical") {
  const auto dataset = mini_dataset(4);
  nn::Network net = mini_network(4);
  auto cfg = mini_config(4);

  const auto before = net.param_blocks()[0];
  const auto train = labeled_ptrs(dataset.labeled);
  const auto result = step2_finetune(net, train, {}, 4, /*freeze_prefix=*/1, cfg);
  CHECK(net.head_l_dim() == 4);
  CHECK(net.param_blocks()[0].w.data == before.w.data);
  CHECK(net.param_blocks()[0].b == before.b);
  CHECK(result.log.size() == 4);
}

TEST_CASE("step II learns the labelled classes on an easy dataset") {
  const auto dataset = mini_dataset(5, 16);
  const auto split = scenario::split_dataset(dataset, {0.7, 0.1, 0.2}, 5);
  nn::Network net = mini_network(5);
  auto cfg = mini_config(5);
  cfg.finetune_sgd.epochs = 12;

  // A short pretext pass first, as in the real pipeline.
  std::vector<const scenario::ScenarioTensor*> tensors = tensor_ptrs(split.train.labeled);
  for (const auto* t : tensor_ptrs(split.train.unlabeled)) tensors.push_back(t);
  step1_pretrain(net, tensors, {}, cfg);

  const auto result = step2_finetune(net, labeled_ptrs(split.train.labeled),
                                     labeled_ptrs(split.test.labeled), 4, 1, cfg);
  CHECK(result.validation_accuracy > 0.5);  // chance is 0.25
}

// ---------------------------------------------------------------------------
// Step III
// ---------------------------------------------------------------------------

TEST_CASE("step III extends the classification head and records assignments per epoch") {
  const auto dataset = mini_dataset(6);
  nn::Network net = mini_network(6);
  auto cfg = mini_config(6);

  const auto train = labeled_ptrs(dataset.labeled);
  step2_finetune(net, train, {}, 4, 1, cfg);
  const auto frozen_before = net.param_blocks()[0];

  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  const auto result = step3_cluster(net, train, unlabeled, 3, cfg, &dataset.unlabeled_truth);

  CHECK(net.head_l_dim() == 7);  // K + Q
  CHECK(net.head_u_dim() == 3);
  CHECK(result.history.size() == 3);
  CHECK(result.final_assignment.cluster.size() == unlabeled.size());
  for (std::size_t k = 0; k < unlabeled.size(); ++k) {
    const int c = result.final_assignment.cluster[k];
    CHECK(c >= 1);
    CHECK(c <= 3);
    const auto& p = result.final_assignment.probabilities[k];
    const int am = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    CHECK(c == am + 1);
  }
  // Frozen prefix stays untouched through step III as well.
  CHECK(net.param_blocks()[0].w.data == frozen_before.w.data);
  for (const auto& log : result.log) CHECK(log.acc_vs_truth >= 0.0);
}

TEST_CASE("step III is reproducible for a fixed seed and thread count") {
  const auto dataset = mini_dataset(7);
  auto cfg = mini_config(7);
  const auto train = labeled_ptrs(dataset.labeled);
  const auto unlabeled = tensor_ptrs(dataset.unlabeled);

  auto run = [&] {
    nn::Network net = mini_network(7);
    step2_finetune(net, train, {}, 4, 1, cfg);
    return step3_cluster(net, train, unlabeled, 3, cfg, nullptr);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.final_assignment.cluster == b.final_assignment.cluster);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t e = 0; e < a.log.size(); ++e)
    CHECK(a.log[e].loss_total == b.log[e].loss_total);
}

TEST_CASE("with only the categorical loss, labelled accuracy does not degrade") {
  const auto dataset = mini_dataset(8, 14);
  nn::Network net = mini_network(8);
  auto cfg = mini_config(8);
  cfg.finetune_sgd.epochs = 10;
  cfg.cluster_sgd.epochs = 10;
  cfg.use_cluster_loss = false;
  cfg.use_consistency_loss = false;

  const auto train = labeled_ptrs(dataset.labeled);
  step2_finetune(net, train, {}, 4, 1, cfg);
  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  const auto result = step3_cluster(net, train, unlabeled, 3, cfg, nullptr);

  REQUIRE(result.log.size() == 10);
  const double first = result.log.front().labeled_accuracy;
  const double last = result.log.back().labeled_accuracy;
  CHECK(last >= first - 0.1);
}

TEST_CASE("step III without labelled data drops the categorical loss and still runs") {
  const auto dataset = mini_dataset(9);
  nn::Network net = mini_network(9);
  auto cfg = mini_config(9);
  cfg.use_cat_loss = false;

  std::vector<const scenario::ScenarioTensor*> tensors = tensor_ptrs(dataset.labeled);
  for (const auto* t : tensor_ptrs(dataset.unlabeled)) tensors.push_back(t);
  step1_pretrain(net, tensors, {}, cfg);

  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  const auto result = step3_cluster(net, {}, unlabeled, 3, cfg, nullptr);
  CHECK(!net.has_head_l());
  CHECK(net.head_u_dim() == 3);
  for (const auto& log : result.log) CHECK(log.loss_cat == 0.0);
  CHECK(result.final_assignment.cluster.size() == unlabeled.size());
}

TEST_CASE("step III accepts the alternative similarity plug-ins") {
  const auto dataset = mini_dataset(10);
  auto cfg = mini_config(10);
  cfg.cluster_sgd.epochs = 2;
  cfg.alt_similarity.knn_k = 3;
  cfg.alt_similarity.rank_k = 4;
  const auto train = labeled_ptrs(dataset.labeled);
  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  for (const std::string method : {"cosine", "l2", "knn", "rank"}) {
    nn::Network net = mini_network(10);
    auto c = cfg;
    c.similarity = method;
    step2_finetune(net, train, {}, 4, 1, c);
    const auto result = step3_cluster(net, train, unlabeled, 3, c, nullptr);
    CHECK(result.final_assignment.cluster.size() == unlabeled.size());
  }
}

TEST_CASE("step III validates Q") {
  const auto dataset = mini_dataset(11);
  nn::Network net = mini_network(11);
  auto cfg = mini_config(11);
  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  CHECK_THROWS_AS(step3_cluster(net, {}, unlabeled, 1, cfg, nullptr), ConfigError);
}

// ---------------------------------------------------------------------------
// Feature extraction and assignment
// ---------------------------------------------------------------------------

TEST_CASE("extract_features is deterministic, ordered and matches single-sample forwards") {
  const auto dataset = mini_dataset(12);
  nn::Network net = mini_network(12);
  const auto tensors = tensor_ptrs(dataset.unlabeled);
  const auto features = extract_features(net, tensors, 2);
  REQUIRE(features.rows == tensors.size());
  REQUIRE(features.cols == static_cast<std::size_t>(net.feature_dim()));
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto h = net.features_of(nn::to_input(*tensors[k]));
    for (std::size_t c = 0; c < h.size(); ++c) CHECK(features.at(k, c) == h[c]);
  }
}

TEST_CASE("identical tensors produce identical feature rows") {
  const auto dataset = mini_dataset(13);
  nn::Network net = mini_network(13);
  std::vector<const scenario::ScenarioTensor*> twice{&dataset.unlabeled[0],
                                                     &dataset.unlabeled[0]};
  const auto features = extract_features(net, twice, 2);
  for (std::size_t c = 0; c < features.cols; ++c)
    CHECK(features.at(0, c) == features.at(1, c));
}

TEST_CASE("a uniform clustering head assigns cluster 1 by the tie rule") {
  nn::Network net = mini_network(14);
  net.attach_head_u(3, 1);
  net.mutable_head_u().zero();  // zero weights and bias: uniform softmax
  const auto dataset = mini_dataset(14);
  std::vector<const scenario::ScenarioTensor*> one{&dataset.unlabeled[0]};
  const auto out = assign_clusters(net, one, 1);
  CHECK(out.cluster[0] == 1);
}

TEST_CASE("permuting the input order permutes the assignment identically") {
  const auto dataset = mini_dataset(15);
  nn::Network net = mini_network(15);
  net.attach_head_u(3, 2);
  auto tensors = tensor_ptrs(dataset.unlabeled);
  const auto base = assign_clusters(net, tensors, 2);
  std::vector<const scenario::ScenarioTensor*> reversed(tensors.rbegin(), tensors.rend());
  const auto flipped = assign_clusters(net, reversed, 2);
  for (std::size_t k = 0; k < tensors.size(); ++k)
    CHECK(base.cluster[k] == flipped.cluster[tensors.size() - 1 - k]);
}

// ---------------------------------------------------------------------------
// Experiment-level plumbing
// ---------------------------------------------------------------------------

TEST_CASE("k-means raw baseline runs on flattened tensors") {
  const auto dataset = mini_dataset(16);
  const auto unlabeled = tensor_ptrs(dataset.unlabeled);
  const double acc = experiment::kmeans_raw_baseline(unlabeled, dataset.unlabeled_truth, 3,
                                                     3, 1);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("experiment config round trips through the key-value form") {
  auto kv = config::KeyValueConfig::from_string(
      "seed = 11\n"
      "dataset.n_per_class = 9\n"
      "cluster.q = estimate\n"
      "cluster.similarity = knn\n"
      "ablation.no_ssl = true\n"
      "pretrain.epochs = 2\n");
  const auto cfg = experiment::ExperimentConfig::from_kv(kv);
  CHECK(cfg.seed == 11);
  CHECK(cfg.n_per_class == 9);
  CHECK(cfg.pipe.q == 0);
  CHECK(cfg.pipe.similarity == "knn");
  CHECK(cfg.no_ssl);
  CHECK(cfg.pipe.pretrain_sgd.epochs == 2);
  CHECK(cfg.pipe.seed == 11);
}
