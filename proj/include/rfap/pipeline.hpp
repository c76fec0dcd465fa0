#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfap/forest.hpp"
#include "rfap/gradcheck.hpp"
#include "rfap/losses.hpp"
#include "rfap/metrics.hpp"
#include "rfap/network.hpp"
#include "rfap/sgd.hpp"

namespace rfap::pipeline {

struct PipelineConfig {
  nn::SGDConfig pretrain_sgd{.learning_rate = 0.05, .epochs = 20};
  nn::SGDConfig finetune_sgd{.learning_rate = 0.05, .epochs = 15};
  nn::SGDConfig cluster_sgd{.learning_rate = 0.02, .epochs = 30};

  double ramp_length = 100.0;  // T
  double ramp_lambda = 5.0;    // lambda

  int q = 0;  // clusters; 0 = estimate before step III
  int urf_trees = 100;
  urf::UrfParams urf;

  scenario::AugmentParams augment{.erase_patch_fraction = 0.1, .noise_sigma = 0.05};

  int feature_dim = 64;
  std::uint64_t seed = 0;
  int threads = 2;

  // Ablation switches and the similarity plug-in for step III.
  bool use_cat_loss = true;
  bool use_cluster_loss = true;
  bool use_consistency_loss = true;
  std::string similarity = "rfap";  // rfap | cosine | l2 | knn | rank
  eval::AltSimilarityParams alt_similarity;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss_total = 0;
  double loss_cat = 0;
  double loss_cluster = 0;
  double loss_cons = 0;
  double omega = 0;
  double labeled_accuracy = -1;  // batch-level running accuracy; -1 if n/a
  double acc_vs_truth = -1;      // only when ground truth was provided
};

/// Per-unlabelled-sample cluster decision: id in {1..Q}, the argmax of the
/// stored probability vector (first index on ties).
struct ClusterAssignment {
  std::vector<int> cluster;
  std::vector<std::vector<double>> probabilities;
  int epoch = -1;
};

struct Step1Result {
  std::vector<EpochLog> log;
  double heldout_accuracy = -1;          // 24-way accuracy on held-out tensors
  std::vector<std::uint64_t> permutation_counts;  // sampled pretext labels, size 24
};

struct Step2Result {
  std::vector<EpochLog> log;
  double validation_accuracy = -1;
};

struct Step3Result {
  std::vector<EpochLog> log;
  ClusterAssignment final_assignment;
  std::vector<ClusterAssignment> history;  // one per epoch
  std::size_t degenerate_urf_epochs = 0;   // flagged, training continued
};

/// Backbone-only network sized for the given grid.
nn::Network make_network(const scenario::GridConfig& grid, const PipelineConfig& config);

/// Step I: self-supervised pre-training on the 24-way temporal-order pretext
/// task. Trains the full backbone plus a temporary 24-way head on every
/// given tensor; ground-truth scenario labels are never read. The head is
/// discarded at the end. Held-out tensors (may be empty) are scored after
/// training with freshly sampled permutations.
Step1Result step1_pretrain(nn::Network& network,
                           const std::vector<const scenario::ScenarioTensor*>& train,
                           const std::vector<const scenario::ScenarioTensor*>& heldout,
                           const PipelineConfig& config);

/// Step II: supervised fine-tuning. Replaces the pretext head with a fresh
/// K-way classification head and trains it together with the unfrozen
/// backbone suffix on the labelled data (freeze_prefix parametric layers
/// stay fixed; 1 = the first conv block, 0 = train everything).
Step2Result step2_finetune(nn::Network& network,
                           const std::vector<const scenario::LabeledScenario*>& train,
                           const std::vector<const scenario::LabeledScenario*>& validation,
                           int num_classes, int freeze_prefix, const PipelineConfig& config);

/// Step III: iterative clustering. Per epoch: extract unlabelled features,
/// train a fresh URF on them, then iterate mixed mini-batches minimising
/// cat + cluster + omega(epoch) * consistency on the unfrozen parameters.
/// The classification head grows to K+Q outputs (pseudo-labels K + argmax of
/// the clustering head, recomputed per batch); S comes from RFAP encodings
/// against the epoch's forest, or from the configured similarity plug-in.
/// `truth` (optional) is used only to log ACC per epoch.
Step3Result step3_cluster(nn::Network& network,
                          const std::vector<const scenario::LabeledScenario*>& labeled,
                          const std::vector<const scenario::ScenarioTensor*>& unlabeled, int q,
                          const PipelineConfig& config,
                          const std::vector<int>* truth = nullptr);

/// Deterministic forward pass to the feature vectors, rows in input order.
urf::Matrix extract_features(const nn::Network& network,
                             const std::vector<const scenario::ScenarioTensor*>& tensors,
                             int threads = 1);

ClusterAssignment assign_clusters(const nn::Network& network,
                                  const std::vector<const scenario::ScenarioTensor*>& unlabeled,
                                  int threads = 1);

// Tensor-pointer helpers for dataset plumbing.
std::vector<const scenario::ScenarioTensor*> tensor_ptrs(
    const std::vector<scenario::ScenarioTensor>& tensors);
std::vector<const scenario::ScenarioTensor*> tensor_ptrs(
    const std::vector<scenario::LabeledScenario>& labeled);
std::vector<const scenario::LabeledScenario*> labeled_ptrs(
    const std::vector<scenario::LabeledScenario>& labeled);

}  // namespace rfap::pipeline
