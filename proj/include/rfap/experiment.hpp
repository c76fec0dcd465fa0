#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfap/config.hpp"
#include "rfap/dataset_io.hpp"
#include "rfap/highd.hpp"
#include "rfap/pipeline.hpp"
#include "rfap/synthetic.hpp"

namespace rfap::experiment {

/// Everything one clustering experiment needs: dataset source, label split,
/// pipeline budgets and evaluation options. Built from the key-value config
/// plus command-line overrides.
struct ExperimentConfig {
  // dataset
  std::string source = "synthetic";  // synthetic | highd | load
  int n_per_class = 150;
  std::vector<int> classes{1, 2, 3, 4, 5, 6, 7};
  std::vector<int> labeled_classes{1, 2, 3, 4};
  std::vector<int> unlabeled_classes{5, 6, 7};
  scenario::GridConfig grid;
  scenario::SplitRatios ratios;
  std::string highd_tracks;
  std::string highd_meta;
  double thw_threshold = 4.0;
  std::string load_dir;

  pipeline::PipelineConfig pipe;

  // evaluation
  int q_min = 2;
  int q_max = 8;
  int kmeans_restarts = 5;

  // ablations
  bool no_ssl = false;      // skip step I; step II then trains all layers
  bool no_labeled = false;  // skip step II; drop the categorical loss in step III

  std::uint64_t seed = 7;

  static ExperimentConfig from_kv(const config::KeyValueConfig& kv);
  void validate() const;
};

struct RunSummary {
  int q_used = 0;
  int q_truth = 0;
  double pretext_heldout_accuracy = -1;
  double finetune_validation_accuracy = -1;
  double acc_proposed = -1;    // final-assignment ACC vs hidden truth (if known)
  double acc_kmeans_raw = -1;  // k-means on flattened raw tensors, same Q
  std::vector<pipeline::EpochLog> step1_log, step2_log, step3_log;
  pipeline::ClusterAssignment assignment;
  std::vector<int> unlabeled_truth;  // as used for evaluation (may be empty)
};

/// Builds (or loads) the dataset described by the config: synthetic data is
/// generated and partitioned into labelled/unlabelled classes.
scenario::ScenarioDataset build_dataset(const ExperimentConfig& config);

/// Runs the full three-step method plus the raw-tensor k-means baseline.
/// Ablation flags skip steps as configured. `network_out`, when non-null,
/// receives the trained network.
RunSummary run_clustering_experiment(const ExperimentConfig& config,
                                     nn::Network* network_out = nullptr);

/// K-means on flattened raw tensors (the Table-I style baseline); returns
/// ACC against the provided truth.
double kmeans_raw_baseline(const std::vector<const scenario::ScenarioTensor*>& unlabeled,
                           const std::vector<int>& truth, int q, int restarts,
                           std::uint64_t seed);

urf::Matrix flatten_tensors(const std::vector<const scenario::ScenarioTensor*>& tensors);

// Artifact rendering helpers shared by the CLI.
std::string epoch_log_jsonl(const std::vector<pipeline::EpochLog>& log);
std::string assignment_csv(const pipeline::ClusterAssignment& assignment);
std::string similarity_csv(const urf::Matrix& S);
std::string summary_json(const RunSummary& summary, const ExperimentConfig& config);

}  // namespace rfap::experiment
