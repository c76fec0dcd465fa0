#include "rfap/experiment.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace rfap::experiment {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_kv(const config::KeyValueConfig& kv) {
  ExperimentConfig c;
  c.seed = kv.get_uint64("seed", c.seed);
  c.source = kv.get_string("dataset.source", c.source);
  c.n_per_class = kv.get_int("dataset.n_per_class", c.n_per_class);
  c.classes = kv.get_int_list("dataset.classes", c.classes);
  c.labeled_classes = kv.get_int_list("dataset.labeled_classes", c.labeled_classes);
  c.unlabeled_classes = kv.get_int_list("dataset.unlabeled_classes", c.unlabeled_classes);
  c.load_dir = kv.get_string("dataset.load_dir", c.load_dir);

  c.grid.rows = kv.get_int("grid.rows", c.grid.rows);
  c.grid.cols = kv.get_int("grid.cols", c.grid.cols);
  c.grid.cell_width = kv.get_double("grid.cell_width", c.grid.cell_width);
  c.grid.cell_length = kv.get_double("grid.cell_length", c.grid.cell_length);
  c.grid.n_timesteps = kv.get_int("grid.n_timesteps", c.grid.n_timesteps);
  c.grid.dt = kv.get_double("grid.dt", c.grid.dt);

  c.ratios.train = kv.get_double("split.train", c.ratios.train);
  c.ratios.val = kv.get_double("split.val", c.ratios.val);
  c.ratios.test = kv.get_double("split.test", c.ratios.test);

  c.highd_tracks = kv.get_string("highd.tracks", c.highd_tracks);
  c.highd_meta = kv.get_string("highd.meta", c.highd_meta);
  c.thw_threshold = kv.get_double("highd.thw_threshold", c.thw_threshold);

  auto sgd = [&](const std::string& prefix, nn::SGDConfig& s) {
    s.learning_rate = kv.get_double(prefix + ".lr", s.learning_rate);
    s.momentum = kv.get_double(prefix + ".momentum", s.momentum);
    s.weight_decay = kv.get_double(prefix + ".weight_decay", s.weight_decay);
    s.batch_size = kv.get_int(prefix + ".batch_size", s.batch_size);
    s.epochs = kv.get_int(prefix + ".epochs", s.epochs);
  };
  sgd("pretrain", c.pipe.pretrain_sgd);
  sgd("finetune", c.pipe.finetune_sgd);
  sgd("cluster", c.pipe.cluster_sgd);

  c.pipe.ramp_length = kv.get_double("cluster.ramp_length", c.pipe.ramp_length);
  c.pipe.ramp_lambda = kv.get_double("cluster.ramp_lambda", c.pipe.ramp_lambda);
  const std::string q = kv.get_string("cluster.q", "");
  if (q == "estimate")
    c.pipe.q = 0;
  else if (!q.empty())
    c.pipe.q = kv.get_int("cluster.q", 0);
  c.pipe.similarity = kv.get_string("cluster.similarity", c.pipe.similarity);
  c.pipe.use_cat_loss = kv.get_bool("cluster.use_cat_loss", c.pipe.use_cat_loss);
  c.pipe.use_cluster_loss = kv.get_bool("cluster.use_cluster_loss", c.pipe.use_cluster_loss);
  c.pipe.use_consistency_loss =
      kv.get_bool("cluster.use_consistency_loss", c.pipe.use_consistency_loss);

  c.pipe.urf_trees = kv.get_int("urf.trees", c.pipe.urf_trees);
  c.pipe.urf.max_depth = kv.get_int("urf.max_depth", c.pipe.urf.max_depth);
  c.pipe.urf.min_leaf = kv.get_int("urf.min_leaf", c.pipe.urf.min_leaf);
  c.pipe.urf.mtry = kv.get_int("urf.mtry", c.pipe.urf.mtry);

  c.pipe.augment.erase_patch_fraction =
      kv.get_double("augment.erase_fraction", c.pipe.augment.erase_patch_fraction);
  c.pipe.augment.noise_sigma = kv.get_double("augment.noise_sigma", c.pipe.augment.noise_sigma);

  c.pipe.feature_dim = kv.get_int("network.feature_dim", c.pipe.feature_dim);
  c.pipe.threads = kv.get_int("threads", c.pipe.threads);
  c.pipe.alt_similarity.knn_k = kv.get_int("eval.knn_k", c.pipe.alt_similarity.knn_k);
  c.pipe.alt_similarity.rank_k = kv.get_int("eval.rank_k", c.pipe.alt_similarity.rank_k);

  c.q_min = kv.get_int("eval.q_min", c.q_min);
  c.q_max = kv.get_int("eval.q_max", c.q_max);
  c.kmeans_restarts = kv.get_int("eval.kmeans_restarts", c.kmeans_restarts);

  c.no_ssl = kv.get_bool("ablation.no_ssl", c.no_ssl);
  c.no_labeled = kv.get_bool("ablation.no_labeled", c.no_labeled);

  c.pipe.seed = c.seed;
  return c;
}

void ExperimentConfig::validate() const {
  grid.validate();
  pipe.validate();
  for (int cl : labeled_classes)
    if (std::find(unlabeled_classes.begin(), unlabeled_classes.end(), cl) !=
        unlabeled_classes.end())
      throw ConfigError("labeled and unlabeled class lists overlap on " + std::to_string(cl));
  if (source != "synthetic" && source != "highd" && source != "load")
    throw ConfigError("unknown dataset source: " + source);
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

scenario::ScenarioDataset build_dataset(const ExperimentConfig& config) {
  config.validate();
  if (config.source == "synthetic") {
    scenario::GeneratorConfig gen;
    gen.seed = config.seed;
    gen.n_per_class = config.n_per_class;
    gen.grid = config.grid;
    gen.class_list = config.classes;
    const auto raw = scenario::generate_synthetic(gen);
    return scenario::partition_by_classes(raw, config.labeled_classes, config.unlabeled_classes);
  }
  if (config.source == "highd") {
    if (config.highd_tracks.empty() || config.highd_meta.empty())
      throw ConfigError("highd source needs highd.tracks and highd.meta paths");
    auto result = scenario::ingest_highd(config.highd_tracks, config.highd_meta, config.grid,
                                         config.thw_threshold);
    return std::move(result.dataset);
  }
  if (config.load_dir.empty()) throw ConfigError("load source needs dataset.load_dir");
  return scenario::load_dataset(config.load_dir);
}

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

urf::Matrix flatten_tensors(const std::vector<const scenario::ScenarioTensor*>& tensors) {
  if (tensors.empty()) throw ContractError("flatten_tensors: empty input");
  const std::size_t dim = tensors[0]->cell_count();
  urf::Matrix out(tensors.size(), dim);
  for (std::size_t m = 0; m < tensors.size(); ++m) {
    std::size_t pos = m * dim;
    for (const auto& frame : tensors[m]->frames)
      for (double v : frame.values) out.data[pos++] = v;
  }
  return out;
}

double kmeans_raw_baseline(const std::vector<const scenario::ScenarioTensor*>& unlabeled,
                           const std::vector<int>& truth, int q, int restarts,
                           std::uint64_t seed) {
  const urf::Matrix flat = flatten_tensors(unlabeled);
  eval::KMeansParams params;
  params.restarts = restarts;
  params.seed = seed;
  const auto labels = eval::kmeans(flat, q, params);
  return eval::hungarian_acc(labels, truth);
}

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

RunSummary run_clustering_experiment(const ExperimentConfig& config, nn::Network* network_out) {
  config.validate();
  const scenario::ScenarioDataset dataset = build_dataset(config);
  if (dataset.unlabeled.size() < 2)
    throw DataError("experiment: dataset has fewer than 2 unlabelled scenarios");

  const auto split = scenario::split_dataset(dataset, config.ratios, config.seed);

  pipeline::PipelineConfig pipe = config.pipe;
  pipe.seed = config.seed;
  if (config.no_labeled) pipe.use_cat_loss = false;

  nn::Network network = pipeline::make_network(dataset.grid, pipe);

  RunSummary summary;
  summary.q_truth = dataset.q_truth;

  // Step I: self-supervised pre-training on all training tensors (labels
  // untouched); the validation split serves as the pretext hold-out.
  if (!config.no_ssl) {
    std::vector<const scenario::ScenarioTensor*> train_tensors =
        pipeline::tensor_ptrs(split.train.labeled);
    for (const auto* t : pipeline::tensor_ptrs(split.train.unlabeled))
      train_tensors.push_back(t);
    std::vector<const scenario::ScenarioTensor*> heldout =
        pipeline::tensor_ptrs(split.val.labeled);
    for (const auto* t : pipeline::tensor_ptrs(split.val.unlabeled)) heldout.push_back(t);

    const auto step1 = pipeline::step1_pretrain(network, train_tensors, heldout, pipe);
    summary.pretext_heldout_accuracy = step1.heldout_accuracy;
    summary.step1_log = step1.log;
  }

  // Step II: supervised fine-tuning on the labelled classes.
  const int num_labeled_classes = dataset.num_labeled_classes;
  if (!config.no_labeled) {
    const auto train_ptrs = pipeline::labeled_ptrs(split.train.labeled);
    const auto val_ptrs = pipeline::labeled_ptrs(split.val.labeled);
    const int freeze_prefix = config.no_ssl ? 0 : 1;
    const auto step2 = pipeline::step2_finetune(network, train_ptrs, val_ptrs,
                                                num_labeled_classes, freeze_prefix, pipe);
    summary.finetune_validation_accuracy = step2.validation_accuracy;
    summary.step2_log = step2.log;
  }

  // Clustering operates transductively over the whole unlabelled pool.
  const auto unlabeled_ptrs = pipeline::tensor_ptrs(dataset.unlabeled);
  summary.unlabeled_truth = dataset.unlabeled_truth;

  // Q: fixed, or estimated from the current features before step III.
  int q = pipe.q;
  if (q == 0) {
    const auto features = pipeline::extract_features(network, unlabeled_ptrs, pipe.threads);
    q = eval::estimate_q(features, config.q_min,
                         std::min<int>(config.q_max, static_cast<int>(unlabeled_ptrs.size()) - 1),
                         config.seed);
  }
  summary.q_used = q;

  const auto labeled_train =
      config.no_labeled ? std::vector<const scenario::LabeledScenario*>{}
                        : pipeline::labeled_ptrs(split.train.labeled);
  const std::vector<int>* truth =
      dataset.unlabeled_truth.empty() ? nullptr : &dataset.unlabeled_truth;
  auto step3 = pipeline::step3_cluster(network, labeled_train, unlabeled_ptrs, q, pipe, truth);
  summary.step3_log = step3.log;
  summary.assignment = std::move(step3.final_assignment);

  if (truth) {
    summary.acc_proposed = eval::hungarian_acc(summary.assignment.cluster, *truth);
    summary.acc_kmeans_raw =
        kmeans_raw_baseline(unlabeled_ptrs, *truth, q, config.kmeans_restarts, config.seed);
  }
  if (network_out) *network_out = std::move(network);
  return summary;
}

// ---------------------------------------------------------------------------
// Artifact rendering
// ---------------------------------------------------------------------------

std::string epoch_log_jsonl(const std::vector<pipeline::EpochLog>& log) {
  std::ostringstream os;
  for (const auto& e : log) {
    json j{{"epoch", e.epoch},
           {"loss_total", e.loss_total},
           {"loss_cat", e.loss_cat},
           {"loss_cluster", e.loss_cluster},
           {"loss_cons", e.loss_cons},
           {"omega", e.omega}};
    if (e.labeled_accuracy >= 0) j["labeled_accuracy"] = e.labeled_accuracy;
    if (e.acc_vs_truth >= 0) j["acc"] = e.acc_vs_truth;
    os << j.dump() << "\n";
  }
  return os.str();
}

std::string assignment_csv(const pipeline::ClusterAssignment& assignment) {
  std::ostringstream os;
  os << "sample,cluster";
  const std::size_t q = assignment.probabilities.empty() ? 0 : assignment.probabilities[0].size();
  for (std::size_t c = 0; c < q; ++c) os << ",p" << (c + 1);
  os << "\n";
  os.precision(17);
  for (std::size_t m = 0; m < assignment.cluster.size(); ++m) {
    os << m << "," << assignment.cluster[m];
    for (double p : assignment.probabilities[m]) os << "," << p;
    os << "\n";
  }
  return os.str();
}

std::string similarity_csv(const urf::Matrix& S) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < S.rows; ++i) {
    for (std::size_t j = 0; j < S.cols; ++j) os << (j ? "," : "") << S.at(i, j);
    os << "\n";
  }
  return os.str();
}

std::string summary_json(const RunSummary& summary, const ExperimentConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["similarity"] = config.pipe.similarity;
  j["no_ssl"] = config.no_ssl;
  j["no_labeled"] = config.no_labeled;
  j["q_used"] = summary.q_used;
  j["q_truth"] = summary.q_truth;
  if (summary.pretext_heldout_accuracy >= 0)
    j["pretext_heldout_accuracy"] = summary.pretext_heldout_accuracy;
  if (summary.finetune_validation_accuracy >= 0)
    j["finetune_validation_accuracy"] = summary.finetune_validation_accuracy;
  if (summary.acc_proposed >= 0) j["acc"] = summary.acc_proposed;
  if (summary.acc_kmeans_raw >= 0) j["acc_kmeans_raw"] = summary.acc_kmeans_raw;
  return j.dump(2) + "\n";
}

}  // namespace rfap::experiment
