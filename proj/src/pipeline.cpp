#include "rfap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfap::pipeline {

void PipelineConfig::validate() const {
  pretrain_sgd.validate();
  finetune_sgd.validate();
  cluster_sgd.validate();
  if (ramp_length <= 0) throw ConfigError("pipeline: ramp length T must be positive");
  if (ramp_lambda <= 0) throw ConfigError("pipeline: ramp lambda must be positive");
  if (q != 0 && q < 2) throw ConfigError("pipeline: Q must be >= 2 when fixed");
  if (urf_trees < 1) throw ConfigError("pipeline: urf_trees must be >= 1");
  if (threads < 1) throw ConfigError("pipeline: threads must be >= 1");
  if (similarity != "rfap") eval::similarity_method_from_string(similarity);
}

std::vector<const scenario::ScenarioTensor*> tensor_ptrs(
    const std::vector<scenario::ScenarioTensor>& tensors) {
  std::vector<const scenario::ScenarioTensor*> out;
  out.reserve(tensors.size());
  for (const auto& t : tensors) out.push_back(&t);
  return out;
}

std::vector<const scenario::ScenarioTensor*> tensor_ptrs(
    const std::vector<scenario::LabeledScenario>& labeled) {
  std::vector<const scenario::ScenarioTensor*> out;
  out.reserve(labeled.size());
  for (const auto& s : labeled) out.push_back(&s.tensor);
  return out;
}

std::vector<const scenario::LabeledScenario*> labeled_ptrs(
    const std::vector<scenario::LabeledScenario>& labeled) {
  std::vector<const scenario::LabeledScenario*> out;
  out.reserve(labeled.size());
  for (const auto& s : labeled) out.push_back(&s);
  return out;
}

nn::Network make_network(const scenario::GridConfig& grid, const PipelineConfig& config) {
  grid.validate();
  const std::array<int, 4> input_shape{1, grid.n_timesteps, grid.rows, grid.cols};
  return nn::Network(input_shape, nn::Network::desk_backbone(config.feature_dim),
                     config.seed);
}

// ---------------------------------------------------------------------------
// Batch machinery: deterministic parallel forward/backward. Batch chunking
// depends only on (batch size, thread count); per-chunk gradients merge in
// chunk order.
// ---------------------------------------------------------------------------

namespace {

void forward_all(const nn::Network& net, const std::vector<nn::Tensor>& inputs,
                 nn::HeadSelect sel, int threads, std::vector<nn::ForwardCache>& out) {
  out.resize(inputs.size());
  parallel_chunks(inputs.size(), threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t k = b; k < e; ++k) out[k] = net.forward(inputs[k], sel);
  });
}

// dl/du entries may be empty vectors, meaning no gradient for that head on
// that sample.
void backward_all(const nn::Network& net, const std::vector<nn::ForwardCache>& caches,
                  const std::vector<std::vector<double>>* dl,
                  const std::vector<std::vector<double>>* du, int threads,
                  nn::Gradients& grads) {
  const std::size_t n = caches.size();
  if (n == 0) return;
  const int nchunks = static_cast<int>(std::min<std::size_t>(threads, n));
  std::vector<nn::Gradients> chunk_grads(static_cast<std::size_t>(nchunks));
  for (auto& g : chunk_grads) g = net.make_gradients();
  parallel_chunks(n, threads, [&](std::size_t b, std::size_t e, int c) {
    for (std::size_t k = b; k < e; ++k) {
      const std::vector<double>* dlk = (dl && !(*dl)[k].empty()) ? &(*dl)[k] : nullptr;
      const std::vector<double>* duk = (du && !(*du)[k].empty()) ? &(*du)[k] : nullptr;
      if (!dlk && !duk) continue;
      net.backward(caches[k], dlk, duk, nullptr, chunk_grads[static_cast<std::size_t>(c)]);
    }
  });
  for (const auto& g : chunk_grads) grads.add(g);
}

int argmax_index(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Step I
// ---------------------------------------------------------------------------

Step1Result step1_pretrain(nn::Network& network,
                           const std::vector<const scenario::ScenarioTensor*>& train,
                           const std::vector<const scenario::ScenarioTensor*>& heldout,
                           const PipelineConfig& config) {
  config.validate();
  if (train.empty()) throw ConfigError("step1: no training tensors");
  for (const auto* t : train)
    if (t->n_frames() != 4) throw ShapeError("step1: pretext task requires N_ts = 4");

  network.set_frozen_prefix(0);  // the whole backbone trains in step I
  network.detach_head_u();
  network.attach_head_l(scenario::PermutationLabel::kCount, config.seed + 0x51);

  nn::SgdState state;
  Rng order_rng = make_stream(config.seed, 0x1A01);
  Rng perm_rng = make_stream(config.seed, 0x1A02);
  std::uniform_int_distribution<int> perm_draw(1, scenario::PermutationLabel::kCount);

  Step1Result result;
  result.permutation_counts.assign(scenario::PermutationLabel::kCount, 0);
  const int W = config.pretrain_sgd.batch_size;

  for (int epoch = 0; epoch < config.pretrain_sgd.epochs; ++epoch) {
    const auto order = shuffled_indices(train.size(), order_rng);
    double epoch_loss = 0;
    std::size_t correct = 0, seen = 0;

    for (std::size_t start = 0; start < order.size(); start += W) {
      const std::size_t end = std::min(order.size(), start + W);
      std::vector<nn::Tensor> inputs;
      std::vector<int> targets;
      inputs.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const int perm_index = perm_draw(perm_rng);
        ++result.permutation_counts[static_cast<std::size_t>(perm_index - 1)];
        const auto shuffled = scenario::shuffle_temporal(
            *train[order[k]], scenario::PermutationLabel::from_index(perm_index));
        inputs.push_back(nn::to_input(shuffled));
        targets.push_back(perm_index - 1);
      }

      std::vector<nn::ForwardCache> caches;
      forward_all(network, inputs, nn::HeadSelect{.l = true}, config.threads, caches);

      std::vector<std::vector<double>> probs(caches.size()), dprobs(caches.size());
      for (std::size_t k = 0; k < caches.size(); ++k) {
        probs[k] = caches[k].l_probs;
        dprobs[k].assign(probs[k].size(), 0.0);
        if (argmax_index(probs[k]) == targets[k]) ++correct;
        ++seen;
      }
      const double loss = nn::categorical_cross_entropy(probs, targets, &dprobs);
      epoch_loss += loss * static_cast<double>(caches.size());

      nn::Gradients grads = network.make_gradients();
      backward_all(network, caches, &dprobs, nullptr, config.threads, grads);
      nn::sgd_step(network, grads, config.pretrain_sgd, state);
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss_cat = log.loss_total = epoch_loss / static_cast<double>(train.size());
    log.labeled_accuracy = seen ? static_cast<double>(correct) / static_cast<double>(seen) : -1;
    result.log.push_back(log);
  }

  if (!heldout.empty()) {
    Rng eval_rng = make_stream(config.seed, 0x1A03);
    std::vector<nn::Tensor> inputs;
    std::vector<int> targets;
    for (const auto* t : heldout) {
      const int perm_index = perm_draw(eval_rng);
      inputs.push_back(nn::to_input(scenario::shuffle_temporal(
          *t, scenario::PermutationLabel::from_index(perm_index))));
      targets.push_back(perm_index - 1);
    }
    std::vector<nn::ForwardCache> caches;
    forward_all(network, inputs, nn::HeadSelect{.l = true}, config.threads, caches);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < caches.size(); ++k)
      if (argmax_index(caches[k].l_probs) == targets[k]) ++correct;
    result.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(heldout.size());
  }

  network.detach_head_l();  // pretext head is discarded, backbone retained
  return result;
}

// ---------------------------------------------------------------------------
// Step II
// ---------------------------------------------------------------------------

Step2Result step2_finetune(nn::Network& network,
                           const std::vector<const scenario::LabeledScenario*>& train,
                           const std::vector<const scenario::LabeledScenario*>& validation,
                           int num_classes, int freeze_prefix, const PipelineConfig& config) {
  config.validate();
  if (train.empty()) throw ConfigError("step2: no labelled training data");
  if (num_classes < 2) throw ConfigError("step2: need at least 2 labelled classes");

  network.detach_head_l();
  network.detach_head_u();
  network.attach_head_l(num_classes, config.seed + 0x52);
  network.set_frozen_prefix(freeze_prefix);

  nn::SgdState state;
  Rng order_rng = make_stream(config.seed, 0x2B01);
  const int W = config.finetune_sgd.batch_size;

  Step2Result result;
  for (int epoch = 0; epoch < config.finetune_sgd.epochs; ++epoch) {
    const auto order = shuffled_indices(train.size(), order_rng);
    double epoch_loss = 0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += W) {
      const std::size_t end = std::min(order.size(), start + W);
      std::vector<nn::Tensor> inputs;
      std::vector<int> targets;
      for (std::size_t k = start; k < end; ++k) {
        const scenario::LabeledScenario* s = train[order[k]];
        const int y = s->label();
        if (y < 1 || y > num_classes)
          throw ContractError("step2: label outside 1..K: " + std::to_string(y));
        inputs.push_back(nn::to_input(s->tensor));
        targets.push_back(y - 1);
      }

      std::vector<nn::ForwardCache> caches;
      forward_all(network, inputs, nn::HeadSelect{.l = true}, config.threads, caches);
      std::vector<std::vector<double>> probs(caches.size()), dprobs(caches.size());
      for (std::size_t k = 0; k < caches.size(); ++k) {
        probs[k] = caches[k].l_probs;
        dprobs[k].assign(probs[k].size(), 0.0);
        if (argmax_index(probs[k]) == targets[k]) ++correct;
      }
      epoch_loss += nn::categorical_cross_entropy(probs, targets, &dprobs) *
                    static_cast<double>(caches.size());

      nn::Gradients grads = network.make_gradients();
      backward_all(network, caches, &dprobs, nullptr, config.threads, grads);
      nn::sgd_step(network, grads, config.finetune_sgd, state);
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss_cat = log.loss_total = epoch_loss / static_cast<double>(train.size());
    log.labeled_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    result.log.push_back(log);
  }

  if (!validation.empty()) {
    std::vector<nn::Tensor> inputs;
    std::vector<int> targets;
    for (const auto* s : validation) {
      inputs.push_back(nn::to_input(s->tensor));
      targets.push_back(s->label() - 1);
    }
    std::vector<nn::ForwardCache> caches;
    forward_all(network, inputs, nn::HeadSelect{.l = true}, config.threads, caches);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < caches.size(); ++k)
      if (argmax_index(caches[k].l_probs) == targets[k]) ++correct;
    result.validation_accuracy =
        static_cast<double>(correct) / static_cast<double>(validation.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Step III
// ---------------------------------------------------------------------------

urf::Matrix extract_features(const nn::Network& network,
                             const std::vector<const scenario::ScenarioTensor*>& tensors,
                             int threads) {
  urf::Matrix features(tensors.size(), static_cast<std::size_t>(network.feature_dim()));
  parallel_chunks(tensors.size(), threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t k = b; k < e; ++k) {
      const auto h = network.features_of(nn::to_input(*tensors[k]));
      std::copy(h.begin(), h.end(),
                features.data.begin() + static_cast<std::ptrdiff_t>(k * h.size()));
    }
  });
  return features;
}

ClusterAssignment assign_clusters(const nn::Network& network,
                                  const std::vector<const scenario::ScenarioTensor*>& unlabeled,
                                  int threads) {
  if (!network.has_head_u()) throw ContractError("assign_clusters: no clustering head");
  ClusterAssignment out;
  out.cluster.resize(unlabeled.size());
  out.probabilities.resize(unlabeled.size());
  parallel_chunks(unlabeled.size(), threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t k = b; k < e; ++k) {
      const auto cache = network.forward(nn::to_input(*unlabeled[k]), nn::HeadSelect{.u = true});
      out.probabilities[k] = cache.u_probs;
      out.cluster[k] = argmax_index(cache.u_probs) + 1;  // ids are 1-based
    }
  });
  return out;
}

namespace {

// Cycling labelled sampler: reshuffles whenever the pool is exhausted.
class LabeledCycle {
 public:
  LabeledCycle(std::size_t n, Rng rng) : n_(n), rng_(std::move(rng)) {
    if (n_ > 0) refill();
  }
  std::vector<std::size_t> take(std::size_t count) {
    std::vector<std::size_t> out;
    while (out.size() < count && n_ > 0) {
      if (cursor_ == order_.size()) refill();
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  void refill() {
    order_ = shuffled_indices(n_, rng_);
    cursor_ = 0;
  }
  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

Step3Result step3_cluster(nn::Network& network,
                          const std::vector<const scenario::LabeledScenario*>& labeled,
                          const std::vector<const scenario::ScenarioTensor*>& unlabeled, int q,
                          const PipelineConfig& config, const std::vector<int>* truth) {
  config.validate();
  if (q < 2) throw ConfigError("step3: Q must be >= 2");
  if (unlabeled.size() < 2) throw ConfigError("step3: need at least 2 unlabelled scenarios");
  if (truth && truth->size() != unlabeled.size())
    throw ContractError("step3: truth vector length mismatch");

  const bool use_cat = config.use_cat_loss && network.has_head_l();
  const int num_labeled_classes = network.head_l_dim();
  if (use_cat) network.extend_head_l(q, config.seed + 0x53);
  network.attach_head_u(q, config.seed + 0x54);
  network.set_frozen_prefix(network.num_param_layers() >= 2 ? 1 : 0);

  const bool use_rfap = config.similarity == "rfap";
  nn::SgdState state;
  Rng order_rng = make_stream(config.seed, 0x3C01);
  Rng labeled_rng = make_stream(config.seed, 0x3C02);
  Rng augment_rng = make_stream(config.seed, 0x3C03);
  LabeledCycle labeled_cycle(labeled.size(), std::move(labeled_rng));

  const int W = config.cluster_sgd.batch_size;
  const std::size_t u_per_batch =
      labeled.empty() ? static_cast<std::size_t>(W)
                      : std::max<std::size_t>(2, static_cast<std::size_t>(W) / 2);
  const std::size_t l_per_batch = labeled.empty() ? 0 : static_cast<std::size_t>(W) - u_per_batch;

  Step3Result result;
  for (int beta = 0; beta < config.cluster_sgd.epochs; ++beta) {
    // (a) representation set for all unlabelled data, (b) fresh URF on it.
    const urf::Matrix features = extract_features(network, unlabeled, config.threads);
    urf::Forest forest;
    if (use_rfap && config.use_cluster_loss) {
      urf::UrfParams params = config.urf;
      params.seed = make_stream(config.seed, 0x3C10 + static_cast<std::uint64_t>(beta))();
      forest = urf::train_urf(features, config.urf_trees, params, config.threads);
      if (forest.trivial_trees == forest.size()) ++result.degenerate_urf_epochs;
    }

    const double omega = nn::ramp_up_weight(beta, config.ramp_length, config.ramp_lambda);
    const auto u_order = shuffled_indices(unlabeled.size(), order_rng);

    double ep_cat = 0, ep_cluster = 0, ep_cons = 0, ep_total = 0;
    std::size_t ep_batches = 0, l_correct = 0, l_seen = 0;

    for (std::size_t u_start = 0; u_start + 2 <= u_order.size() || u_start == 0;
         u_start += u_per_batch) {
      if (u_start >= u_order.size()) break;
      const std::size_t u_end = std::min(u_order.size(), u_start + u_per_batch);
      if (u_end - u_start < 2) break;  // similarity needs at least a pair

      const auto l_batch = labeled_cycle.take(l_per_batch);
      const std::size_t L = l_batch.size();
      const std::size_t U = u_end - u_start;
      const std::size_t B = L + U;

      std::vector<nn::Tensor> inputs;
      std::vector<int> true_labels(L);
      inputs.reserve(B);
      for (std::size_t k = 0; k < L; ++k) {
        const auto* s = labeled[l_batch[k]];
        true_labels[k] = s->label();
        inputs.push_back(nn::to_input(s->tensor));
      }
      std::vector<const scenario::ScenarioTensor*> u_tensors(U);
      for (std::size_t k = 0; k < U; ++k) {
        u_tensors[k] = unlabeled[u_order[u_start + k]];
        inputs.push_back(nn::to_input(*u_tensors[k]));
      }

      const nn::HeadSelect sel{.l = use_cat || (config.use_consistency_loss && L > 0),
                               .u = true};
      std::vector<nn::ForwardCache> caches;
      forward_all(network, inputs, sel, config.threads, caches);

      std::vector<nn::ForwardCache> aug_caches;
      if (config.use_consistency_loss) {
        std::vector<nn::Tensor> aug_inputs;
        aug_inputs.reserve(B);
        for (std::size_t k = 0; k < L; ++k) {
          scenario::AugmentParams ap = config.augment;
          ap.seed = augment_rng();
          aug_inputs.push_back(nn::to_input(scenario::augment(labeled[l_batch[k]]->tensor, ap)));
        }
        for (std::size_t k = 0; k < U; ++k) {
          scenario::AugmentParams ap = config.augment;
          ap.seed = augment_rng();
          aug_inputs.push_back(nn::to_input(scenario::augment(*u_tensors[k], ap)));
        }
        forward_all(network, aug_inputs, sel, config.threads, aug_caches);
      }

      // Gradient slots per sample and head.
      std::vector<std::vector<double>> dl(B), du(B), dl_aug(B), du_aug(B);
      const int lq = network.head_l_dim();
      const int uq = network.head_u_dim();
      for (std::size_t k = 0; k < B; ++k) {
        if (sel.l) dl[k].assign(static_cast<std::size_t>(lq), 0.0);
        du[k].assign(static_cast<std::size_t>(uq), 0.0);
      }

      double batch_cat = 0, batch_cluster = 0, batch_cons = 0;

      if (use_cat) {
        std::vector<std::vector<double>> l_probs(B);
        std::vector<int> targets(B);
        for (std::size_t k = 0; k < B; ++k) {
          l_probs[k] = caches[k].l_probs;
          if (k < L) {
            targets[k] = true_labels[k] - 1;
            if (argmax_index(l_probs[k]) == targets[k]) ++l_correct;
            ++l_seen;
          } else {
            // Pseudo-label from the clustering head, recomputed per batch.
            targets[k] = num_labeled_classes + argmax_index(caches[k].u_probs);
          }
        }
        batch_cat = nn::categorical_cross_entropy(l_probs, targets, &dl);
      }

      if (config.use_cluster_loss) {
        urf::Matrix batch_features(U, static_cast<std::size_t>(network.feature_dim()));
        for (std::size_t k = 0; k < U; ++k)
          std::copy(caches[L + k].features.begin(), caches[L + k].features.end(),
                    batch_features.data.begin() +
                        static_cast<std::ptrdiff_t>(k * caches[L + k].features.size()));
        urf::Matrix S =
            use_rfap ? urf::similarity_matrix(forest, batch_features, config.threads)
                     : eval::alt_similarity(batch_features,
                                            eval::similarity_method_from_string(config.similarity),
                                            config.alt_similarity);

        std::vector<std::vector<double>> u_probs(U), du_u(U);
        for (std::size_t k = 0; k < U; ++k) {
          u_probs[k] = caches[L + k].u_probs;
          du_u[k].assign(u_probs[k].size(), 0.0);
        }
        batch_cluster = nn::pairwise_cluster_loss(S.data, u_probs, &du_u);
        for (std::size_t k = 0; k < U; ++k)
          for (std::size_t z = 0; z < du_u[k].size(); ++z) du[L + k][z] += du_u[k][z];
      }

      if (config.use_consistency_loss) {
        for (std::size_t k = 0; k < B; ++k) {
          if (sel.l) dl_aug[k].assign(static_cast<std::size_t>(lq), 0.0);
          du_aug[k].assign(static_cast<std::size_t>(uq), 0.0);
        }
        if (L > 0 && sel.l) {
          std::vector<std::vector<double>> a(L), b(L), da(L), db(L);
          for (std::size_t k = 0; k < L; ++k) {
            a[k] = caches[k].l_probs;
            b[k] = aug_caches[k].l_probs;
            da[k].assign(a[k].size(), 0.0);
            db[k].assign(b[k].size(), 0.0);
          }
          batch_cons += nn::consistency_loss(a, b, &da, &db);
          for (std::size_t k = 0; k < L; ++k)
            for (std::size_t z = 0; z < da[k].size(); ++z) {
              dl[k][z] += omega * da[k][z];
              dl_aug[k][z] += omega * db[k][z];
            }
        }
        {
          std::vector<std::vector<double>> a(U), b(U), da(U), db(U);
          for (std::size_t k = 0; k < U; ++k) {
            a[k] = caches[L + k].u_probs;
            b[k] = aug_caches[L + k].u_probs;
            da[k].assign(a[k].size(), 0.0);
            db[k].assign(b[k].size(), 0.0);
          }
          batch_cons += nn::consistency_loss(a, b, &da, &db);
          for (std::size_t k = 0; k < U; ++k)
            for (std::size_t z = 0; z < da[k].size(); ++z) {
              du[L + k][z] += omega * da[k][z];
              du_aug[L + k][z] += omega * db[k][z];
            }
        }
      }

      nn::Gradients grads = network.make_gradients();
      backward_all(network, caches, sel.l ? &dl : nullptr, &du, config.threads, grads);
      if (config.use_consistency_loss)
        backward_all(network, aug_caches, sel.l ? &dl_aug : nullptr, &du_aug, config.threads,
                     grads);
      nn::sgd_step(network, grads, config.cluster_sgd, state);

      ep_cat += batch_cat;
      ep_cluster += batch_cluster;
      ep_cons += batch_cons;
      ep_total += batch_cat + batch_cluster + omega * batch_cons;
      ++ep_batches;
    }

    // (e) record assignments for this epoch.
    ClusterAssignment assignment = assign_clusters(network, unlabeled, config.threads);
    assignment.epoch = beta;

    EpochLog log;
    log.epoch = beta;
    log.omega = omega;
    const double nb = ep_batches ? static_cast<double>(ep_batches) : 1.0;
    log.loss_cat = ep_cat / nb;
    log.loss_cluster = ep_cluster / nb;
    log.loss_cons = ep_cons / nb;
    log.loss_total = ep_total / nb;
    log.labeled_accuracy =
        l_seen ? static_cast<double>(l_correct) / static_cast<double>(l_seen) : -1;
    if (truth) log.acc_vs_truth = eval::hungarian_acc(assignment.cluster, *truth);
    result.log.push_back(log);
    result.history.push_back(std::move(assignment));
  }

  if (result.history.empty()) throw ConfigError("step3: zero epochs configured");
  result.final_assignment = result.history.back();
  return result;
}

}  // namespace rfap::pipeline
