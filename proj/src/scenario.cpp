#include "rfap/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rfap/common.hpp"

namespace rfap::scenario {

namespace label_audit {
namespace {
std::atomic<std::uint64_t> g_reads{0};
}
std::uint64_t count() { return g_reads.load(); }
void reset() { g_reads.store(0); }
void record_read() { g_reads.fetch_add(1, std::memory_order_relaxed); }
}  // namespace label_audit

// ---------------------------------------------------------------------------
// PermutationLabel
// ---------------------------------------------------------------------------

PermutationLabel PermutationLabel::from_index(int index) {
  if (index < 1 || index > kCount)
    throw ConfigError("permutation index must be in 1..24, got " + std::to_string(index));
  std::array<int, 4> pool{1, 2, 3, 4};
  PermutationLabel out;
  out.index = index;
  int rest = index - 1;
  int fact[4] = {6, 2, 1, 1};  // 3!, 2!, 1!, 0!
  std::vector<int> avail(pool.begin(), pool.end());
  for (int pos = 0; pos < 4; ++pos) {
    const int pick = rest / fact[pos];
    rest %= fact[pos];
    out.order[pos] = avail[pick];
    avail.erase(avail.begin() + pick);
  }
  return out;
}

PermutationLabel PermutationLabel::from_order(const std::array<int, 4>& order) {
  std::array<bool, 5> seen{};
  for (int v : order) {
    if (v < 1 || v > 4 || seen[v]) throw ConfigError("invalid 4-permutation tuple");
    seen[v] = true;
  }
  std::vector<int> avail{1, 2, 3, 4};
  int fact[4] = {6, 2, 1, 1};
  int index = 0;
  for (int pos = 0; pos < 4; ++pos) {
    auto it = std::find(avail.begin(), avail.end(), order[pos]);
    index += static_cast<int>(it - avail.begin()) * fact[pos];
    avail.erase(it);
  }
  PermutationLabel out;
  out.order = order;
  out.index = index + 1;
  return out;
}

PermutationLabel PermutationLabel::inverse() const {
  std::array<int, 4> inv{};
  for (int pos = 0; pos < 4; ++pos) inv[order[pos] - 1] = pos + 1;
  return from_order(inv);
}

PermutationLabel PermutationLabel::compose(const PermutationLabel& p, const PermutationLabel& q) {
  // shuffle(shuffle(t, p), q)[k] = shuffle(t, p)[q[k]] = t[p[q[k]]]
  std::array<int, 4> r{};
  for (int pos = 0; pos < 4; ++pos) r[pos] = p.order[q.order[pos] - 1];
  return from_order(r);
}

// ---------------------------------------------------------------------------
// ScenarioTensor
// ---------------------------------------------------------------------------

std::size_t ScenarioTensor::cell_count() const {
  return frames.empty() ? 0 : frames.size() * frames[0].values.size();
}

void ScenarioTensor::validate() const {
  if (frames.size() < 2) throw ShapeError("scenario tensor needs at least 2 frames");
  for (const auto& f : frames) {
    if (f.rows != frames[0].rows || f.cols != frames[0].cols)
      throw ShapeError("scenario tensor frames must share one grid shape");
  }
}

void ScenarioDataset::validate() const {
  if (!unlabeled_truth.empty() && unlabeled_truth.size() != unlabeled.size())
    throw ContractError("unlabeled_truth must parallel unlabeled");
}

ScenarioTensor shuffle_temporal(const ScenarioTensor& tensor, const PermutationLabel& perm) {
  if (tensor.n_frames() != 4)
    throw ShapeError("shuffle_temporal requires exactly 4 frames (24-way pretext)");
  ScenarioTensor out;
  out.frames.reserve(4);
  for (int k = 0; k < 4; ++k) out.frames.push_back(tensor.frames[perm.order[k] - 1]);
  out.frame_order = PermutationLabel::compose(tensor.frame_order, perm);
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

ScenarioTensor augment(const ScenarioTensor& tensor, const AugmentParams& params,
                       AugmentTrace* trace) {
  if (params.erase_patch_fraction < 0.0 || params.erase_patch_fraction >= 1.0)
    throw ConfigError("erase_patch_fraction must be in [0, 1)");
  if (params.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

  ScenarioTensor out = tensor;
  if (params.erase_patch_fraction == 0.0 && params.noise_sigma == 0.0) {
    if (trace) {
      trace->pre_clip.clear();
      for (const auto& f : out.frames)
        trace->pre_clip.insert(trace->pre_clip.end(), f.values.begin(), f.values.end());
    }
    return out;
  }

  const int I = tensor.rows();
  const int J = tensor.cols();
  const int T = tensor.n_frames();
  Rng rng = make_stream(params.seed, 0xA06);

  if (params.erase_patch_fraction > 0.0) {
    const double target = params.erase_patch_fraction * static_cast<double>(I) * J * T;
    // Box dimensions: random temporal extent, then a roughly square spatial
    // footprint covering the remaining volume.
    const int dt = std::uniform_int_distribution<int>(1, T)(rng);
    const double area = std::max(1.0, target / dt);
    const int max_di = std::min<int>(I, static_cast<int>(std::ceil(area)));
    const int di = std::uniform_int_distribution<int>(1, max_di)(rng);
    const int dj = std::min<int>(J, std::max<int>(1, static_cast<int>(std::llround(area / di))));
    const int t0 = std::uniform_int_distribution<int>(0, T - dt)(rng);
    const int i0 = std::uniform_int_distribution<int>(0, I - di)(rng);
    const int j0 = std::uniform_int_distribution<int>(0, J - dj)(rng);
    for (int t = t0; t < t0 + dt; ++t)
      for (int i = i0; i < i0 + di; ++i)
        for (int j = j0; j < j0 + dj; ++j) out.frames[t].at(i, j) = 0.5;
  }

  if (trace) trace->pre_clip.clear();
  if (params.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, params.noise_sigma);
    for (auto& f : out.frames) {
      for (auto& v : f.values) {
        v += noise(rng);
        if (trace) trace->pre_clip.push_back(v);
        v = std::clamp(v, 0.0, 1.0);
      }
    }
  } else if (trace) {
    for (const auto& f : out.frames)
      trace->pre_clip.insert(trace->pre_clip.end(), f.values.begin(), f.values.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of n items into parts proportional to
// ratios; guarantees the parts sum to n.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
  const double ratios[3] = {r.train, r.val, r.test};
  std::array<std::size_t, 3> counts{};
  double rema[3];
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    const double exact = n * ratios[p];
    counts[p] = static_cast<std::size_t>(std::floor(exact));
    rema[p] = exact - counts[p];
    assigned += counts[p];
  }
  while (assigned < n) {
    int best = 0;
    for (int p = 1; p < 3; ++p)
      if (rema[p] > rema[best]) best = p;
    ++counts[best];
    rema[best] = -1.0;
    ++assigned;
  }
  return counts;
}

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0)
    throw ConfigError("split ratios must be non-negative");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
}

int positive_parts(const SplitRatios& r) {
  return (r.train > 0) + (r.val > 0) + (r.test > 0);
}

}  // namespace

DatasetSplit split_dataset(const ScenarioDataset& dataset, const SplitRatios& ratios,
                           std::uint64_t seed) {
  check_ratios(ratios);
  DatasetSplit out;
  for (ScenarioDataset* part : {&out.train, &out.val, &out.test}) {
    part->class_names = dataset.class_names;
    part->num_labeled_classes = dataset.num_labeled_classes;
    part->q_truth = dataset.q_truth;
    part->grid = dataset.grid;
  }

  const int parts_needed = positive_parts(ratios);
  Rng rng = make_stream(seed, 0x591);

  // Labelled samples stratified by class.
  std::vector<std::vector<std::size_t>> by_class;
  std::vector<int> class_ids;
  for (std::size_t idx = 0; idx < dataset.labeled.size(); ++idx) {
    const int y = dataset.labeled[idx].label();
    auto it = std::find(class_ids.begin(), class_ids.end(), y);
    std::size_t c;
    if (it == class_ids.end()) {
      class_ids.push_back(y);
      by_class.emplace_back();
      c = class_ids.size() - 1;
    } else {
      c = static_cast<std::size_t>(it - class_ids.begin());
    }
    by_class[c].push_back(idx);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& ids = by_class[c];
    if (ids.size() < static_cast<std::size_t>(parts_needed))
      throw ConfigError("stratification error: class " + std::to_string(class_ids[c]) +
                        " has fewer samples than split parts");
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto counts = apportion(ids.size(), ratios);
    std::size_t pos = 0;
    ScenarioDataset* parts[3] = {&out.train, &out.val, &out.test};
    for (int p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < counts[p]; ++k, ++pos)
        parts[p]->labeled.push_back(dataset.labeled[ids[pos]]);
  }

  // Unlabelled samples stratified by ground-truth class when known, one
  // stratum otherwise.
  std::vector<std::vector<std::size_t>> u_by_class;
  std::vector<int> u_class_ids;
  for (std::size_t idx = 0; idx < dataset.unlabeled.size(); ++idx) {
    const int y = dataset.unlabeled_truth.empty() ? 0 : dataset.unlabeled_truth[idx];
    auto it = std::find(u_class_ids.begin(), u_class_ids.end(), y);
    std::size_t c;
    if (it == u_class_ids.end()) {
      u_class_ids.push_back(y);
      u_by_class.emplace_back();
      c = u_class_ids.size() - 1;
    } else {
      c = static_cast<std::size_t>(it - u_class_ids.begin());
    }
    u_by_class[c].push_back(idx);
  }
  for (std::size_t c = 0; c < u_by_class.size(); ++c) {
    auto& ids = u_by_class[c];
    if (ids.size() < static_cast<std::size_t>(parts_needed))
      throw ConfigError("stratification error: unlabeled class " +
                        std::to_string(u_class_ids[c]) + " has fewer samples than split parts");
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto counts = apportion(ids.size(), ratios);
    std::size_t pos = 0;
    ScenarioDataset* parts[3] = {&out.train, &out.val, &out.test};
    for (int p = 0; p < 3; ++p) {
      for (std::size_t k = 0; k < counts[p]; ++k, ++pos) {
        parts[p]->unlabeled.push_back(dataset.unlabeled[ids[pos]]);
        if (!dataset.unlabeled_truth.empty())
          parts[p]->unlabeled_truth.push_back(dataset.unlabeled_truth[ids[pos]]);
      }
    }
  }
  return out;
}

ScenarioDataset partition_by_classes(const ScenarioDataset& dataset,
                                     const std::vector<int>& labeled_classes,
                                     const std::vector<int>& unlabeled_classes) {
  for (int c : labeled_classes)
    if (std::find(unlabeled_classes.begin(), unlabeled_classes.end(), c) !=
        unlabeled_classes.end())
      throw ConfigError("labeled and unlabeled class lists must be disjoint");

  auto renumber = [](const std::vector<int>& classes, int y) {
    auto it = std::find(classes.begin(), classes.end(), y);
    return it == classes.end() ? 0 : static_cast<int>(it - classes.begin()) + 1;
  };

  ScenarioDataset out;
  out.grid = dataset.grid;
  out.num_labeled_classes = static_cast<int>(labeled_classes.size());
  out.q_truth = static_cast<int>(unlabeled_classes.size());
  for (int c : labeled_classes) {
    const std::size_t idx = static_cast<std::size_t>(c) - 1;
    out.class_names.push_back(idx < dataset.class_names.size() ? dataset.class_names[idx]
                                                               : "class-" + std::to_string(c));
  }
  for (const auto& s : dataset.labeled) {
    const int y = s.label();
    if (int k = renumber(labeled_classes, y); k > 0) {
      out.labeled.emplace_back(s.tensor, k);
    } else if (int q = renumber(unlabeled_classes, y); q > 0) {
      out.unlabeled.push_back(s.tensor);
      out.unlabeled_truth.push_back(q);
    }
  }
  return out;
}

}  // namespace rfap::scenario
