#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rfap/grid.hpp"

namespace rfap::scenario {

/// One of the 24 orderings of a 4-frame sequence. Indices follow the
/// lexicographic enumeration of the tuples: index 1 = (1,2,3,4),
/// index 24 = (4,3,2,1).
struct PermutationLabel {
  int index = 1;                     // 1..24
  std::array<int, 4> order{1, 2, 3, 4};

  static constexpr int kCount = 24;
  static PermutationLabel from_index(int index);          // throws ConfigError
  static PermutationLabel from_order(const std::array<int, 4>& order);
  PermutationLabel inverse() const;
  /// Function composition: applying `compose(p, q)` equals applying q after p
  /// through shuffle_temporal (shuffle(shuffle(t, p), q) = shuffle(t, compose(p, q))).
  static PermutationLabel compose(const PermutationLabel& p, const PermutationLabel& q);
};

/// Temporal stack of N_ts occupancy grids describing one traffic scenario.
/// frame_order tags how the frames are ordered relative to the recording
/// (identity for real data, the applied permutation after shuffling).
struct ScenarioTensor {
  std::vector<OccupancyGrid> frames;
  PermutationLabel frame_order;

  int rows() const { return frames.empty() ? 0 : frames[0].rows; }
  int cols() const { return frames.empty() ? 0 : frames[0].cols; }
  int n_frames() const { return static_cast<int>(frames.size()); }
  std::size_t cell_count() const;
  void validate() const;  // equal frame shapes, at least 2 frames
};

namespace label_audit {
/// Number of ground-truth label reads since the last reset. Step I of the
/// pipeline must leave this untouched; tests assert on it.
std::uint64_t count();
void reset();
void record_read();
}  // namespace label_audit

/// Scenario with its ground-truth class id y in {1..K}. Label reads go
/// through the audited accessor.
class LabeledScenario {
 public:
  LabeledScenario() = default;
  LabeledScenario(ScenarioTensor tensor, int label)
      : tensor(std::move(tensor)), label_(label) {}

  ScenarioTensor tensor;

  int label() const {
    label_audit::record_read();
    return label_;
  }
  void set_label(int label) { label_ = label; }

 private:
  int label_ = 0;
};

/// Labelled + unlabelled scenario pool. Ground truth of the unlabelled part
/// (when known, e.g. synthetic data) is kept aside purely for evaluation.
struct ScenarioDataset {
  std::vector<LabeledScenario> labeled;
  std::vector<ScenarioTensor> unlabeled;
  std::vector<int> unlabeled_truth;  // parallel to `unlabeled`; empty if unknown
  std::vector<std::string> class_names;
  int num_labeled_classes = 0;  // K
  int q_truth = 0;              // number of distinct unlabelled classes, 0 if unknown
  GridConfig grid;

  std::size_t size() const { return labeled.size() + unlabeled.size(); }
  void validate() const;
};

/// Reorders the four frames: output frame k = input frame perm.order[k].
/// Only defined for N_ts = 4 (the 24-way pretext task).
ScenarioTensor shuffle_temporal(const ScenarioTensor& tensor, const PermutationLabel& perm);

struct AugmentParams {
  double erase_patch_fraction = 0.0;  // in [0, 1)
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Optional capture of intermediate augmentation state for statistical tests.
struct AugmentTrace {
  std::vector<double> pre_clip;  // all cell values after noise, before clipping
};

/// One random spatio-temporal patch is set to 0.5 (unknown), then zero-mean
/// Gaussian noise is added and the result clipped to [0, 1]. Deterministic
/// given the seed; degenerate parameters reproduce the input bit-exactly.
ScenarioTensor augment(const ScenarioTensor& tensor, const AugmentParams& params,
                       AugmentTrace* trace = nullptr);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct DatasetSplit {
  ScenarioDataset train;
  ScenarioDataset val;
  ScenarioDataset test;
};

/// Stratified split over labelled classes and unlabelled truth classes.
/// The parts form a disjoint, exhaustive partition; per-class sizes follow
/// largest-remainder apportionment of the ratios.
DatasetSplit split_dataset(const ScenarioDataset& dataset, const SplitRatios& ratios,
                           std::uint64_t seed);

/// Splits a fully labelled dataset into labelled classes (renumbered 1..K in
/// the given order) and unlabelled classes (truth renumbered 1..Q). The two
/// class lists must be disjoint.
ScenarioDataset partition_by_classes(const ScenarioDataset& dataset,
                                     const std::vector<int>& labeled_classes,
                                     const std::vector<int>& unlabeled_classes);

}  // namespace rfap::scenario
