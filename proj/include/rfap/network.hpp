#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfap/layers.hpp"
#include "rfap/scenario.hpp"

namespace rfap::nn {

/// One parameter block (weights + bias) and its gradient/velocity twin.
struct ParamBlock {
  Tensor w;
  std::vector<double> b;

  void zero();
  void add_scaled(const ParamBlock& other, double scale);
  bool all_finite() const;
  std::size_t size() const { return w.size() + b.size(); }
};

/// Gradient (or optimiser-state) container mirroring a network's parameter
/// layout: one block per parametric backbone layer, plus one per head.
struct Gradients {
  std::vector<ParamBlock> backbone;  // parallel to the network's param layers
  std::optional<ParamBlock> head_l;
  std::optional<ParamBlock> head_u;

  void zero();
  void add(const Gradients& other);
};

/// Per-sample forward activations kept for the backward pass.
struct ForwardCache {
  Tensor input;
  std::vector<Tensor> acts;                       // output of each backbone layer
  std::vector<std::vector<std::size_t>> argmax;   // per maxpool layer
  std::vector<double> features;                   // backbone output h
  std::vector<double> l_logits, l_probs;          // classification head
  std::vector<double> u_logits, u_probs;          // clustering head
};

struct HeadSelect {
  bool l = false;
  bool u = false;
};

/// Feature extractor f(G) with up to two dense+softmax heads. The backbone
/// is a fixed layer vocabulary (conv3d / maxpool3d / relu / flatten / dense /
/// softmax); heads are always a dense layer into a softmax. A frozen prefix
/// of parametric backbone layers is excluded from gradients and updates and
/// stays bit-identical through any training.
class Network {
 public:
  Network(std::array<int, 4> input_shape /*(C,T,I,J)*/, std::vector<LayerSpec> backbone,
          std::uint64_t seed);

  /// conv(8,3x3x2) relu pool(2x2x1) conv(16,3x3x2) relu pool(1x1x2) flatten
  /// dense(64) relu  — the desk-scale spatio-temporal backbone.
  static std::vector<LayerSpec> desk_backbone(int feature_dim = 64);

  const std::array<int, 4>& input_shape() const { return input_shape_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<LayerSpec>& backbone() const { return backbone_; }

  // Heads. Attaching replaces any existing head of that slot.
  void attach_head_l(int out_dim, std::uint64_t seed);
  void attach_head_u(int out_dim, std::uint64_t seed);
  void detach_head_l() { head_l_.reset(); }
  void detach_head_u() { head_u_.reset(); }
  bool has_head_l() const { return head_l_.has_value(); }
  bool has_head_u() const { return head_u_.has_value(); }
  int head_l_dim() const { return head_l_ ? head_l_->w.shape[0] : 0; }
  int head_u_dim() const { return head_u_ ? head_u_->w.shape[0] : 0; }
  /// Grows head_l by `extra` outputs; the first rows keep their values,
  /// the new rows are freshly initialised.
  void extend_head_l(int extra, std::uint64_t seed);

  // Freezing. `first_trainable` counts parametric backbone layers: 0 trains
  // everything, n freezes the first n parametric layers. Heads are always
  // trainable.
  void set_frozen_prefix(int first_trainable);
  int frozen_prefix() const { return frozen_prefix_; }
  int num_param_layers() const { return static_cast<int>(param_.size()); }

  ForwardCache forward(const Tensor& input, HeadSelect heads) const;
  std::vector<double> features_of(const Tensor& input) const;

  /// Backpropagates head/feature gradients through the cached activations,
  /// accumulating into `grads` (which must match the current layout; see
  /// make_gradients). Backward stops once every remaining layer is frozen.
  void backward(const ForwardCache& cache, const std::vector<double>* dprobs_l,
                const std::vector<double>* dprobs_u, const std::vector<double>* dfeatures,
                Gradients& grads) const;

  Gradients make_gradients() const;  // zeroed, layout-matched

  // Flat access to trainable parameters, in canonical order (backbone blocks
  // then head_l then head_u; weights before bias inside a block). Used by the
  // optimiser and the finite-difference checker.
  std::size_t trainable_parameter_count() const;
  double get_trainable(std::size_t flat_index) const;
  void add_to_trainable(std::size_t flat_index, double delta);
  std::vector<double> flatten_trainable(const Gradients& grads) const;

  const std::vector<ParamBlock>& param_blocks() const { return param_; }
  ParamBlock& mutable_param_block(int idx) { return param_[idx]; }
  const std::optional<ParamBlock>& head_l_block() const { return head_l_; }
  const std::optional<ParamBlock>& head_u_block() const { return head_u_; }
  ParamBlock& mutable_head_l() { return *head_l_; }
  ParamBlock& mutable_head_u() { return *head_u_; }
  bool param_layer_frozen(int idx) const { return idx < frozen_prefix_; }

  /// Checkpoint: <prefix>.json manifest plus <prefix>.bin little-endian f64
  /// parameter blob in manifest order. `extra` lands in the manifest as-is
  /// (the pipeline stores its RNG state and epoch there).
  void save(const std::string& prefix,
            const std::vector<std::pair<std::string, std::string>>& extra = {}) const;
  static Network load(const std::string& prefix,
                      std::vector<std::pair<std::string, std::string>>* extra = nullptr);

 private:
  void init_params(std::uint64_t seed);
  ParamBlock make_head(int out_dim, std::uint64_t seed) const;

  std::array<int, 4> input_shape_;
  std::vector<LayerSpec> backbone_;
  std::vector<std::vector<int>> layer_shapes_;  // output shape per backbone layer
  std::vector<int> param_layer_of_;             // backbone idx -> param idx or -1
  std::vector<ParamBlock> param_;               // parametric backbone layers only
  std::optional<ParamBlock> head_l_;
  std::optional<ParamBlock> head_u_;
  int feature_dim_ = 0;
  int frozen_prefix_ = 0;
};

/// Converts a scenario tensor into network input layout (1, T, I, J).
Tensor to_input(const scenario::ScenarioTensor& tensor);

}  // namespace rfap::nn
