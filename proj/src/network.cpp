#include "rfap/network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace rfap::nn {

using nlohmann::json;

void ParamBlock::zero() {
  w.fill(0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

void ParamBlock::add_scaled(const ParamBlock& other, double scale) {
  for (std::size_t k = 0; k < w.data.size(); ++k) w.data[k] += scale * other.w.data[k];
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += scale * other.b[k];
}

bool ParamBlock::all_finite() const {
  if (!w.all_finite()) return false;
  for (double v : b)
    if (!std::isfinite(v)) return false;
  return true;
}

void Gradients::zero() {
  for (auto& p : backbone) p.zero();
  if (head_l) head_l->zero();
  if (head_u) head_u->zero();
}

void Gradients::add(const Gradients& other) {
  for (std::size_t k = 0; k < backbone.size(); ++k) backbone[k].add_scaled(other.backbone[k], 1.0);
  if (head_l && other.head_l) head_l->add_scaled(*other.head_l, 1.0);
  if (head_u && other.head_u) head_u->add_scaled(*other.head_u, 1.0);
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

std::vector<LayerSpec> Network::desk_backbone(int feature_dim) {
  std::vector<LayerSpec> layers;
  LayerSpec conv1{.kind = LayerKind::Conv3d, .out_channels = 8, .kernel = {3, 3, 2}};
  LayerSpec pool1{.kind = LayerKind::MaxPool3d, .window = {2, 2, 1}};
  LayerSpec conv2{.kind = LayerKind::Conv3d, .out_channels = 16, .kernel = {3, 3, 2}};
  LayerSpec pool2{.kind = LayerKind::MaxPool3d, .window = {1, 1, 2}};
  LayerSpec relu{.kind = LayerKind::Relu};
  LayerSpec flat{.kind = LayerKind::Flatten};
  LayerSpec dense{.kind = LayerKind::Dense, .units = feature_dim};
  return {conv1, relu, pool1, conv2, relu, pool2, flat, dense, relu};
}

Network::Network(std::array<int, 4> input_shape, std::vector<LayerSpec> backbone,
                 std::uint64_t seed)
    : input_shape_(input_shape), backbone_(std::move(backbone)) {
  // Resolve shapes layer by layer; parameters get their dimensions here.
  std::vector<int> cur(input_shape_.begin(), input_shape_.end());
  param_layer_of_.assign(backbone_.size(), -1);
  for (std::size_t li = 0; li < backbone_.size(); ++li) {
    const LayerSpec& spec = backbone_[li];
    switch (spec.kind) {
      case LayerKind::Conv3d: {
        Tensor kernel({spec.out_channels, cur[0], spec.kernel.t, spec.kernel.i, spec.kernel.j});
        cur = conv3d_output_shape(cur, kernel, spec.stride);
        param_layer_of_[li] = static_cast<int>(param_.size());
        param_.push_back(ParamBlock{std::move(kernel),
                                    std::vector<double>(spec.out_channels, 0.0)});
        break;
      }
      case LayerKind::MaxPool3d:
        cur = maxpool3d_output_shape(cur, spec.window);
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::Flatten: {
        cur = {static_cast<int>(Tensor::element_count(cur))};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 1) throw ShapeError("dense layer needs a flattened input");
        param_layer_of_[li] = static_cast<int>(param_.size());
        param_.push_back(
            ParamBlock{Tensor({spec.units, cur[0]}), std::vector<double>(spec.units, 0.0)});
        cur = {spec.units};
        break;
      }
      case LayerKind::Softmax:
        throw ConfigError("softmax belongs to the heads, not the backbone");
    }
    layer_shapes_.push_back(cur);
  }
  if (cur.size() != 1)
    throw ShapeError("backbone must end in a feature vector, got " + shape_str(cur));
  feature_dim_ = cur[0];
  init_params(seed);
}

namespace {
void init_uniform(Tensor& w, std::vector<double>& b, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : w.data) v = dist(rng);
  std::fill(b.begin(), b.end(), 0.0);
}
}  // namespace

void Network::init_params(std::uint64_t seed) {
  for (std::size_t li = 0, pi = 0; li < backbone_.size(); ++li) {
    if (param_layer_of_[li] < 0) continue;
    ParamBlock& blk = param_[param_layer_of_[li]];
    Rng rng = make_stream(seed, 0x11A7 + pi);
    int fan_in;
    if (backbone_[li].kind == LayerKind::Conv3d) {
      fan_in = blk.w.shape[1] * blk.w.shape[2] * blk.w.shape[3] * blk.w.shape[4];
    } else {
      fan_in = blk.w.shape[1];
    }
    init_uniform(blk.w, blk.b, fan_in, rng);
    ++pi;
  }
}

ParamBlock Network::make_head(int out_dim, std::uint64_t seed) const {
  if (out_dim < 1) throw ConfigError("head output dimension must be positive");
  ParamBlock head{Tensor({out_dim, feature_dim_}), std::vector<double>(out_dim, 0.0)};
  Rng rng = make_stream(seed, 0x6EAD);
  init_uniform(head.w, head.b, feature_dim_, rng);
  return head;
}

void Network::attach_head_l(int out_dim, std::uint64_t seed) { head_l_ = make_head(out_dim, seed); }
void Network::attach_head_u(int out_dim, std::uint64_t seed) { head_u_ = make_head(out_dim, seed); }

void Network::extend_head_l(int extra, std::uint64_t seed) {
  if (!head_l_) throw ContractError("extend_head_l: no classification head attached");
  if (extra < 1) throw ConfigError("extend_head_l: extra outputs must be positive");
  const int old_dim = head_l_->w.shape[0];
  ParamBlock grown{Tensor({old_dim + extra, feature_dim_}),
                   std::vector<double>(old_dim + extra, 0.0)};
  std::copy(head_l_->w.data.begin(), head_l_->w.data.end(), grown.w.data.begin());
  std::copy(head_l_->b.begin(), head_l_->b.end(), grown.b.begin());
  Rng rng = make_stream(seed, 0xE27E);
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t k = static_cast<std::size_t>(old_dim) * feature_dim_; k < grown.w.data.size();
       ++k)
    grown.w.data[k] = dist(rng);
  head_l_ = std::move(grown);
}

void Network::set_frozen_prefix(int first_trainable) {
  if (first_trainable < 0 || first_trainable > num_param_layers())
    throw ConfigError("set_frozen_prefix: selector out of range");
  frozen_prefix_ = first_trainable;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

ForwardCache Network::forward(const Tensor& input, HeadSelect heads) const {
  std::vector<int> expect(input_shape_.begin(), input_shape_.end());
  if (input.shape != expect)
    throw ShapeError("forward: input " + shape_str(input.shape) + " != network input " +
                     shape_str(expect));
  ForwardCache cache;
  cache.input = input;
  cache.acts.reserve(backbone_.size());

  const Tensor* cur = &cache.input;
  for (std::size_t li = 0; li < backbone_.size(); ++li) {
    const LayerSpec& spec = backbone_[li];
    switch (spec.kind) {
      case LayerKind::Conv3d: {
        const ParamBlock& blk = param_[param_layer_of_[li]];
        cache.acts.push_back(conv3d_forward(*cur, blk.w, blk.b, spec.stride));
        break;
      }
      case LayerKind::MaxPool3d: {
        cache.argmax.emplace_back();
        cache.acts.push_back(maxpool3d_forward(*cur, spec.window, &cache.argmax.back()));
        break;
      }
      case LayerKind::Relu:
        cache.acts.push_back(relu_forward(*cur));
        break;
      case LayerKind::Flatten: {
        Tensor flat({static_cast<int>(cur->size())}, cur->data);
        cache.acts.push_back(std::move(flat));
        break;
      }
      case LayerKind::Dense: {
        const ParamBlock& blk = param_[param_layer_of_[li]];
        cache.acts.push_back(dense_forward(*cur, blk.w, blk.b));
        break;
      }
      case LayerKind::Softmax:
        throw ConfigError("softmax belongs to the heads, not the backbone");
    }
    cur = &cache.acts.back();
  }
  cache.features = cur->data;

  if (heads.l) {
    if (!head_l_) throw ContractError("forward: classification head not attached");
    Tensor logits = dense_forward(*cur, head_l_->w, head_l_->b);
    cache.l_logits = logits.data;
    cache.l_probs = softmax(cache.l_logits);
  }
  if (heads.u) {
    if (!head_u_) throw ContractError("forward: clustering head not attached");
    Tensor logits = dense_forward(*cur, head_u_->w, head_u_->b);
    cache.u_logits = logits.data;
    cache.u_probs = softmax(cache.u_logits);
  }
  return cache;
}

std::vector<double> Network::features_of(const Tensor& input) const {
  return forward(input, HeadSelect{}).features;
}

Gradients Network::make_gradients() const {
  Gradients g;
  for (const auto& p : param_)
    g.backbone.push_back(ParamBlock{Tensor(p.w.shape), std::vector<double>(p.b.size(), 0.0)});
  if (head_l_)
    g.head_l = ParamBlock{Tensor(head_l_->w.shape), std::vector<double>(head_l_->b.size(), 0.0)};
  if (head_u_)
    g.head_u = ParamBlock{Tensor(head_u_->w.shape), std::vector<double>(head_u_->b.size(), 0.0)};
  return g;
}

void Network::backward(const ForwardCache& cache, const std::vector<double>* dprobs_l,
                       const std::vector<double>* dprobs_u, const std::vector<double>* dfeatures,
                       Gradients& grads) const {
  const Tensor& feat_act = cache.acts.back();
  Tensor dfeat({feature_dim_});
  if (dfeatures) {
    if (dfeatures->size() != static_cast<std::size_t>(feature_dim_))
      throw ShapeError("backward: dfeatures length mismatch");
    dfeat.data = *dfeatures;
  }

  // Heads: dprobs -> softmax -> dense -> feature gradient.
  if (dprobs_l) {
    if (!head_l_ || cache.l_probs.empty())
      throw ContractError("backward: classification head outputs missing");
    std::vector<double> dlogits(cache.l_probs.size(), 0.0);
    softmax_backward(cache.l_probs, *dprobs_l, &dlogits);
    dense_backward(feat_act, head_l_->w, Tensor({static_cast<int>(dlogits.size())}, dlogits),
                   &dfeat, &grads.head_l->w, &grads.head_l->b);
  }
  if (dprobs_u) {
    if (!head_u_ || cache.u_probs.empty())
      throw ContractError("backward: clustering head outputs missing");
    std::vector<double> dlogits(cache.u_probs.size(), 0.0);
    softmax_backward(cache.u_probs, *dprobs_u, &dlogits);
    dense_backward(feat_act, head_u_->w, Tensor({static_cast<int>(dlogits.size())}, dlogits),
                   &dfeat, &grads.head_u->w, &grads.head_u->b);
  }

  // Backbone, last layer to first. Stop once the remaining prefix is frozen:
  // no parameter there needs a gradient.
  Tensor grad = std::move(dfeat);
  for (int li = static_cast<int>(backbone_.size()) - 1; li >= 0; --li) {
    const LayerSpec& spec = backbone_[li];
    const Tensor& layer_in = (li == 0) ? cache.input : cache.acts[li - 1];
    const int pidx = param_layer_of_[li];
    const bool any_trainable_before = [&] {
      for (int lj = li - 1; lj >= 0; --lj)
        if (param_layer_of_[lj] >= 0 && !param_layer_frozen(param_layer_of_[lj])) return true;
      return false;
    }();

    switch (spec.kind) {
      case LayerKind::Conv3d: {
        const ParamBlock& blk = param_[pidx];
        Tensor din;
        Tensor* din_ptr = nullptr;
        if (any_trainable_before) {
          din = Tensor(layer_in.shape);
          din_ptr = &din;
        }
        const bool want_params = !param_layer_frozen(pidx);
        conv3d_backward(layer_in, blk.w, spec.stride, grad, din_ptr,
                        want_params ? &grads.backbone[pidx].w : nullptr,
                        want_params ? &grads.backbone[pidx].b : nullptr);
        if (!any_trainable_before) return;
        grad = std::move(din);
        break;
      }
      case LayerKind::MaxPool3d: {
        // Locate this pool's argmax store.
        int pool_idx = 0;
        for (int lj = 0; lj < li; ++lj)
          if (backbone_[lj].kind == LayerKind::MaxPool3d) ++pool_idx;
        Tensor din(layer_in.shape);
        maxpool3d_backward(cache.argmax[pool_idx], grad, layer_in.shape, &din);
        grad = std::move(din);
        break;
      }
      case LayerKind::Relu: {
        Tensor din(layer_in.shape);
        relu_backward(layer_in, grad, &din);
        grad = std::move(din);
        break;
      }
      case LayerKind::Flatten: {
        Tensor din(layer_in.shape, grad.data);
        grad = std::move(din);
        break;
      }
      case LayerKind::Dense: {
        const ParamBlock& blk = param_[pidx];
        Tensor din;
        Tensor* din_ptr = nullptr;
        if (any_trainable_before) {
          din = Tensor(layer_in.shape);
          din_ptr = &din;
        }
        const bool want_params = !param_layer_frozen(pidx);
        dense_backward(layer_in, blk.w, grad, din_ptr,
                       want_params ? &grads.backbone[pidx].w : nullptr,
                       want_params ? &grads.backbone[pidx].b : nullptr);
        if (!any_trainable_before) return;
        grad = std::move(din);
        break;
      }
      case LayerKind::Softmax:
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Flat trainable access
// ---------------------------------------------------------------------------

std::size_t Network::trainable_parameter_count() const {
  std::size_t n = 0;
  for (int p = 0; p < num_param_layers(); ++p)
    if (!param_layer_frozen(p)) n += param_[p].size();
  if (head_l_) n += head_l_->size();
  if (head_u_) n += head_u_->size();
  return n;
}

namespace {
// Walks the canonical flat ordering; returns pointer to the scalar.
template <typename Block>
double* locate_in_block(Block& blk, std::size_t& idx) {
  if (idx < blk.w.data.size()) return &blk.w.data[idx];
  idx -= blk.w.data.size();
  if (idx < blk.b.size()) return &blk.b[idx];
  idx -= blk.b.size();
  return nullptr;
}
}  // namespace

double Network::get_trainable(std::size_t flat_index) const {
  auto* self = const_cast<Network*>(this);
  std::size_t idx = flat_index;
  for (int p = 0; p < num_param_layers(); ++p) {
    if (param_layer_frozen(p)) continue;
    if (double* v = locate_in_block(self->param_[p], idx)) return *v;
  }
  if (head_l_)
    if (double* v = locate_in_block(*self->head_l_, idx)) return *v;
  if (head_u_)
    if (double* v = locate_in_block(*self->head_u_, idx)) return *v;
  throw ContractError("trainable index out of range");
}

void Network::add_to_trainable(std::size_t flat_index, double delta) {
  std::size_t idx = flat_index;
  for (int p = 0; p < num_param_layers(); ++p) {
    if (param_layer_frozen(p)) continue;
    if (double* v = locate_in_block(param_[p], idx)) {
      *v += delta;
      return;
    }
  }
  if (head_l_)
    if (double* v = locate_in_block(*head_l_, idx)) {
      *v += delta;
      return;
    }
  if (head_u_)
    if (double* v = locate_in_block(*head_u_, idx)) {
      *v += delta;
      return;
    }
  throw ContractError("trainable index out of range");
}

std::vector<double> Network::flatten_trainable(const Gradients& grads) const {
  std::vector<double> out;
  out.reserve(trainable_parameter_count());
  for (int p = 0; p < num_param_layers(); ++p) {
    if (param_layer_frozen(p)) continue;
    const ParamBlock& blk = grads.backbone[p];
    out.insert(out.end(), blk.w.data.begin(), blk.w.data.end());
    out.insert(out.end(), blk.b.begin(), blk.b.end());
  }
  if (head_l_ && grads.head_l) {
    out.insert(out.end(), grads.head_l->w.data.begin(), grads.head_l->w.data.end());
    out.insert(out.end(), grads.head_l->b.begin(), grads.head_l->b.end());
  }
  if (head_u_ && grads.head_u) {
    out.insert(out.end(), grads.head_u->w.data.begin(), grads.head_u->w.data.end());
    out.insert(out.end(), grads.head_u->b.begin(), grads.head_u->b.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

json spec_to_json(const LayerSpec& s) {
  json j;
  switch (s.kind) {
    case LayerKind::Conv3d:
      j["kind"] = "conv3d";
      j["out_channels"] = s.out_channels;
      j["kernel"] = {s.kernel.i, s.kernel.j, s.kernel.t};
      j["stride"] = {s.stride.i, s.stride.j, s.stride.t};
      break;
    case LayerKind::MaxPool3d:
      j["kind"] = "maxpool3d";
      j["window"] = {s.window.i, s.window.j, s.window.t};
      break;
    case LayerKind::Relu:
      j["kind"] = "relu";
      break;
    case LayerKind::Flatten:
      j["kind"] = "flatten";
      break;
    case LayerKind::Dense:
      j["kind"] = "dense";
      j["units"] = s.units;
      break;
    case LayerKind::Softmax:
      j["kind"] = "softmax";
      break;
  }
  return j;
}

LayerSpec spec_from_json(const json& j) {
  LayerSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "conv3d") {
    s.kind = LayerKind::Conv3d;
    s.out_channels = j.at("out_channels").get<int>();
    auto k = j.at("kernel");
    s.kernel = {k[0].get<int>(), k[1].get<int>(), k[2].get<int>()};
    auto st = j.at("stride");
    s.stride = {st[0].get<int>(), st[1].get<int>(), st[2].get<int>()};
  } else if (kind == "maxpool3d") {
    s.kind = LayerKind::MaxPool3d;
    auto w = j.at("window");
    s.window = {w[0].get<int>(), w[1].get<int>(), w[2].get<int>()};
  } else if (kind == "relu") {
    s.kind = LayerKind::Relu;
  } else if (kind == "flatten") {
    s.kind = LayerKind::Flatten;
  } else if (kind == "dense") {
    s.kind = LayerKind::Dense;
    s.units = j.at("units").get<int>();
  } else {
    throw DataError("unknown layer kind in checkpoint: " + kind);
  }
  return s;
}

void write_block(std::ofstream& out, const ParamBlock& blk) {
  out.write(reinterpret_cast<const char*>(blk.w.data.data()),
            static_cast<std::streamsize>(blk.w.data.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(blk.b.data()),
            static_cast<std::streamsize>(blk.b.size() * sizeof(double)));
}

void read_block(std::ifstream& in, ParamBlock& blk) {
  in.read(reinterpret_cast<char*>(blk.w.data.data()),
          static_cast<std::streamsize>(blk.w.data.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(blk.b.data()),
          static_cast<std::streamsize>(blk.b.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint blob truncated");
}

}  // namespace

void Network::save(const std::string& prefix,
                   const std::vector<std::pair<std::string, std::string>>& extra) const {
  json manifest;
  manifest["format"] = "rfap-checkpoint-v1";
  manifest["input_shape"] = {input_shape_[0], input_shape_[1], input_shape_[2], input_shape_[3]};
  json layers = json::array();
  for (const auto& s : backbone_) layers.push_back(spec_to_json(s));
  manifest["backbone"] = layers;
  manifest["frozen_prefix"] = frozen_prefix_;
  manifest["feature_dim"] = feature_dim_;
  manifest["head_l"] = head_l_ ? head_l_->w.shape[0] : 0;
  manifest["head_u"] = head_u_ ? head_u_->w.shape[0] : 0;
  for (const auto& [k, v] : extra) manifest[k] = v;

  std::ofstream mf(prefix + ".json");
  if (!mf) throw DataError("cannot write checkpoint manifest " + prefix + ".json");
  mf << manifest.dump(2) << "\n";

  std::ofstream blob(prefix + ".bin", std::ios::binary);
  if (!blob) throw DataError("cannot write checkpoint blob " + prefix + ".bin");
  for (const auto& blk : param_) write_block(blob, blk);
  if (head_l_) write_block(blob, *head_l_);
  if (head_u_) write_block(blob, *head_u_);
}

Network Network::load(const std::string& prefix,
                      std::vector<std::pair<std::string, std::string>>* extra) {
  std::ifstream mf(prefix + ".json");
  if (!mf) throw DataError("cannot open checkpoint manifest " + prefix + ".json");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }

  auto shp = manifest.at("input_shape");
  std::array<int, 4> input_shape{shp[0].get<int>(), shp[1].get<int>(), shp[2].get<int>(),
                                 shp[3].get<int>()};
  std::vector<LayerSpec> specs;
  for (const auto& j : manifest.at("backbone")) specs.push_back(spec_from_json(j));

  Network net(input_shape, specs, /*seed=*/0);
  const int hl = manifest.at("head_l").get<int>();
  const int hu = manifest.at("head_u").get<int>();
  if (hl > 0) net.attach_head_l(hl, 0);
  if (hu > 0) net.attach_head_u(hu, 0);
  net.set_frozen_prefix(manifest.at("frozen_prefix").get<int>());

  std::ifstream blob(prefix + ".bin", std::ios::binary);
  if (!blob) throw DataError("cannot open checkpoint blob " + prefix + ".bin");
  for (auto& blk : net.param_) read_block(blob, blk);
  if (net.head_l_) read_block(blob, *net.head_l_);
  if (net.head_u_) read_block(blob, *net.head_u_);

  if (extra) {
    for (auto it = manifest.begin(); it != manifest.end(); ++it)
      if (it.value().is_string()) extra->emplace_back(it.key(), it.value().get<std::string>());
  }
  return net;
}

Tensor to_input(const scenario::ScenarioTensor& tensor) {
  tensor.validate();
  const int T = tensor.n_frames(), I = tensor.rows(), J = tensor.cols();
  Tensor out({1, T, I, J});
  double* dst = out.ptr();
  for (int t = 0; t < T; ++t) {
    const auto& frame = tensor.frames[t].values;
    std::copy(frame.begin(), frame.end(), dst + static_cast<std::size_t>(t) * I * J);
  }
  return out;
}

}  // namespace rfap::nn
