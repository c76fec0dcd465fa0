#include "rfap/sgd.hpp"

#include <cmath>
#include <string>

namespace rfap::nn {

void SGDConfig::validate() const {
  if (learning_rate <= 0) throw ConfigError("sgd: learning_rate must be positive");
  if (momentum < 0 || momentum >= 1) throw ConfigError("sgd: momentum must be in [0,1)");
  if (weight_decay < 0) throw ConfigError("sgd: weight_decay must be non-negative");
  if (batch_size < 2) throw ConfigError("sgd: batch size W must be >= 2");
  if (epochs < 0) throw ConfigError("sgd: epochs must be non-negative");
}

namespace {

void step_block(ParamBlock& param, const ParamBlock& grad, ParamBlock& vel,
                const SGDConfig& cfg, const std::string& name) {
  if (!grad.all_finite())
    throw NumericError("sgd: non-finite gradient in " + name + ", training aborted");
  for (std::size_t k = 0; k < param.w.data.size(); ++k) {
    double& v = vel.w.data[k];
    v = cfg.momentum * v + grad.w.data[k] + cfg.weight_decay * param.w.data[k];
    param.w.data[k] -= cfg.learning_rate * v;
  }
  for (std::size_t k = 0; k < param.b.size(); ++k) {
    double& v = vel.b[k];
    v = cfg.momentum * v + grad.b[k] + cfg.weight_decay * param.b[k];
    param.b[k] -= cfg.learning_rate * v;
  }
}

}  // namespace

void sgd_step(Network& network, const Gradients& grads, const SGDConfig& config, SgdState& state) {
  config.validate();
  if (!state.initialised) {
    state.velocity = network.make_gradients();
    state.initialised = true;
  }
  if (state.velocity.backbone.size() != grads.backbone.size())
    throw ContractError("sgd: gradient layout does not match optimiser state");

  for (int p = 0; p < network.num_param_layers(); ++p) {
    if (network.param_layer_frozen(p)) continue;
    step_block(network.mutable_param_block(p), grads.backbone[p], state.velocity.backbone[p],
               config, "backbone layer " + std::to_string(p));
  }
  if (network.has_head_l()) {
    if (!grads.head_l || !state.velocity.head_l)
      throw ContractError("sgd: missing classification-head gradient");
    step_block(network.mutable_head_l(), *grads.head_l, *state.velocity.head_l, config,
               "classification head");
  }
  if (network.has_head_u()) {
    if (!grads.head_u || !state.velocity.head_u)
      throw ContractError("sgd: missing clustering-head gradient");
    step_block(network.mutable_head_u(), *grads.head_u, *state.velocity.head_u, config,
               "clustering head");
  }
}

}  // namespace rfap::nn
