#pragma once

#include <cstdint>

#include "rfap/network.hpp"

namespace rfap::nn {

struct SGDConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 32;  // W
  int epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Momentum buffers, layout-matched to the network. Reset whenever the head
/// structure changes.
struct SgdState {
  Gradients velocity;
  bool initialised = false;
};

/// v <- momentum*v + grad + weight_decay*param;  param <- param - lr*v.
/// Frozen parameter layers are untouched (no decay, no velocity). Non-finite
/// gradients abort with a NumericError naming the offending block.
void sgd_step(Network& network, const Gradients& grads, const SGDConfig& config, SgdState& state);

}  // namespace rfap::nn
