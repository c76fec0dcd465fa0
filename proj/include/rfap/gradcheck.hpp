#pragma once

#include <cstdint>
#include <functional>

#include "rfap/network.hpp"

namespace rfap::nn {

/// Evaluates a scalar loss on the network; when `grads` is non-null it must
/// also accumulate the analytic parameter gradients (starting from zeroed
/// grads).
using LossFn = std::function<double(const Network&, Gradients*)>;

struct GradCheckOptions {
  double epsilon = 1e-5;     // central-difference step, within [1e-7, 1e-4]
  std::size_t max_params = 200;  // random subset size (all params if fewer)
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t params_checked = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central finite differences on a random subset of trainable parameters;
/// relative error |g_a - g_n| / (|g_a| + |g_n| + 1e-12) per parameter.
GradCheckResult gradient_check(Network& network, const LossFn& loss,
                               const GradCheckOptions& options = {});

}  // namespace rfap::nn
