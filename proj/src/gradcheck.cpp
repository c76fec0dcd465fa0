#include "rfap/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfap::nn {

GradCheckResult gradient_check(Network& network, const LossFn& loss,
                               const GradCheckOptions& options) {
  if (options.epsilon < 1e-7 || options.epsilon > 1e-4)
    throw ConfigError("gradient_check: epsilon must be in [1e-7, 1e-4]");

  Gradients grads = network.make_gradients();
  grads.zero();
  loss(network, &grads);
  const std::vector<double> analytic = network.flatten_trainable(grads);

  const std::size_t total = network.trainable_parameter_count();
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (total > options.max_params) {
    Rng rng = make_stream(options.seed, 0x9C);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(options.max_params);
  }

  GradCheckResult result;
  result.params_checked = indices.size();
  for (std::size_t idx : indices) {
    const double eps = options.epsilon;
    network.add_to_trainable(idx, eps);
    const double up = loss(network, nullptr);
    network.add_to_trainable(idx, -2.0 * eps);
    const double down = loss(network, nullptr);
    network.add_to_trainable(idx, eps);  // restore

    const double numeric = (up - down) / (2.0 * eps);
    const double ga = analytic[idx];
    const double rel = std::abs(ga - numeric) / (std::abs(ga) + std::abs(numeric) + 1e-12);
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = idx;
      result.worst_analytic = ga;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace rfap::nn
