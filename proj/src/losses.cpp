#include "rfap/losses.hpp"

#include <cmath>

namespace rfap::nn {

double categorical_cross_entropy(const std::vector<std::vector<double>>& probs,
                                 const std::vector<int>& target_class,
                                 std::vector<std::vector<double>>* dprobs, bool* clamped) {
  if (probs.size() != target_class.size())
    throw ShapeError("cross entropy: batch size mismatch");
  if (probs.empty()) throw ShapeError("cross entropy: empty batch");
  if (clamped) *clamped = false;
  const double M = static_cast<double>(probs.size());
  double loss = 0;
  for (std::size_t m = 0; m < probs.size(); ++m) {
    const int y = target_class[m];
    if (y < 0 || y >= static_cast<int>(probs[m].size()))
      throw ContractError("cross entropy: target class out of range");
    double p = probs[m][y];
    if (p < 1e-30) {
      p = 1e-30;
      if (clamped) *clamped = true;
    }
    loss -= std::log(p);
    if (dprobs && probs[m][y] >= 1e-30) (*dprobs)[m][y] += -1.0 / (M * probs[m][y]);
  }
  return loss / M;
}

double pairwise_cluster_loss(const std::vector<double>& S,
                             const std::vector<std::vector<double>>& cluster_probs,
                             std::vector<std::vector<double>>* dprobs) {
  const std::size_t W = cluster_probs.size();
  if (W < 1) throw ShapeError("pairwise loss: empty batch");
  if (S.size() != W * W) throw ShapeError("pairwise loss: S must be WxW");
  for (std::size_t i = 0; i < W; ++i)
    for (std::size_t j = i + 1; j < W; ++j)
      if (std::abs(S[i * W + j] - S[j * W + i]) > 1e-9)
        throw ContractError("pairwise loss: similarity matrix is not symmetric");

  constexpr double kClamp = 1e-12;
  const double norm = 1.0 / (static_cast<double>(W) * static_cast<double>(W));
  double loss = 0;
  for (std::size_t i = 0; i < W; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      const double s = S[i * W + j];
      double p = 0;
      for (std::size_t q = 0; q < cluster_probs[i].size(); ++q)
        p += cluster_probs[i][q] * cluster_probs[j][q];
      const bool interior = p > kClamp && p < 1.0 - kClamp;
      const double pc = std::min(std::max(p, kClamp), 1.0 - kClamp);
      loss -= norm * (s * std::log(pc) + (1.0 - s) * std::log(1.0 - pc));
      if (dprobs && interior) {
        const double coef = -norm * (s / pc - (1.0 - s) / (1.0 - pc));
        for (std::size_t q = 0; q < cluster_probs[i].size(); ++q) {
          (*dprobs)[i][q] += coef * cluster_probs[j][q];
          (*dprobs)[j][q] += coef * cluster_probs[i][q];
        }
      }
    }
  }
  return loss;
}

double consistency_loss(const std::vector<std::vector<double>>& outputs,
                        const std::vector<std::vector<double>>& outputs_augmented,
                        std::vector<std::vector<double>>* doutputs,
                        std::vector<std::vector<double>>* doutputs_augmented) {
  if (outputs.size() != outputs_augmented.size())
    throw ShapeError("consistency loss: batch size mismatch");
  if (outputs.empty()) throw ShapeError("consistency loss: empty batch");
  const double M = static_cast<double>(outputs.size());
  double loss = 0;
  for (std::size_t m = 0; m < outputs.size(); ++m) {
    if (outputs[m].size() != outputs_augmented[m].size())
      throw ShapeError("consistency loss: output dimension mismatch");
    for (std::size_t k = 0; k < outputs[m].size(); ++k) {
      const double d = outputs[m][k] - outputs_augmented[m][k];
      loss += d * d / M;
      if (doutputs) (*doutputs)[m][k] += 2.0 * d / M;
      if (doutputs_augmented) (*doutputs_augmented)[m][k] -= 2.0 * d / M;
    }
  }
  return loss;
}

double ramp_up_weight(double epoch_beta, double ramp_length, double lambda) {
  if (ramp_length <= 0) throw ConfigError("ramp_up_weight: T must be positive");
  if (lambda <= 0) throw ConfigError("ramp_up_weight: lambda must be positive");
  if (epoch_beta < 0) throw ConfigError("ramp_up_weight: epoch must be non-negative");
  const double beta = std::min(epoch_beta, ramp_length);
  if (beta == ramp_length) return lambda;  // exact at the endpoint
  const double a = 1.0 - beta / ramp_length;
  return lambda * std::exp(-5.0 * a * a);
}

}  // namespace rfap::nn
