#pragma once

#include <vector>

#include "rfap/common.hpp"

namespace rfap::nn {

/// Mean over the batch of -log(probability at the true class). Probabilities
/// below 1e-30 are clamped before the log; `clamped` (when given) reports
/// whether that happened. Gradients accumulate into dprobs when non-null.
double categorical_cross_entropy(const std::vector<std::vector<double>>& probs,
                                 const std::vector<int>& target_class,
                                 std::vector<std::vector<double>>* dprobs = nullptr,
                                 bool* clamped = nullptr);

/// Pairwise binary cross entropy between the similarity targets S and the
/// inner products of clustering-head outputs, averaged over all W*W ordered
/// pairs including the diagonal. The inner products are clamped to
/// [1e-12, 1-1e-12] before the logs. S must be symmetric within 1e-9.
/// Returns the negated sum (a quantity to minimise).
double pairwise_cluster_loss(const std::vector<double>& S /*W*W row-major*/,
                             const std::vector<std::vector<double>>& cluster_probs,
                             std::vector<std::vector<double>>* dprobs = nullptr);

/// Mean over samples of the squared Euclidean distance between head outputs
/// for a scenario and its augmented copy (one head's term; callers sum the
/// classification- and clustering-head terms).
double consistency_loss(const std::vector<std::vector<double>>& outputs,
                        const std::vector<std::vector<double>>& outputs_augmented,
                        std::vector<std::vector<double>>* doutputs = nullptr,
                        std::vector<std::vector<double>>* doutputs_augmented = nullptr);

/// Consistency ramp-up weight: lambda * exp(-5 (1 - beta/T)^2), with beta
/// clamped to [0, T]. Equals lambda exactly at beta = T.
double ramp_up_weight(double epoch_beta, double ramp_length, double lambda);

}  // namespace rfap::nn
