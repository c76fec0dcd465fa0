#pragma once

#include <array>
#include <string>
#include <vector>

#include "rfap/tensor.hpp"

namespace rfap::nn {

// Spatio-temporal dimensions of kernels, windows and strides, named after
// the grid axes they act on. Activations are laid out (channels, time,
// rows, cols) so the innermost loops run over the contiguous column axis.
struct Dims3 {
  int i = 1;  // rows
  int j = 1;  // cols
  int t = 1;  // time

  bool operator==(const Dims3&) const = default;
};

enum class LayerKind { Conv3d, MaxPool3d, Relu, Flatten, Dense, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out_channels = 0;   // conv3d
  Dims3 kernel;           // conv3d
  Dims3 stride{1, 1, 1};  // conv3d
  Dims3 window;           // maxpool3d
  int units = 0;          // dense

  bool has_params() const { return kind == LayerKind::Conv3d || kind == LayerKind::Dense; }
  std::string describe() const;
};

// ---------------------------------------------------------------------------
// Layer kernels. Activations: conv/pool tensors are (C, T, I, J); dense
// vectors are (N). Convolutions are valid (no padding); strides below 1 or
// kernels exceeding the input raise ShapeError listing both shapes.
// ---------------------------------------------------------------------------

std::vector<int> conv3d_output_shape(const std::vector<int>& in_shape, const Tensor& kernel,
                                     const Dims3& stride);

/// kernel shape (OC, IC, kT, kI, kJ); out[oc,ot,oi,oj] = bias[oc] + sum of
/// the input window times the kernel.
Tensor conv3d_forward(const Tensor& input, const Tensor& kernel,
                      const std::vector<double>& bias, const Dims3& stride);

/// Accumulates (does not zero) into any non-null gradient output.
void conv3d_backward(const Tensor& input, const Tensor& kernel, const Dims3& stride,
                     const Tensor& grad_out, Tensor* grad_input, Tensor* grad_kernel,
                     std::vector<double>* grad_bias);

std::vector<int> maxpool3d_output_shape(const std::vector<int>& in_shape, const Dims3& window);

/// Non-overlapping max pooling; the window must divide the pooled dims.
/// argmax records the flat input index of each output's maximum; ties break
/// to the first index in row-major order.
Tensor maxpool3d_forward(const Tensor& input, const Dims3& window, std::vector<std::size_t>* argmax);

void maxpool3d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                        const std::vector<int>& in_shape, Tensor* grad_input);

Tensor relu_forward(const Tensor& input);
void relu_backward(const Tensor& input, const Tensor& grad_out, Tensor* grad_input);

/// weights shape (out, in); y = W x + b.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const std::vector<double>& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, Tensor* grad_weights, std::vector<double>* grad_bias);

/// Numerically stable softmax (max subtraction); output sums to 1.
std::vector<double> softmax(const std::vector<double>& logits);
/// grad_logits_k = p_k * (grad_probs_k - sum_j grad_probs_j p_j), accumulated.
void softmax_backward(const std::vector<double>& probs, const std::vector<double>& grad_probs,
                      std::vector<double>* grad_logits);

}  // namespace rfap::nn
