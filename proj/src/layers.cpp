#include "rfap/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rfap::nn {

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
  os << ")";
  return os.str();
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case LayerKind::Conv3d:
      os << "conv3d(oc=" << out_channels << ",k=" << kernel.i << "x" << kernel.j << "x"
         << kernel.t << ")";
      break;
    case LayerKind::MaxPool3d:
      os << "maxpool3d(" << window.i << "x" << window.j << "x" << window.t << ")";
      break;
    case LayerKind::Relu:
      os << "relu";
      break;
    case LayerKind::Flatten:
      os << "flatten";
      break;
    case LayerKind::Dense:
      os << "dense(" << units << ")";
      break;
    case LayerKind::Softmax:
      os << "softmax";
      break;
  }
  return os.str();
}

namespace {

void require_4d(const std::vector<int>& s, const char* who) {
  if (s.size() != 4) throw ShapeError(std::string(who) + ": expected a (C,T,I,J) tensor, got " +
                                      shape_str(s));
}

int out_extent(int in, int k, int s) { return (in - k) / s + 1; }

}  // namespace

// ---------------------------------------------------------------------------
// conv3d
// ---------------------------------------------------------------------------

std::vector<int> conv3d_output_shape(const std::vector<int>& in_shape, const Tensor& kernel,
                                     const Dims3& stride) {
  require_4d(in_shape, "conv3d");
  if (kernel.shape.size() != 5)
    throw ShapeError("conv3d: kernel must be (OC,IC,kT,kI,kJ), got " + shape_str(kernel.shape));
  const int ic = kernel.shape[1], kt = kernel.shape[2], ki = kernel.shape[3],
            kj = kernel.shape[4];
  if (ic != in_shape[0] || kt > in_shape[1] || ki > in_shape[2] || kj > in_shape[3])
    throw ShapeError("conv3d: kernel " + shape_str(kernel.shape) + " incompatible with input " +
                     shape_str(in_shape));
  if (stride.i < 1 || stride.j < 1 || stride.t < 1) throw ShapeError("conv3d: stride must be >= 1");
  return {kernel.shape[0], out_extent(in_shape[1], kt, stride.t),
          out_extent(in_shape[2], ki, stride.i), out_extent(in_shape[3], kj, stride.j)};
}

Tensor conv3d_forward(const Tensor& input, const Tensor& kernel,
                      const std::vector<double>& bias, const Dims3& stride) {
  const auto out_shape = conv3d_output_shape(input.shape, kernel, stride);
  const int OC = out_shape[0], OT = out_shape[1], OI = out_shape[2], OJ = out_shape[3];
  const int IC = input.shape[0], IT = input.shape[1], II = input.shape[2], IJ = input.shape[3];
  const int KT = kernel.shape[2], KI = kernel.shape[3], KJ = kernel.shape[4];
  if (static_cast<int>(bias.size()) != OC) throw ShapeError("conv3d: bias length != out channels");

  Tensor out(out_shape);
  const double* in = input.ptr();
  const double* w = kernel.ptr();
  double* o = out.ptr();

  for (int oc = 0; oc < OC; ++oc) {
    const double* w_oc = w + static_cast<std::size_t>(oc) * IC * KT * KI * KJ;
    for (int ot = 0; ot < OT; ++ot) {
      for (int oi = 0; oi < OI; ++oi) {
        double* orow = o + ((static_cast<std::size_t>(oc) * OT + ot) * OI + oi) * OJ;
        for (int oj = 0; oj < OJ; ++oj) orow[oj] = bias[oc];
        for (int ic = 0; ic < IC; ++ic) {
          for (int kt = 0; kt < KT; ++kt) {
            const int it = ot * stride.t + kt;
            for (int ki = 0; ki < KI; ++ki) {
              const int ii = oi * stride.i + ki;
              const double* irow =
                  in + ((static_cast<std::size_t>(ic) * IT + it) * II + ii) * IJ;
              const double* wrow = w_oc + ((static_cast<std::size_t>(ic) * KT + kt) * KI + ki) * KJ;
              if (stride.j == 1) {
                for (int kj = 0; kj < KJ; ++kj) {
                  const double wv = wrow[kj];
                  const double* ir = irow + kj;
                  for (int oj = 0; oj < OJ; ++oj) orow[oj] += wv * ir[oj];
                }
              } else {
                for (int kj = 0; kj < KJ; ++kj) {
                  const double wv = wrow[kj];
                  for (int oj = 0; oj < OJ; ++oj) orow[oj] += wv * irow[oj * stride.j + kj];
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void conv3d_backward(const Tensor& input, const Tensor& kernel, const Dims3& stride,
                     const Tensor& grad_out, Tensor* grad_input, Tensor* grad_kernel,
                     std::vector<double>* grad_bias) {
  const auto out_shape = conv3d_output_shape(input.shape, kernel, stride);
  if (grad_out.shape != out_shape)
    throw ShapeError("conv3d backward: grad " + shape_str(grad_out.shape) + " vs expected " +
                     shape_str(out_shape));
  const int OC = out_shape[0], OT = out_shape[1], OI = out_shape[2], OJ = out_shape[3];
  const int IC = input.shape[0], IT = input.shape[1], II = input.shape[2], IJ = input.shape[3];
  const int KT = kernel.shape[2], KI = kernel.shape[3], KJ = kernel.shape[4];

  const double* in = input.ptr();
  const double* w = kernel.ptr();
  const double* go = grad_out.ptr();

  for (int oc = 0; oc < OC; ++oc) {
    const std::size_t w_base = static_cast<std::size_t>(oc) * IC * KT * KI * KJ;
    for (int ot = 0; ot < OT; ++ot) {
      for (int oi = 0; oi < OI; ++oi) {
        const double* grow = go + ((static_cast<std::size_t>(oc) * OT + ot) * OI + oi) * OJ;
        if (grad_bias) {
          double s = 0;
          for (int oj = 0; oj < OJ; ++oj) s += grow[oj];
          (*grad_bias)[oc] += s;
        }
        for (int ic = 0; ic < IC; ++ic) {
          for (int kt = 0; kt < KT; ++kt) {
            const int it = ot * stride.t + kt;
            for (int ki = 0; ki < KI; ++ki) {
              const int ii = oi * stride.i + ki;
              const std::size_t irow_off =
                  ((static_cast<std::size_t>(ic) * IT + it) * II + ii) * IJ;
              const std::size_t wrow_off =
                  w_base + ((static_cast<std::size_t>(ic) * KT + kt) * KI + ki) * KJ;
              for (int kj = 0; kj < KJ; ++kj) {
                if (grad_kernel) {
                  double s = 0;
                  if (stride.j == 1) {
                    const double* ir = in + irow_off + kj;
                    for (int oj = 0; oj < OJ; ++oj) s += grow[oj] * ir[oj];
                  } else {
                    for (int oj = 0; oj < OJ; ++oj)
                      s += grow[oj] * in[irow_off + oj * stride.j + kj];
                  }
                  grad_kernel->data[wrow_off + kj] += s;
                }
                if (grad_input) {
                  const double wv = w[wrow_off + kj];
                  double* gi = grad_input->ptr() + irow_off;
                  if (stride.j == 1) {
                    double* gir = gi + kj;
                    for (int oj = 0; oj < OJ; ++oj) gir[oj] += wv * grow[oj];
                  } else {
                    for (int oj = 0; oj < OJ; ++oj) gi[oj * stride.j + kj] += wv * grow[oj];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// maxpool3d
// ---------------------------------------------------------------------------

std::vector<int> maxpool3d_output_shape(const std::vector<int>& in_shape, const Dims3& window) {
  require_4d(in_shape, "maxpool3d");
  if (window.i < 1 || window.j < 1 || window.t < 1)
    throw ShapeError("maxpool3d: window must be >= 1");
  if (in_shape[1] % window.t || in_shape[2] % window.i || in_shape[3] % window.j)
    throw ShapeError("maxpool3d: window " + std::to_string(window.i) + "x" +
                     std::to_string(window.j) + "x" + std::to_string(window.t) +
                     " does not divide input " + shape_str(in_shape));
  return {in_shape[0], in_shape[1] / window.t, in_shape[2] / window.i, in_shape[3] / window.j};
}

Tensor maxpool3d_forward(const Tensor& input, const Dims3& window,
                         std::vector<std::size_t>* argmax) {
  const auto out_shape = maxpool3d_output_shape(input.shape, window);
  const int C = out_shape[0], OT = out_shape[1], OI = out_shape[2], OJ = out_shape[3];
  const int IT = input.shape[1], II = input.shape[2], IJ = input.shape[3];
  Tensor out(out_shape);
  if (argmax) argmax->assign(out.size(), 0);

  std::size_t oidx = 0;
  for (int c = 0; c < C; ++c) {
    for (int ot = 0; ot < OT; ++ot) {
      for (int oi = 0; oi < OI; ++oi) {
        for (int oj = 0; oj < OJ; ++oj, ++oidx) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (int wt = 0; wt < window.t; ++wt) {
            for (int wi = 0; wi < window.i; ++wi) {
              for (int wj = 0; wj < window.j; ++wj) {
                const std::size_t idx =
                    ((static_cast<std::size_t>(c) * IT + (ot * window.t + wt)) * II +
                     (oi * window.i + wi)) *
                        IJ +
                    (oj * window.j + wj);
                if (input.data[idx] > best) {
                  best = input.data[idx];
                  best_idx = idx;
                }
              }
            }
          }
          out.data[oidx] = best;
          if (argmax) (*argmax)[oidx] = best_idx;
        }
      }
    }
  }
  return out;
}

void maxpool3d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                        const std::vector<int>& in_shape, Tensor* grad_input) {
  if (argmax.size() != grad_out.size())
    throw ShapeError("maxpool3d backward: argmax/grad size mismatch");
  if (grad_input->shape != in_shape) throw ShapeError("maxpool3d backward: bad grad_input shape");
  for (std::size_t k = 0; k < argmax.size(); ++k) grad_input->data[argmax[k]] += grad_out.data[k];
}

// ---------------------------------------------------------------------------
// relu / dense / softmax
// ---------------------------------------------------------------------------

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_backward(const Tensor& input, const Tensor& grad_out, Tensor* grad_input) {
  if (input.size() != grad_out.size()) throw ShapeError("relu backward: size mismatch");
  for (std::size_t k = 0; k < input.size(); ++k)
    if (input.data[k] > 0.0) grad_input->data[k] += grad_out.data[k];
}

Tensor dense_forward(const Tensor& input, const Tensor& weights,
                     const std::vector<double>& bias) {
  if (weights.shape.size() != 2)
    throw ShapeError("dense: weights must be (out,in), got " + shape_str(weights.shape));
  const int out_dim = weights.shape[0], in_dim = weights.shape[1];
  if (static_cast<int>(input.size()) != in_dim)
    throw ShapeError("dense: input length " + std::to_string(input.size()) +
                     " != weight columns " + std::to_string(in_dim));
  if (static_cast<int>(bias.size()) != out_dim) throw ShapeError("dense: bias length mismatch");
  Tensor out({out_dim});
  const double* x = input.ptr();
  for (int r = 0; r < out_dim; ++r) {
    const double* wr = weights.ptr() + static_cast<std::size_t>(r) * in_dim;
    double s = bias[r];
    for (int c = 0; c < in_dim; ++c) s += wr[c] * x[c];
    out.data[r] = s;
  }
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, Tensor* grad_weights, std::vector<double>* grad_bias) {
  const int out_dim = weights.shape[0], in_dim = weights.shape[1];
  if (static_cast<int>(grad_out.size()) != out_dim)
    throw ShapeError("dense backward: grad length mismatch");
  for (int r = 0; r < out_dim; ++r) {
    const double g = grad_out.data[r];
    if (grad_bias) (*grad_bias)[r] += g;
    const double* wr = weights.ptr() + static_cast<std::size_t>(r) * in_dim;
    if (grad_weights) {
      double* gw = grad_weights->ptr() + static_cast<std::size_t>(r) * in_dim;
      const double* x = input.ptr();
      for (int c = 0; c < in_dim; ++c) gw[c] += g * x[c];
    }
    if (grad_input) {
      double* gi = grad_input->ptr();
      for (int c = 0; c < in_dim; ++c) gi[c] += g * wr[c];
    }
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw ShapeError("softmax: empty logits");
  for (double v : logits)
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - m);
    z += out[k];
  }
  for (auto& v : out) v /= z;
  return out;
}

void softmax_backward(const std::vector<double>& probs, const std::vector<double>& grad_probs,
                      std::vector<double>* grad_logits) {
  if (probs.size() != grad_probs.size() || grad_logits->size() != probs.size())
    throw ShapeError("softmax backward: size mismatch");
  double dot = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) dot += grad_probs[k] * probs[k];
  for (std::size_t k = 0; k < probs.size(); ++k)
    (*grad_logits)[k] += probs[k] * (grad_probs[k] - dot);
}

}  // namespace rfap::nn
