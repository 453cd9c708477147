#include "coopsc/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coopsc/error.hpp"

namespace coopsc {

namespace {

constexpr const char* kAxisNames[] = {"depth", "height", "width"};

std::size_t axis_of(const Triple& t, int axis) { return axis == 0 ? t.d : axis == 1 ? t.h : t.w; }

void require_rank(const Shape& dims, std::size_t rank, const char* what) {
  if (dims.size() != rank)
    throw Error(ErrorKind::kShape, std::string(what) + " expects rank " + std::to_string(rank) +
                                       " input, got " + shape_string(dims));
}

Shape conv_output(const Conv3dSpec& s, const Shape& in) {
  require_rank(in, 4, "conv3d");
  if (in[0] != s.in_channels)
    throw Error(ErrorKind::kShape, "conv3d channel axis: input has " + std::to_string(in[0]) +
                                       ", weights expect " + std::to_string(s.in_channels));
  Shape out{s.out_channels, 0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    const std::size_t k = axis_of(s.kernel, a);
    const std::size_t padded = in[a + 1] + 2 * axis_of(s.padding, a);
    if (k == 0) throw Error(ErrorKind::kShape, std::string("conv3d kernel ") + kAxisNames[a] + " is zero");
    if (padded < k)
      throw Error(ErrorKind::kShape, std::string("conv3d ") + kAxisNames[a] + " axis: padded extent " +
                                         std::to_string(padded) + " < kernel " + std::to_string(k));
    out[a + 1] = padded - k + 1;
  }
  return out;
}

Shape pool_output(const MaxPool3dSpec& s, const Shape& in) {
  require_rank(in, 4, "maxpool3d");
  Shape out{in[0], 0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    const std::size_t k = axis_of(s.kernel, a);
    const std::size_t st = axis_of(s.stride, a);
    if (k == 0 || st == 0)
      throw Error(ErrorKind::kShape, std::string("maxpool3d ") + kAxisNames[a] + " kernel/stride is zero");
    if (in[a + 1] < k)
      throw Error(ErrorKind::kShape, std::string("maxpool3d ") + kAxisNames[a] + " axis: input extent " +
                                         std::to_string(in[a + 1]) + " < kernel " + std::to_string(k));
    out[a + 1] = (in[a + 1] - k) / st + 1;
  }
  return out;
}

// Four independent accumulators; keeps the summation order fixed while
// letting the compiler overlap the multiply-adds.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

Shape output_shape(const LayerSpec& spec, const Shape& input) {
  return std::visit(
      [&](const auto& s) -> Shape {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Conv3dSpec>) {
          return conv_output(s, input);
        } else if constexpr (std::is_same_v<T, MaxPool3dSpec>) {
          return pool_output(s, input);
        } else if constexpr (std::is_same_v<T, ReluSpec>) {
          return input;
        } else if constexpr (std::is_same_v<T, ReshapeSpec>) {
          if (element_count(s.target) != element_count(input))
            throw Error(ErrorKind::kShape, "reshape " + shape_string(input) + " -> " + shape_string(s.target) +
                                               " changes element count");
          return s.target;
        } else {
          if (element_count(input) != s.in_features)
            throw Error(ErrorKind::kShape, "linear feature axis: input has " +
                                               std::to_string(element_count(input)) + ", layer expects " +
                                               std::to_string(s.in_features));
          return Shape{s.out_features};
        }
      },
      spec);
}

Shape output_shape(std::span<const LayerSpec> stack, Shape input) {
  for (const auto& layer : stack) input = output_shape(layer, input);
  return input;
}

// ---- conv3d -------------------------------------------------------------

Tensor conv3d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      Triple padding, Conv3dTape* tape) {
  if (weights.rank() != 5) throw Error(ErrorKind::kShape, "conv3d weights must be rank 5");
  const std::size_t F = weights.dim(0), C = weights.dim(1);
  const Triple k{weights.dim(2), weights.dim(3), weights.dim(4)};
  if (bias.size() != F)
    throw Error(ErrorKind::kShape, "conv3d bias length " + std::to_string(bias.size()) +
                                       " does not match filter count " + std::to_string(F));
  const Shape out_dims = conv_output(Conv3dSpec{C, F, k, padding}, input.dims());

  const std::size_t D = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Dp = D + 2 * padding.d, Hp = H + 2 * padding.h, Wp = W + 2 * padding.w;
  Tensor padded({C, Dp, Hp, Wp});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t h = 0; h < H; ++h) {
        const double* src = &input[((c * D + d) * H + h) * W];
        double* dst = &padded[((c * Dp + d + padding.d) * Hp + h + padding.h) * Wp + padding.w];
        std::copy(src, src + W, dst);
      }

  const std::size_t Do = out_dims[1], Ho = out_dims[2], Wo = out_dims[3];
  Tensor out(out_dims);
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t od = 0; od < Do; ++od)
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        double* row = &out[((f * Do + od) * Ho + oh) * Wo];
        std::fill(row, row + Wo, bias[f]);
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t a = 0; a < k.d; ++a)
            for (std::size_t b = 0; b < k.h; ++b) {
              const double* in_row = &padded[((c * Dp + od + a) * Hp + oh + b) * Wp];
              const double* w = &weights[(((f * C + c) * k.d + a) * k.h + b) * k.w];
              for (std::size_t e = 0; e < k.w; ++e) axpy(w[e], in_row + e, row, Wo);
            }
      }

  if (tape) {
    tape->valid = true;
    tape->input_dims = input.dims();
    tape->padding = padding;
    tape->padded_input = std::move(padded);
    tape->weights = weights;
  }
  return out;
}

Conv3dGrads conv3d_backward(const Conv3dTape& tape, const Tensor& upstream, bool need_input_grad) {
  if (!tape.valid) throw Error(ErrorKind::kState, "conv3d backward called before forward");
  const Tensor& weights = tape.weights;
  const Tensor& padded = tape.padded_input;
  const std::size_t F = weights.dim(0), C = weights.dim(1);
  const Triple k{weights.dim(2), weights.dim(3), weights.dim(4)};
  const std::size_t Dp = padded.dim(1), Hp = padded.dim(2), Wp = padded.dim(3);
  const Shape out_dims{F, Dp - k.d + 1, Hp - k.h + 1, Wp - k.w + 1};
  if (upstream.dims() != out_dims)
    throw Error(ErrorKind::kShape, "conv3d upstream gradient is " + shape_string(upstream.dims()) +
                                       ", forward output was " + shape_string(out_dims));
  const std::size_t Do = out_dims[1], Ho = out_dims[2], Wo = out_dims[3];

  Conv3dGrads g;
  g.weights = Tensor(weights.dims());
  g.bias = Tensor({F});
  Tensor grad_padded;
  if (need_input_grad) grad_padded = Tensor(padded.dims());

  for (std::size_t f = 0; f < F; ++f) {
    double bias_sum = 0.0;
    for (std::size_t od = 0; od < Do; ++od)
      for (std::size_t oh = 0; oh < Ho; ++oh) {
        const double* g_row = &upstream[((f * Do + od) * Ho + oh) * Wo];
        for (std::size_t x = 0; x < Wo; ++x) bias_sum += g_row[x];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t a = 0; a < k.d; ++a)
            for (std::size_t b = 0; b < k.h; ++b) {
              const std::size_t in_off = ((c * Dp + od + a) * Hp + oh + b) * Wp;
              const std::size_t w_off = (((f * C + c) * k.d + a) * k.h + b) * k.w;
              const double* in_row = &padded[in_off];
              for (std::size_t e = 0; e < k.w; ++e) g.weights[w_off + e] += dot(g_row, in_row + e, Wo);
              if (need_input_grad) {
                double* gi_row = &grad_padded[in_off];
                for (std::size_t e = 0; e < k.w; ++e) axpy(weights[w_off + e], g_row, gi_row + e, Wo);
              }
            }
      }
    g.bias[f] = bias_sum;
  }

  if (need_input_grad) {
    const Shape& in = tape.input_dims;
    const std::size_t D = in[1], H = in[2], W = in[3];
    g.input = Tensor(in);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t h = 0; h < H; ++h) {
          const double* src =
              &grad_padded[((c * Dp + d + tape.padding.d) * Hp + h + tape.padding.h) * Wp + tape.padding.w];
          std::copy(src, src + W, &g.input[((c * D + d) * H + h) * W]);
        }
  }
  return g;
}

// ---- maxpool3d ----------------------------------------------------------

Tensor maxpool3d_forward(const Tensor& input, Triple kernel, Triple stride, MaxPool3dTape* tape) {
  const Shape out_dims = pool_output(MaxPool3dSpec{kernel, stride}, input.dims());
  const std::size_t C = input.dim(0), D = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Do = out_dims[1], Ho = out_dims[2], Wo = out_dims[3];
  Tensor out(out_dims);
  std::vector<std::size_t> argmax(out.size());

  std::size_t o = 0;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t od = 0; od < Do; ++od)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = ((c * D + od * stride.d) * H + oh * stride.h) * W + ow * stride.w;
          for (std::size_t a = 0; a < kernel.d; ++a)
            for (std::size_t b = 0; b < kernel.h; ++b) {
              const std::size_t row = ((c * D + od * stride.d + a) * H + oh * stride.h + b) * W + ow * stride.w;
              for (std::size_t e = 0; e < kernel.w; ++e)
                if (input[row + e] > best) {
                  best = input[row + e];
                  best_idx = row + e;
                }
            }
          out[o] = best;
          argmax[o] = best_idx;
        }

  if (tape) {
    tape->valid = true;
    tape->input_dims = input.dims();
    tape->output_dims = out_dims;
    tape->argmax = std::move(argmax);
  }
  return out;
}

Tensor maxpool3d_backward(const MaxPool3dTape& tape, const Tensor& upstream) {
  if (!tape.valid) throw Error(ErrorKind::kState, "maxpool3d backward called without a forward tape");
  if (upstream.dims() != tape.output_dims)
    throw Error(ErrorKind::kShape, "maxpool3d upstream gradient is " + shape_string(upstream.dims()) +
                                       ", forward output was " + shape_string(tape.output_dims));
  Tensor grad(tape.input_dims);
  for (std::size_t o = 0; o < upstream.size(); ++o) grad[tape.argmax[o]] += upstream[o];
  return grad;
}

// ---- elementwise and dense ----------------------------------------------

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& forward_output, const Tensor& upstream) {
  if (forward_output.dims() != upstream.dims())
    throw Error(ErrorKind::kShape, "relu upstream gradient shape mismatch");
  Tensor grad = upstream;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(forward_output[i] > 0.0)) grad[i] = 0.0;
  return grad;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias, LinearTape* tape) {
  if (weights.rank() != 2) throw Error(ErrorKind::kShape, "linear weights must be rank 2");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (input.size() != n)
    throw Error(ErrorKind::kShape, "linear feature axis: input has " + std::to_string(input.size()) +
                                       ", weights expect " + std::to_string(n));
  if (bias.size() != m)
    throw Error(ErrorKind::kShape, "linear output axis: bias has " + std::to_string(bias.size()) +
                                       ", weights have " + std::to_string(m));
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) out[i] = bias[i] + dot(&weights[i * n], input.data().data(), n);
  if (tape) {
    tape->valid = true;
    tape->input = input;
    tape->weights = weights;
  }
  return out;
}

LinearGrads linear_backward(const LinearTape& tape, const Tensor& upstream) {
  if (!tape.valid) throw Error(ErrorKind::kState, "linear backward called before forward");
  const std::size_t m = tape.weights.dim(0), n = tape.weights.dim(1);
  if (upstream.size() != m)
    throw Error(ErrorKind::kShape, "linear upstream gradient has " + std::to_string(upstream.size()) +
                                       " entries, expected " + std::to_string(m));
  LinearGrads g;
  g.input = Tensor(tape.input.dims());
  g.weights = Tensor({m, n});
  g.bias = Tensor({m});
  for (std::size_t i = 0; i < m; ++i) {
    const double gi = upstream[i];
    g.bias[i] = gi;
    double* gw = &g.weights[i * n];
    const double* x = tape.input.data().data();
    for (std::size_t j = 0; j < n; ++j) gw[j] = gi * x[j];
    axpy(gi, &tape.weights[i * n], g.input.data().data(), n);
  }
  return g;
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  const double mx = *std::max_element(p.data().begin(), p.data().end());
  double sum = 0.0;
  for (auto& v : p.data()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p.data()) v /= sum;
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& one_hot) {
  if (logits.size() != one_hot.size())
    throw Error(ErrorKind::kShape, "cross-entropy class axis: logits have " + std::to_string(logits.size()) +
                                       ", target has " + std::to_string(one_hot.size()));
  std::size_t ones = 0, cls = 0;
  for (std::size_t i = 0; i < one_hot.size(); ++i) {
    if (one_hot[i] == 1.0) {
      ++ones;
      cls = i;
    } else if (one_hot[i] != 0.0) {
      ones = 2;
    }
  }
  if (ones != 1) throw Error(ErrorKind::kPrecondition, "target is not a one-hot vector");
  return softmax_cross_entropy(logits, cls);
}

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t true_class) {
  if (true_class >= logits.size())
    throw Error(ErrorKind::kShape, "true class " + std::to_string(true_class) + " out of range");
  const double mx = *std::max_element(logits.data().begin(), logits.data().end());
  double sum = 0.0;
  for (double v : logits.data()) sum += std::exp(v - mx);
  LossResult r;
  r.loss = -(logits[true_class] - mx - std::log(sum));
  r.grad_logits = softmax(logits);
  r.grad_logits[true_class] -= 1.0;
  return r;
}

// ---- optimisation -------------------------------------------------------

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr) {
  if (!(lr > 0.0)) throw Error(ErrorKind::kPrecondition, "learning rate must be positive");
  if (params.size() != grads.size())
    throw Error(ErrorKind::kShape, "sgd: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (p.dims() != g.dims())
      throw Error(ErrorKind::kShape, "sgd: gradient " + std::to_string(i) + " is " + shape_string(g.dims()) +
                                         ", parameter is " + shape_string(p.dims()));
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
  }
}

double LrSchedule::operator()(int epoch) const {
  return initial / std::pow(divisor, epoch / every_epochs);
}

}  // namespace coopsc
