#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "coopsc/tensor.hpp"

namespace coopsc {

/// Extents along (depth, height, width). Always in that order internally.
struct Triple {
  std::size_t d = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Conv3dSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Triple kernel{3, 3, 3};
  Triple padding{1, 1, 1};
};

struct MaxPool3dSpec {
  Triple kernel{2, 2, 2};
  Triple stride{2, 2, 2};
};

struct ReluSpec {};

struct ReshapeSpec {
  Shape target;
};

struct LinearSpec {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
};

using LayerSpec = std::variant<Conv3dSpec, MaxPool3dSpec, ReluSpec, ReshapeSpec, LinearSpec>;

/// Output dims for a layer applied to `input`. Conv and pool use
/// floor((in + 2*pad - kernel) / stride) + 1 per spatial axis (conv stride is 1).
/// Throws Error(kShape) naming the offending axis.
Shape output_shape(const LayerSpec& spec, const Shape& input);

/// Folds output_shape over a stack of layers.
Shape output_shape(std::span<const LayerSpec> stack, Shape input);

// ---- conv3d -------------------------------------------------------------

struct Conv3dTape {
  bool valid = false;
  Shape input_dims;
  Triple padding;
  Tensor padded_input;
  Tensor weights;
};

struct Conv3dGrads {
  Tensor input;  // left empty when not requested
  Tensor weights;
  Tensor bias;
};

/// Cross-correlation of input[C,D,H,W] with weights[F,C,kd,kh,kw], stride 1.
/// Pass a tape to record what the backward pass needs.
Tensor conv3d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      Triple padding, Conv3dTape* tape = nullptr);

Conv3dGrads conv3d_backward(const Conv3dTape& tape, const Tensor& upstream,
                            bool need_input_grad = true);

// ---- maxpool3d ----------------------------------------------------------

struct MaxPool3dTape {
  bool valid = false;
  Shape input_dims;
  Shape output_dims;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// Floor-mode max pooling; ties resolve to the lowest flat input index.
Tensor maxpool3d_forward(const Tensor& input, Triple kernel, Triple stride,
                         MaxPool3dTape* tape = nullptr);

Tensor maxpool3d_backward(const MaxPool3dTape& tape, const Tensor& upstream);

// ---- elementwise and dense ----------------------------------------------

Tensor relu_forward(const Tensor& input);

/// `forward_output` is what relu_forward returned; gradient flows where it is > 0.
Tensor relu_backward(const Tensor& forward_output, const Tensor& upstream);

struct LinearTape {
  bool valid = false;
  Tensor input;
  Tensor weights;
};

struct LinearGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// y = W x + b with x[n], W[m,n], b[m]. Any-rank input is read flat.
Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      LinearTape* tape = nullptr);

LinearGrads linear_backward(const LinearTape& tape, const Tensor& upstream);

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
};

Tensor softmax(const Tensor& logits);

/// -log softmax(logits)[true class], with grad = softmax - one_hot.
LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& one_hot);
LossResult softmax_cross_entropy(const Tensor& logits, std::size_t true_class);

// ---- optimisation -------------------------------------------------------

/// p <- p - lr * g for each (param, grad) pair.
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads, double lr);

struct LrSchedule {
  double initial = 0.003;
  double divisor = 4.0;
  int every_epochs = 4;

  /// Learning rate for a 0-indexed epoch.
  double operator()(int epoch) const;
};

}  // namespace coopsc
