#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "coopsc/layers.hpp"
#include "coopsc/rng.hpp"
#include "coopsc/tensor.hpp"

namespace coopsc {

/// He-uniform fill: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void he_uniform_init(Tensor& weights, std::size_t fan_in, CounterRng& rng);

/// A classifier whose parameters can be perturbed in place and whose
/// cross-entropy loss has an analytic gradient.
class Differentiable {
 public:
  virtual ~Differentiable() = default;

  virtual std::vector<Tensor*> parameters() = 0;
  virtual double loss(const Tensor& input, std::size_t label) const = 0;
  /// Gradients come back aligned 1:1 with parameters().
  virtual double loss_and_gradients(const Tensor& input, std::size_t label,
                                    std::vector<Tensor>& grads) const = 0;
};

struct TinyNetSpec {
  Shape input{2, 4, 6, 6};
  std::size_t filters = 3;
  Triple pool{2, 2, 2};
  std::size_t classes = 5;
};

/// conv3d(3x3x3, pad 1) -> relu -> maxpool -> linear. Small enough that a
/// full central-difference sweep takes well under a second.
class TinyNet : public Differentiable {
 public:
  TinyNet(const TinyNetSpec& spec, std::uint64_t seed);

  std::vector<Tensor*> parameters() override;
  double loss(const Tensor& input, std::size_t label) const override;
  double loss_and_gradients(const Tensor& input, std::size_t label,
                            std::vector<Tensor>& grads) const override;

  Tensor conv_w, conv_b, fc_w, fc_b;

 private:
  TinyNetSpec spec_;
};

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// where numeric is the central difference with step `epsilon`.
double grad_check(Differentiable& net, const Tensor& input, std::size_t label, double epsilon = 1e-5);

struct GradCheckRun {
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

/// TinyNet and a uniform(-1, 1) input, both drawn from `seed`; label = seed mod classes.
GradCheckRun seeded_grad_check(std::uint64_t seed, const TinyNetSpec& spec = {});

}  // namespace coopsc
