#include "coopsc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "coopsc/error.hpp"

namespace coopsc {

void he_uniform_init(Tensor& weights, std::size_t fan_in, CounterRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : weights.data()) v = rng.uniform(-limit, limit);
}

TinyNet::TinyNet(const TinyNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  const std::size_t c = spec.input.at(0);
  conv_w = Tensor({spec.filters, c, 3, 3, 3});
  conv_b = Tensor({spec.filters});
  const Shape pooled = output_shape(MaxPool3dSpec{spec.pool, spec.pool},
                                    Shape{spec.filters, spec.input[1], spec.input[2], spec.input[3]});
  const std::size_t flat = element_count(pooled);
  fc_w = Tensor({spec.classes, flat});
  fc_b = Tensor({spec.classes});
  CounterRng rng(seed);
  he_uniform_init(conv_w, c * 27, rng);
  he_uniform_init(fc_w, flat, rng);
}

std::vector<Tensor*> TinyNet::parameters() { return {&conv_w, &conv_b, &fc_w, &fc_b}; }

double TinyNet::loss(const Tensor& input, std::size_t label) const {
  Tensor h = relu_forward(conv3d_forward(input, conv_w, conv_b, {1, 1, 1}));
  h = maxpool3d_forward(h, spec_.pool, spec_.pool);
  return softmax_cross_entropy(linear_forward(h, fc_w, fc_b), label).loss;
}

double TinyNet::loss_and_gradients(const Tensor& input, std::size_t label,
                                   std::vector<Tensor>& grads) const {
  Conv3dTape conv_tape;
  MaxPool3dTape pool_tape;
  LinearTape fc_tape;
  const Tensor act = relu_forward(conv3d_forward(input, conv_w, conv_b, {1, 1, 1}, &conv_tape));
  const Tensor pooled = maxpool3d_forward(act, spec_.pool, spec_.pool, &pool_tape);
  auto [loss, dlogits] = softmax_cross_entropy(linear_forward(pooled, fc_w, fc_b, &fc_tape), label);

  LinearGrads fc = linear_backward(fc_tape, dlogits);
  Tensor dact = relu_backward(act, maxpool3d_backward(pool_tape, fc.input.reshaped(pooled.dims())));
  Conv3dGrads conv = conv3d_backward(conv_tape, dact, false);

  grads.clear();
  grads.push_back(std::move(conv.weights));
  grads.push_back(std::move(conv.bias));
  grads.push_back(std::move(fc.weights));
  grads.push_back(std::move(fc.bias));
  return loss;
}

double grad_check(Differentiable& net, const Tensor& input, std::size_t label, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kPrecondition, "grad_check epsilon must be positive");
  std::vector<Tensor> analytic;
  net.loss_and_gradients(input, label, analytic);
  auto params = net.parameters();
  if (analytic.size() != params.size())
    throw Error(ErrorKind::kState, "gradient list is not aligned with parameters");

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = *params[p];
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + epsilon;
      const double up = net.loss(input, label);
      param[i] = saved - epsilon;
      const double down = net.loss(input, label);
      param[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

GradCheckRun seeded_grad_check(std::uint64_t seed, const TinyNetSpec& spec) {
  TinyNet net(spec, seed);
  Tensor input(spec.input);
  CounterRng rng(derive_seed(seed, {0x494e}));
  for (double& v : input.data()) v = rng.uniform(-1.0, 1.0);
  GradCheckRun run;
  for (const Tensor* p : net.parameters()) run.parameters += p->size();
  run.max_rel_error = grad_check(net, input, seed % spec.classes);
  return run;
}

}  // namespace coopsc
