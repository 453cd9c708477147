#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "coopsc/error.hpp"
#include "coopsc/gradcheck.hpp"
#include "coopsc/layers.hpp"
#include "coopsc/rng.hpp"
#include "coopsc/tensor.hpp"

using namespace coopsc;

namespace {

Tensor random_tensor(Shape dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(dims));
  CounterRng rng(seed);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Direct nested-loop cross-correlation with bounds checks instead of a padded copy.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, Triple pad) {
  const std::size_t C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t F = w.dim(0), kd = w.dim(2), kh = w.dim(3), kw = w.dim(4);
  const std::size_t Do = D + 2 * pad.d - kd + 1, Ho = H + 2 * pad.h - kh + 1, Wo = W + 2 * pad.w - kw + 1;
  Tensor out({F, Do, Ho, Wo});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t od = 0; od < Do; ++od)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          double s = b[f];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kd; ++i)
              for (std::size_t j = 0; j < kh; ++j)
                for (std::size_t k = 0; k < kw; ++k) {
                  const long id = static_cast<long>(od + i) - static_cast<long>(pad.d);
                  const long ih = static_cast<long>(oh + j) - static_cast<long>(pad.h);
                  const long iw = static_cast<long>(ow + k) - static_cast<long>(pad.w);
                  if (id < 0 || ih < 0 || iw < 0 || id >= static_cast<long>(D) || ih >= static_cast<long>(H) ||
                      iw >= static_cast<long>(W))
                    continue;
                  s += w.at({f, c, i, j, k}) * x.at({c, static_cast<std::size_t>(id), static_cast<std::size_t>(ih),
                                                     static_cast<std::size_t>(iw)});
                }
          out.at({f, od, oh, ow}) = s;
        }
  return out;
}

// Central difference of a scalar function of one tensor.
Tensor numeric_grad(Tensor& x, const std::function<double()>& f, double eps = 1e-5) {
  Tensor g(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f();
    x[i] = saved - eps;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

double max_rel_error(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Tensor, SizeMatchesDims) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.reshaped({4, 6}).size(), 24u);
  EXPECT_THROW(t.reshaped({5, 5}), Error);
  EXPECT_THROW(Tensor({2, 0}), Error);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), Error);
}

TEST(Tensor, RowMajorIndexing) {
  Tensor t({2, 3, 4});
  t.at({1, 2, 3}) = 5.0;
  EXPECT_EQ(t[23], 5.0);
  EXPECT_THROW(t.at({2, 0, 0}), Error);
}

TEST(Shapes, EncoderChainProducesFeatureShape) {
  const std::vector<LayerSpec> enc{Conv3dSpec{3, 4, {3, 3, 3}, {1, 1, 1}}, ReluSpec{},
                                   MaxPool3dSpec{{3, 5, 5}, {3, 5, 5}}};
  EXPECT_EQ(output_shape(enc, {3, 16, 112, 112}), (Shape{4, 5, 22, 22}));
}

TEST(Shapes, DecoderChainProducesDeepFeature) {
  const std::vector<LayerSpec> dec{Conv3dSpec{4, 8}, ReluSpec{}, MaxPool3dSpec{}, Conv3dSpec{8, 8}, ReluSpec{},
                                   MaxPool3dSpec{}, Conv3dSpec{8, 8}, ReluSpec{}};
  EXPECT_EQ(output_shape(dec, {4, 5, 22, 22}), (Shape{8, 1, 5, 5}));
  const std::vector<LayerSpec> head{ReshapeSpec{{200}}, LinearSpec{200, 5}};
  EXPECT_EQ(output_shape(head, {8, 1, 5, 5}), (Shape{5}));
}

TEST(Shapes, FormulaHoldsForRandomSpecs) {
  CounterRng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t in = 1 + rng.below(20);
    const std::size_t k = 1 + rng.below(5);
    const std::size_t s = 1 + rng.below(4);
    if (k > in) continue;
    const auto out = output_shape(MaxPool3dSpec{{k, k, k}, {s, s, s}}, {2, in, in, in});
    EXPECT_EQ(out[1], (in - k) / s + 1);
    const std::size_t p = rng.below(3);
    if (in + 2 * p < k) continue;
    const auto co = output_shape(Conv3dSpec{2, 3, {k, k, k}, {p, p, p}}, {2, in, in, in});
    EXPECT_EQ(co, (Shape{3, in + 2 * p - k + 1, in + 2 * p - k + 1, in + 2 * p - k + 1}));
  }
}

TEST(Shapes, MismatchNamesAxis) {
  try {
    output_shape(Conv3dSpec{3, 4}, {2, 16, 112, 112});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos);
  }
  EXPECT_THROW(output_shape(MaxPool3dSpec{{3, 5, 5}, {3, 5, 5}}, {1, 2, 10, 10}), Error);
}

TEST(Conv3d, PaperEncoderShape) {
  Tensor x({3, 16, 112, 112}, 0.5);
  Tensor w({4, 3, 3, 3, 3}, 0.01), b({4});
  EXPECT_EQ(conv3d_forward(x, w, b, {1, 1, 1}).dims(), (Shape{4, 16, 112, 112}));
}

TEST(Conv3d, ZeroWeightsGiveZeroOutput) {
  const auto x = random_tensor({2, 4, 5, 5}, 1);
  const auto y = conv3d_forward(x, Tensor({3, 2, 3, 3, 3}), Tensor({3}), {1, 1, 1});
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv3d, OnesCubeCountsOverlap) {
  Tensor x({1, 2, 2, 2}, 1.0);
  Tensor w({1, 1, 3, 3, 3}, 1.0);
  const auto y = conv3d_forward(x, w, Tensor({1}), {1, 1, 1});
  // Every 3x3x3 window around a cell of a 2x2x2 cube covers the whole cube.
  for (double v : y.data()) EXPECT_EQ(v, 8.0);
  EXPECT_EQ(y, naive_conv(x, w, Tensor({1}), {1, 1, 1}));
}

TEST(Conv3d, OnesPlateOverlapCounts) {
  Tensor x({1, 1, 3, 3}, 1.0);
  Tensor w({1, 1, 1, 3, 3}, 1.0);
  const auto y = conv3d_forward(x, w, Tensor({1}), {0, 1, 1});
  EXPECT_EQ(y.at({0, 0, 0, 0}), 4.0);
  EXPECT_EQ(y.at({0, 0, 0, 1}), 6.0);
  EXPECT_EQ(y.at({0, 0, 1, 1}), 9.0);
}

TEST(Conv3d, MatchesNaiveOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = random_tensor({3, 4, 6, 5}, seed);
    const auto w = random_tensor({2, 3, 3, 2, 3}, seed + 100);
    const auto b = random_tensor({2}, seed + 200);
    const Triple pad{seed % 2, 1, seed % 3 == 0 ? 0u : 1u};
    const auto got = conv3d_forward(x, w, b, pad);
    const auto want = naive_conv(x, w, b, pad);
    ASSERT_EQ(got.dims(), want.dims());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv3d, Linearity) {
  const auto x = random_tensor({2, 4, 5, 5}, 3), y = random_tensor({2, 4, 5, 5}, 4);
  const auto w = random_tensor({3, 2, 3, 3, 3}, 5);
  const Tensor b({3});
  const double a = 1.7, c = -0.3;
  Tensor mix(x.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + c * y[i];
  const auto lhs = conv3d_forward(mix, w, b, {1, 1, 1});
  const auto fx = conv3d_forward(x, w, b, {1, 1, 1}), fy = conv3d_forward(y, w, b, {1, 1, 1});
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], a * fx[i] + c * fy[i], 1e-10);
}

TEST(Conv3d, SingleOutputWeightGradIsPatch) {
  const auto x = random_tensor({2, 3, 3, 3}, 8);
  Conv3dTape tape;
  const auto y = conv3d_forward(x, random_tensor({1, 2, 3, 3, 3}, 9), Tensor({1}), {0, 0, 0}, &tape);
  ASSERT_EQ(y.size(), 1u);
  const auto g = conv3d_backward(tape, Tensor(y.dims(), 1.0));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(g.weights[i], x[i]);
  EXPECT_EQ(g.bias[0], 1.0);
}

TEST(Conv3d, ZeroUpstreamGivesZeroGrads) {
  const auto x = random_tensor({2, 3, 4, 4}, 8);
  Conv3dTape tape;
  const auto y = conv3d_forward(x, random_tensor({2, 2, 3, 3, 3}, 9), Tensor({2}), {1, 1, 1}, &tape);
  const auto g = conv3d_backward(tape, Tensor(y.dims()));
  for (const Tensor* t : {&g.input, &g.weights, &g.bias})
    for (double v : t->data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv3d, BackwardMatchesFiniteDifferences) {
  auto x = random_tensor({2, 3, 4, 4}, 21);
  auto w = random_tensor({2, 2, 3, 3, 3}, 22);
  auto b = random_tensor({2}, 23);
  const auto r = random_tensor({2, 3, 4, 4}, 24);  // fixed projection turns the output into a scalar
  auto f = [&] { return dot(conv3d_forward(x, w, b, {1, 1, 1}), r); };
  Conv3dTape tape;
  conv3d_forward(x, w, b, {1, 1, 1}, &tape);
  const auto g = conv3d_backward(tape, r);
  EXPECT_LT(max_rel_error(g.input, numeric_grad(x, f)), 1e-4);
  EXPECT_LT(max_rel_error(g.weights, numeric_grad(w, f)), 1e-4);
  EXPECT_LT(max_rel_error(g.bias, numeric_grad(b, f)), 1e-4);
}

TEST(Conv3d, BackwardWithoutTapeIsStateError) {
  try {
    conv3d_backward(Conv3dTape{}, Tensor({1, 1, 1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

TEST(MaxPool3d, PaperShapes) {
  EXPECT_EQ(maxpool3d_forward(Tensor({4, 16, 112, 112}), {3, 5, 5}, {3, 5, 5}).dims(), (Shape{4, 5, 22, 22}));
  EXPECT_EQ(maxpool3d_forward(Tensor({4, 5, 22, 22}), {2, 2, 2}, {2, 2, 2}).dims(), (Shape{4, 2, 11, 11}));
}

TEST(MaxPool3d, ConstantInputConstantOutput) {
  const auto y = maxpool3d_forward(Tensor({2, 4, 6, 6}, -0.25), {2, 3, 3}, {2, 3, 3});
  for (double v : y.data()) EXPECT_EQ(v, -0.25);
}

TEST(MaxPool3d, IncreasingInputRoutesToLastElement) {
  Tensor x({1, 2, 2, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  MaxPool3dTape tape;
  maxpool3d_forward(x, {2, 2, 2}, {2, 2, 2}, &tape);
  const auto g = maxpool3d_backward(tape, Tensor({1, 1, 1, 1}, 1.0));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(g[i], 0.0);
  EXPECT_EQ(g[7], 1.0);
}

TEST(MaxPool3d, TiesGoToLowestIndex) {
  MaxPool3dTape tape;
  maxpool3d_forward(Tensor({1, 2, 2, 2}, 3.0), {2, 2, 2}, {2, 2, 2}, &tape);
  const auto g = maxpool3d_backward(tape, Tensor({1, 1, 1, 1}, 1.0));
  EXPECT_EQ(g[0], 1.0);
  for (std::size_t i = 1; i < 8; ++i) EXPECT_EQ(g[i], 0.0);
}

TEST(MaxPool3d, BackwardMatchesFiniteDifferences) {
  auto x = random_tensor({1, 4, 4, 4}, 31);  // continuous draws: no ties
  const auto r = random_tensor({1, 2, 2, 2}, 32);
  auto f = [&] { return dot(maxpool3d_forward(x, {2, 2, 2}, {2, 2, 2}), r); };
  MaxPool3dTape tape;
  maxpool3d_forward(x, {2, 2, 2}, {2, 2, 2}, &tape);
  EXPECT_LT(max_rel_error(maxpool3d_backward(tape, r), numeric_grad(x, f)), 1e-4);
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
  auto x = random_tensor({7}, 41), w = random_tensor({3, 7}, 42), b = random_tensor({3}, 43);
  const auto r = random_tensor({3}, 44);
  auto f = [&] { return dot(linear_forward(x, w, b), r); };
  LinearTape tape;
  linear_forward(x, w, b, &tape);
  const auto g = linear_backward(tape, r);
  EXPECT_LT(max_rel_error(g.input, numeric_grad(x, f)), 1e-6);
  EXPECT_LT(max_rel_error(g.weights, numeric_grad(w, f)), 1e-6);
  EXPECT_LT(max_rel_error(g.bias, numeric_grad(b, f)), 1e-6);
}

TEST(Relu, ForwardAndBackward) {
  const Tensor x({4}, std::vector<double>{-1.0, 0.0, 2.0, -3.0});
  const auto y = relu_forward(x);
  EXPECT_EQ(y, Tensor({4}, std::vector<double>{0.0, 0.0, 2.0, 0.0}));
  EXPECT_EQ(relu_backward(y, Tensor({4}, 1.0)), Tensor({4}, std::vector<double>{0.0, 0.0, 1.0, 0.0}));
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLog5) {
  EXPECT_NEAR(softmax_cross_entropy(Tensor({5}, 0.3), 2).loss, std::log(5.0), 1e-12);
  EXPECT_NEAR(std::log(5.0), 1.60944, 1e-5);
}

TEST(SoftmaxCrossEntropy, ConfidentCorrectLogitsGiveZeroLoss) {
  Tensor one_hot({5});
  one_hot[3] = 1.0;
  Tensor logits({5});
  logits[3] = 1e6;
  EXPECT_NEAR(softmax_cross_entropy(logits, one_hot).loss, 0.0, 1e-12);
}

TEST(SoftmaxCrossEntropy, GradMatchesFiniteDifferences) {
  auto logits = random_tensor({5}, 51, -3, 3);
  auto f = [&] { return softmax_cross_entropy(logits, 1).loss; };
  const auto g = softmax_cross_entropy(logits, 1).grad_logits;
  EXPECT_LT(max_rel_error(g, numeric_grad(logits, f)), 1e-6);
}

TEST(SoftmaxCrossEntropy, RejectsBadTarget) {
  EXPECT_THROW(softmax_cross_entropy(Tensor({5}), Tensor({5})), Error);
  EXPECT_THROW(softmax_cross_entropy(Tensor({5}), 5), Error);
}

TEST(Sgd, Arithmetic) {
  Tensor p({1}, 1.0);
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor({1}, 2.0)};
  sgd_step(params, grads, 0.5);
  EXPECT_EQ(p[0], 0.0);
}

TEST(Sgd, ZeroGradsLeaveParams) {
  auto p = random_tensor({3, 3}, 61);
  const auto before = p;
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> grads{Tensor({3, 3})};
  sgd_step(params, grads, 0.1);
  EXPECT_EQ(p, before);
  EXPECT_THROW(sgd_step(params, grads, 0.0), Error);
}

TEST(LrSchedule, StepsDownEveryFourEpochs) {
  const LrSchedule lr;
  EXPECT_DOUBLE_EQ(lr(0), 0.003);
  EXPECT_DOUBLE_EQ(lr(3), 0.003);
  EXPECT_DOUBLE_EQ(lr(4), 0.00075);
  EXPECT_DOUBLE_EQ(lr(8), 0.0001875);
}

TEST(GradCheck, TinyNetSeed7) { EXPECT_LT(seeded_grad_check(7).max_rel_error, 1e-4); }

TEST(GradCheck, SeveralSeeds) {
  for (std::uint64_t s = 1; s <= 4; ++s) EXPECT_LT(seeded_grad_check(s).max_rel_error, 1e-4) << "seed " << s;
}

TEST(GradCheck, ZeroInputZeroWeights) {
  TinyNet net({}, 3);
  for (Tensor* p : net.parameters()) p->fill(0.0);
  const Tensor input(TinyNetSpec{}.input);
  std::vector<Tensor> grads;
  net.loss_and_gradients(input, 2, grads);
  // Everything upstream of the output bias sees zero activations or zero weights.
  for (std::size_t p = 0; p + 1 < grads.size(); ++p)
    for (double v : grads[p].data()) EXPECT_EQ(v, 0.0);
  EXPECT_LT(grad_check(net, input, 2), 1e-8);
}

TEST(GradCheck, RejectsNonPositiveEpsilon) {
  TinyNet net({}, 3);
  try {
    grad_check(net, Tensor(TinyNetSpec{}.input), 0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPrecondition);
  }
}

TEST(Determinism, SameSeedSameOutputs) {
  TinyNet a({}, 11), b({}, 11);
  EXPECT_EQ(a.conv_w, b.conv_w);
  EXPECT_EQ(a.fc_w, b.fc_w);
  const auto x = random_tensor(TinyNetSpec{}.input, 12);
  EXPECT_EQ(a.loss(x, 1), b.loss(x, 1));
}

TEST(Finiteness, ForwardBackwardStayFinite) {
  const auto x = random_tensor({2, 4, 6, 6}, 71, -100, 100);
  Conv3dTape tape;
  const auto y = conv3d_forward(x, random_tensor({3, 2, 3, 3, 3}, 72), Tensor({3}), {1, 1, 1}, &tape);
  EXPECT_TRUE(y.all_finite());
  const auto g = conv3d_backward(tape, random_tensor(y.dims(), 73));
  EXPECT_TRUE(g.input.all_finite());
  EXPECT_TRUE(g.weights.all_finite());
}
