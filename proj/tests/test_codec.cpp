#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "coopsc/codec.hpp"
#include "coopsc/error.hpp"
#include "coopsc/layers.hpp"
#include "coopsc/rng.hpp"
#include "coopsc/synth.hpp"
#include "coopsc/weights_io.hpp"

using namespace coopsc;
namespace fs = std::filesystem;

namespace {

VideoSegment random_segment(std::uint64_t seed) {
  Tensor t(kSegmentShape);
  CounterRng rng(seed);
  for (double& v : t.data()) v = rng.uniform();
  return VideoSegment::from_tensor(0, std::move(t));
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("coopsc_test_" + name); }

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kState;
}

}  // namespace

TEST(Segments, CountArithmetic) {
  EXPECT_EQ(segment_count(29640, 16), 1852u);
  EXPECT_EQ(segment_count(16, 16), 1u);
  EXPECT_EQ(segment_count(31, 16), 1u);
  EXPECT_EQ(segment_count(15, 16), 0u);
  EXPECT_EQ(segment_count(32, 16), 2u);
  EXPECT_EQ(segment_count(32, 8), 3u);
}

TEST(Segments, SampleSegmentsSlicesFrames) {
  std::vector<Frame> frames(31, Frame(kFrameBytes, 0));
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i][0] = static_cast<std::uint8_t>(i);
  auto segs = sample_segments(frames, 16);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].frames.dims(), kSegmentShape);
  EXPECT_DOUBLE_EQ(segs[0].frames.at({0, 15, 0, 0}), 15.0 / 255.0);
  frames.resize(16);
  EXPECT_EQ(sample_segments(frames, 16).size(), 1u);
  segs = sample_segments(std::vector<Frame>(40, Frame(kFrameBytes, 7)), 8);
  ASSERT_EQ(segs.size(), 4u);
  EXPECT_EQ(segs[3].sample_index, 3u);
}

TEST(Segments, RejectsWrongShape) {
  EXPECT_EQ(kind_of([] { VideoSegment::from_tensor(0, Tensor({3, 15, 112, 112})); }), ErrorKind::kShape);
  EXPECT_EQ(kind_of([] { VideoSegment::from_rgb8(0, std::vector<std::uint8_t>(100)); }), ErrorKind::kShape);
}

TEST(Codec, EncodeYieldsL4840Symbols) {
  const auto model = CodecModel::initialize(3);
  for (std::uint64_t s : {1, 2}) {
    const auto f = encode(random_segment(s), model);
    EXPECT_EQ(f.symbols.size(), kSymbolsPerFeature);
    EXPECT_NEAR(f.avg_power, 1.0, 1e-9);
    EXPECT_NEAR(average_power(f.symbols), 1.0, 1e-9);
  }
}

TEST(Codec, DeepFeatureShape) {
  const auto model = CodecModel::initialize(3);
  const auto r = forward(random_segment(5), model);
  EXPECT_EQ(r.deep_feature.dims(), kDeepFeatureShape);
  EXPECT_EQ(r.logits.dims(), (Shape{5}));
  EXPECT_EQ(extract_features(random_segment(5), model).values.dims(), kFeatureShape);
}

TEST(Codec, ZeroSegmentSkipsNormalisation) {
  const auto model = CodecModel::initialize(3);  // biases start at zero
  const auto f = encode(VideoSegment::from_tensor(0, Tensor(kSegmentShape)), model);
  EXPECT_EQ(f.symbols.size(), kSymbolsPerFeature);
  EXPECT_EQ(f.avg_power, 0.0);
  EXPECT_EQ(f.scale, 1.0);
  for (const auto& s : f.symbols) EXPECT_EQ(s, Symbol(0.0, 0.0));
}

TEST(Codec, ReshapeRoundTripIsExact) {
  const auto model = CodecModel::initialize(13);
  const auto feat = extract_features(random_segment(13), model);
  const auto sym = features_to_symbols(feat);
  // element 2t -> real part, 2t+1 -> imaginary part, before scaling
  EXPECT_DOUBLE_EQ(sym.symbols[7].real() / sym.scale, feat.values[14]);
  EXPECT_DOUBLE_EQ(sym.symbols[7].imag() / sym.scale, feat.values[15]);
  const auto back = symbols_to_features(sym);
  ASSERT_EQ(back.values.dims(), feat.values.dims());
  for (std::size_t i = 0; i < feat.values.size(); ++i) EXPECT_NEAR(back.values[i], feat.values[i], 1e-12 * (1 + std::abs(feat.values[i])));
}

TEST(Codec, ReshapeBijectionOnArbitraryValues) {
  Tensor t(kFeatureShape);
  CounterRng rng(77);
  for (double& v : t.data()) v = rng.uniform(-5, 5);
  SemanticFeature f{t};
  const auto sym = features_to_symbols(f);
  SymbolFrame unscaled = sym;
  const auto back = symbols_to_features(unscaled);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(back.values[i], t[i], 1e-12 * (1 + std::abs(t[i])));
}

TEST(Codec, NoiselessLoopbackMatchesForwardBitwise) {
  const auto model = CodecModel::initialize(21);
  const auto seg = random_segment(22);
  const auto rx = transmit(encode(seg, model), {kNoiselessSnr, 0});
  const auto a = decode(rx, model);
  const auto b = forward(seg, model);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.deep_feature, b.deep_feature);
}

TEST(Codec, ZeroSymbolsGiveBiasOnlyLogits) {
  const auto model = CodecModel::initialize(4);  // zero biases everywhere
  SymbolFrame zero;
  zero.symbols.assign(kSymbolsPerFeature, {0.0, 0.0});
  const auto r = decode(zero, model);
  EXPECT_EQ(r.logits, model.fc_b);

  auto biased = model;
  for (std::size_t i = 0; i < 5; ++i) biased.fc_b[i] = 0.1 * static_cast<double>(i);
  EXPECT_EQ(decode(zero, biased).logits, biased.fc_b);
}

TEST(Codec, DecodeRejectsWrongLength) {
  const auto model = CodecModel::initialize(4);
  SymbolFrame f;
  f.symbols.assign(100, {1.0, 0.0});
  EXPECT_EQ(kind_of([&] { decode(f, model); }), ErrorKind::kShape);
}

TEST(Classify, Argmax) {
  EXPECT_EQ(classify(Tensor({5}, std::vector<double>{0, 0, 0, 0, 1})), Activity::kCalling);
  EXPECT_EQ(classify(Tensor({5}, 0.7)), Activity::kSleeping);
  EXPECT_EQ(classify(Tensor({5}, std::vector<double>{0, 2, 2, 1, 0})), Activity::kResting);
}

TEST(Classify, SoftmaxInvariant) {
  CounterRng rng(5);
  for (int i = 0; i < 100; ++i) {
    Tensor l({5});
    for (double& v : l.data()) v = rng.uniform(-4, 4);
    EXPECT_EQ(classify(l), classify(softmax(l)));
  }
}

TEST(Activity, NamesRoundTrip) {
  for (std::size_t i = 0; i < kNumActivities; ++i) {
    const auto a = static_cast<Activity>(i);
    EXPECT_EQ(parse_activity(to_string(a)), a);
  }
  EXPECT_EQ(parse_activity("dress-up"), Activity::kDressUp);
  EXPECT_FALSE(parse_activity("jogging"));
}

TEST(Training, IdenticalBatchEqualsSingleSample) {
  const auto model = CodecModel::initialize(8);
  const auto seg = random_segment(9);
  const std::vector<VideoSegment> batch(3, seg);
  const std::vector<Activity> labels(3, Activity::kEating);
  const auto single = sample_gradients(model, seg, Activity::kEating, {kNoiselessSnr, 0});
  const auto avg = batch_gradients(model, batch, labels, kNoiselessSnr, 1);
  EXPECT_NEAR(avg.loss, single.loss, 1e-14);
  ASSERT_EQ(avg.grads.size(), single.grads.size());
  for (std::size_t p = 0; p < avg.grads.size(); ++p)
    for (std::size_t i = 0; i < avg.grads[p].size(); ++i)
      EXPECT_NEAR(avg.grads[p][i], single.grads[p][i], 1e-14 * (1 + std::abs(single.grads[p][i])));
}

TEST(Training, GradientsMatchFiniteDifferencesNoiseless) {
  // Spot-check a handful of classifier-side parameters on the full codec.
  const auto model = CodecModel::initialize(8);
  const auto seg = random_segment(10);
  const auto g = sample_gradients(model, seg, Activity::kResting, {kNoiselessSnr, 0});
  auto loss_of = [&](const CodecModel& m) {
    return softmax_cross_entropy(forward(seg, m).logits, static_cast<std::size_t>(Activity::kResting)).loss;
  };
  const double eps = 1e-5;
  const auto names = CodecModel::parameter_names();
  for (std::size_t p : {std::size_t{6}, std::size_t{8}, std::size_t{9}}) {
    for (std::size_t i : {std::size_t{0}, std::size_t{3}}) {
      auto up = model, down = model;
      (*up.parameters()[p])[i] += eps;
      (*down.parameters()[p])[i] -= eps;
      const double num = (loss_of(up) - loss_of(down)) / (2 * eps);
      const double ana = g.grads[p][i];
      EXPECT_LT(std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-8}), 1e-4) << names[p] << "[" << i << "]";
    }
  }
}

TEST(Training, StepCountAndDeterminism) {
  auto data = make_clip_dataset(34, noiseless_video(), 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto a = train(data, cfg);
  EXPECT_EQ(a.optimizer_steps, 2u * 2u);  // ceil(34 / 32) per epoch
  ASSERT_EQ(a.history.size(), 2u);
  EXPECT_EQ(a.history[1].lr, 0.003);
  EXPECT_EQ(a.model.epochs_trained, 2);
  EXPECT_EQ(a.model.snr_train_db, 25.0);
  const auto b = train(data, cfg);
  EXPECT_EQ(a.model, b.model);
}

TEST(Training, RejectsEmptyDataset) {
  EXPECT_THROW(train(std::vector<LabeledClip>{}, TrainConfig{}), Error);
}

TEST(ModelIo, RoundTripIsBitwise) {
  const auto model = CodecModel::initialize(11);
  const auto path = temp_file("model.semw");
  save_model(model, path);
  EXPECT_EQ(load_model(path), model);
  fs::remove(path);
}

TEST(ModelIo, CorruptedFilesReportKinds) {
  const auto path = temp_file("model_bad.semw");
  save_model(CodecModel::initialize(11), path);
  const auto good = read_bytes(path);

  auto bytes = good;
  bytes.resize(bytes.size() / 2);
  write_bytes(path, bytes);
  EXPECT_EQ(kind_of([&] { load_model(path); }), ErrorKind::kTruncated);

  bytes = good;
  bytes[0] = 'X';
  write_bytes(path, bytes);
  EXPECT_EQ(kind_of([&] { load_model(path); }), ErrorKind::kFormat);

  bytes = good;
  bytes[4] = 2;
  write_bytes(path, bytes);
  EXPECT_EQ(kind_of([&] { load_model(path); }), ErrorKind::kVersion);

  fs::remove(path);
  EXPECT_EQ(kind_of([&] { load_model(path); }), ErrorKind::kIo);
}

TEST(ModelIo, ShapeMismatchIsRejected) {
  auto arrays = std::vector<NamedArray>{{"encoder.conv.weight", {1}, {0.0}}};
  const auto path = temp_file("model_shape.semw");
  write_weights_file(path, arrays);
  EXPECT_THROW(load_model(path), Error);
  fs::remove(path);
}

TEST(WeightsIo, EncodeDecodeLayout) {
  const std::vector<NamedArray> arrays{{"a", {2, 3}, {1, 2, 3, 4, 5, 6}}, {"bb", {1}, {0.5}}};
  const auto bytes = encode_weights(arrays);
  // 12 header + (2 + 1 + 1 + 8 + 24) + (2 + 2 + 1 + 4 + 4)
  EXPECT_EQ(bytes.size(), 12u + 36u + 13u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SEMW");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);
  const auto back = decode_weights(bytes);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "a");
  EXPECT_EQ(back[0].dims, (Shape{2, 3}));
  EXPECT_EQ(back[0].values, arrays[0].values);
  EXPECT_EQ(back[1].values, arrays[1].values);
}

TEST(WeightsIo, EveryTruncationIsDetected) {
  const std::vector<NamedArray> arrays{{"w", {3}, {1, 2, 3}}};
  const auto bytes = encode_weights(arrays);
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const std::span<const std::uint8_t> prefix(bytes.data(), n);
    EXPECT_EQ(kind_of([&] { decode_weights(prefix); }), ErrorKind::kTruncated) << n;
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_weights(extra); }), ErrorKind::kFormat);
}

TEST(WeightsIo, Float32Rounding) {
  std::vector<double> v{0.1, 1.0 / 3.0, 2.0};
  round_to_f32(v);
  EXPECT_EQ(v[0], static_cast<double>(0.1f));
  EXPECT_EQ(v[2], 2.0);
  const std::vector<NamedArray> arrays{{"x", {3}, v}};
  EXPECT_EQ(decode_weights(encode_weights(arrays))[0].values, v);
}

TEST(WeightsIo, MissingArrayIsFormatError) {
  const std::vector<NamedArray> arrays{{"x", {1}, {1.0}}};
  EXPECT_EQ(kind_of([&] { find_array(arrays, "y"); }), ErrorKind::kFormat);
}
