#include "coopsc/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopsc/error.hpp"
#include "coopsc/gradcheck.hpp"
#include "coopsc/rng.hpp"
#include "coopsc/weights_io.hpp"

namespace coopsc {

namespace {

constexpr Triple kPad{1, 1, 1};
constexpr Triple kEncoderPool{3, 5, 5};
constexpr Triple kDecoderPool{2, 2, 2};

constexpr std::array<std::string_view, kNumActivities> kActivityNames = {
    "sleeping", "resting", "dress-up", "eating", "calling"};

}  // namespace

std::string_view to_string(Activity a) { return kActivityNames.at(static_cast<std::size_t>(a)); }

std::optional<Activity> parse_activity(std::string_view name) {
  for (std::size_t i = 0; i < kActivityNames.size(); ++i)
    if (kActivityNames[i] == name) return static_cast<Activity>(i);
  return std::nullopt;
}

VideoSegment VideoSegment::from_tensor(std::size_t index, Tensor frames) {
  if (frames.dims() != kSegmentShape)
    throw Error(ErrorKind::kShape, "video segment must be " + shape_string(kSegmentShape) + ", got " +
                                       shape_string(frames.dims()));
  return VideoSegment{index, std::move(frames)};
}

VideoSegment VideoSegment::from_rgb8(std::size_t index, std::span<const std::uint8_t> rgb) {
  constexpr std::size_t plane = kFrameSide * kFrameSide;
  if (rgb.size() != kSegmentFrames * kFrameBytes)
    throw Error(ErrorKind::kShape, "segment needs " + std::to_string(kSegmentFrames * kFrameBytes) +
                                       " bytes of 8-bit RGB, got " + std::to_string(rgb.size()));
  Tensor t(kSegmentShape);
  for (std::size_t f = 0; f < kSegmentFrames; ++f)
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < kColorChannels; ++c)
        t[(c * kSegmentFrames + f) * plane + p] = rgb[(f * plane + p) * kColorChannels + c] / 255.0;
  return VideoSegment{index, std::move(t)};
}

std::size_t segment_count(std::size_t total_frames, std::size_t stride) {
  if (stride == 0) throw Error(ErrorKind::kPrecondition, "segment stride must be >= 1");
  if (total_frames < kSegmentFrames) return 0;
  return (total_frames - kSegmentFrames) / stride + 1;
}

std::vector<VideoSegment> sample_segments(std::span<const Frame> frames, std::size_t stride) {
  const std::size_t n = segment_count(frames.size(), stride);
  std::vector<VideoSegment> out;
  out.reserve(n);
  std::vector<std::uint8_t> buf(kSegmentFrames * kFrameBytes);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t f = 0; f < kSegmentFrames; ++f) {
      const Frame& fr = frames[j * stride + f];
      if (fr.size() != kFrameBytes)
        throw Error(ErrorKind::kShape, "frame " + std::to_string(j * stride + f) + " is not 112x112x3");
      std::copy(fr.begin(), fr.end(), buf.begin() + static_cast<std::ptrdiff_t>(f * kFrameBytes));
    }
    out.push_back(VideoSegment::from_rgb8(j, buf));
  }
  return out;
}

// ---- model ----------------------------------------------------------------

CodecModel CodecModel::initialize(std::uint64_t seed) {
  CodecModel m;
  m.enc_w = Tensor({4, 3, 3, 3, 3});
  m.enc_b = Tensor({4});
  m.dec1_w = Tensor({8, 4, 3, 3, 3});
  m.dec1_b = Tensor({8});
  m.dec2_w = Tensor({8, 8, 3, 3, 3});
  m.dec2_b = Tensor({8});
  m.dec3_w = Tensor({8, 8, 3, 3, 3});
  m.dec3_b = Tensor({8});
  m.fc_w = Tensor({kNumActivities, element_count(kDeepFeatureShape)});
  m.fc_b = Tensor({kNumActivities});
  CounterRng rng(seed);
  he_uniform_init(m.enc_w, 3 * 27, rng);
  he_uniform_init(m.dec1_w, 4 * 27, rng);
  he_uniform_init(m.dec2_w, 8 * 27, rng);
  he_uniform_init(m.dec3_w, 8 * 27, rng);
  he_uniform_init(m.fc_w, element_count(kDeepFeatureShape), rng);
  for (Tensor* p : m.parameters()) round_to_f32(p->data());
  return m;
}

std::vector<Tensor*> CodecModel::parameters() {
  return {&enc_w, &enc_b, &dec1_w, &dec1_b, &dec2_w, &dec2_b, &dec3_w, &dec3_b, &fc_w, &fc_b};
}

std::vector<const Tensor*> CodecModel::parameters() const {
  return {&enc_w, &enc_b, &dec1_w, &dec1_b, &dec2_w, &dec2_b, &dec3_w, &dec3_b, &fc_w, &fc_b};
}

const std::vector<std::string>& CodecModel::parameter_names() {
  static const std::vector<std::string> names = {
      "encoder.conv.weight", "encoder.conv.bias",  "decoder.conv1.weight", "decoder.conv1.bias",
      "decoder.conv2.weight", "decoder.conv2.bias", "decoder.conv3.weight", "decoder.conv3.bias",
      "decoder.fc.weight",    "decoder.fc.bias"};
  return names;
}

// ---- inference ------------------------------------------------------------

SemanticFeature extract_features(const VideoSegment& segment, const CodecModel& model) {
  if (segment.frames.dims() != kSegmentShape)
    throw Error(ErrorKind::kShape, "encoder input must be " + shape_string(kSegmentShape) + ", got " +
                                       shape_string(segment.frames.dims()));
  Tensor h = relu_forward(conv3d_forward(segment.frames, model.enc_w, model.enc_b, kPad));
  return SemanticFeature{maxpool3d_forward(h, kEncoderPool, kEncoderPool)};
}

SymbolFrame features_to_symbols(const SemanticFeature& feature) {
  if (feature.values.size() != 2 * kSymbolsPerFeature)
    throw Error(ErrorKind::kShape, "semantic feature must hold " + std::to_string(2 * kSymbolsPerFeature) +
                                       " values, got " + std::to_string(feature.values.size()));
  SymbolFrame frame;
  frame.symbols.resize(kSymbolsPerFeature);
  for (std::size_t t = 0; t < kSymbolsPerFeature; ++t)
    frame.symbols[t] = Symbol(feature.values[2 * t], feature.values[2 * t + 1]);
  const double power = average_power(frame.symbols);
  if (power > 0.0) {
    frame.scale = 1.0 / std::sqrt(power);
    for (auto& s : frame.symbols) s *= frame.scale;
  }
  frame.avg_power = average_power(frame.symbols);
  return frame;
}

SemanticFeature symbols_to_features(const SymbolFrame& frame) {
  if (frame.symbols.size() != kSymbolsPerFeature)
    throw Error(ErrorKind::kShape, "expected " + std::to_string(kSymbolsPerFeature) + " symbols, got " +
                                       std::to_string(frame.symbols.size()));
  if (!(frame.scale > 0.0)) throw Error(ErrorKind::kPrecondition, "symbol frame carries a non-positive scale");
  Tensor k(kFeatureShape);
  for (std::size_t t = 0; t < kSymbolsPerFeature; ++t) {
    k[2 * t] = frame.symbols[t].real() / frame.scale;
    k[2 * t + 1] = frame.symbols[t].imag() / frame.scale;
  }
  return SemanticFeature{std::move(k)};
}

SymbolFrame encode(const VideoSegment& segment, const CodecModel& model) {
  return features_to_symbols(extract_features(segment, model));
}

DecodeResult decode_features(const SemanticFeature& feature, const CodecModel& model) {
  if (feature.values.dims() != kFeatureShape)
    throw Error(ErrorKind::kShape, "decoder input must be " + shape_string(kFeatureShape));
  Tensor h = relu_forward(conv3d_forward(feature.values, model.dec1_w, model.dec1_b, kPad));
  h = maxpool3d_forward(h, kDecoderPool, kDecoderPool);
  h = relu_forward(conv3d_forward(h, model.dec2_w, model.dec2_b, kPad));
  h = maxpool3d_forward(h, kDecoderPool, kDecoderPool);
  h = relu_forward(conv3d_forward(h, model.dec3_w, model.dec3_b, kPad));
  Tensor logits = linear_forward(h, model.fc_w, model.fc_b);
  return DecodeResult{std::move(logits), std::move(h)};
}

DecodeResult decode(const SymbolFrame& received, const CodecModel& model) {
  return decode_features(symbols_to_features(received), model);
}

DecodeResult forward(const VideoSegment& segment, const CodecModel& model) {
  return decode(encode(segment, model), model);
}

Activity classify(const Tensor& logits) {
  if (logits.size() != kNumActivities)
    throw Error(ErrorKind::kShape, "classify expects 5 logits, got " + std::to_string(logits.size()));
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return static_cast<Activity>(best);
}

// ---- training -------------------------------------------------------------

SampleGradients sample_gradients(const CodecModel& model, const VideoSegment& segment, Activity label,
                                 const ChannelConfig& channel) {
  Conv3dTape enc_tape, c1_tape, c2_tape, c3_tape;
  MaxPool3dTape enc_pool, p1_tape, p2_tape;
  LinearTape fc_tape;

  const Tensor enc_act = relu_forward(conv3d_forward(segment.frames, model.enc_w, model.enc_b, kPad, &enc_tape));
  SemanticFeature feature{maxpool3d_forward(enc_act, kEncoderPool, kEncoderPool, &enc_pool)};
  const SymbolFrame received = transmit(features_to_symbols(feature), channel);
  const SemanticFeature noisy = symbols_to_features(received);

  const Tensor a1 = relu_forward(conv3d_forward(noisy.values, model.dec1_w, model.dec1_b, kPad, &c1_tape));
  const Tensor p1 = maxpool3d_forward(a1, kDecoderPool, kDecoderPool, &p1_tape);
  const Tensor a2 = relu_forward(conv3d_forward(p1, model.dec2_w, model.dec2_b, kPad, &c2_tape));
  const Tensor p2 = maxpool3d_forward(a2, kDecoderPool, kDecoderPool, &p2_tape);
  const Tensor a3 = relu_forward(conv3d_forward(p2, model.dec3_w, model.dec3_b, kPad, &c3_tape));
  Tensor logits = linear_forward(a3, model.fc_w, model.fc_b, &fc_tape);
  LossResult lr = softmax_cross_entropy(logits, static_cast<std::size_t>(label));

  LinearGrads fc = linear_backward(fc_tape, lr.grad_logits);
  Conv3dGrads c3 = conv3d_backward(c3_tape, relu_backward(a3, fc.input.reshaped(a3.dims())));
  Conv3dGrads c2 = conv3d_backward(c2_tape, relu_backward(a2, maxpool3d_backward(p2_tape, c3.input)));
  Conv3dGrads c1 = conv3d_backward(c1_tape, relu_backward(a1, maxpool3d_backward(p1_tape, c2.input)));
  Conv3dGrads enc =
      conv3d_backward(enc_tape, relu_backward(enc_act, maxpool3d_backward(enc_pool, c1.input)), false);

  SampleGradients out;
  out.loss = lr.loss;
  out.logits = std::move(logits);
  out.grads.reserve(10);
  for (Conv3dGrads* g : {&enc, &c1, &c2, &c3}) {
    out.grads.push_back(std::move(g->weights));
    out.grads.push_back(std::move(g->bias));
  }
  out.grads.push_back(std::move(fc.weights));
  out.grads.push_back(std::move(fc.bias));
  return out;
}

SampleGradients batch_gradients(const CodecModel& model, std::span<const VideoSegment> segments,
                                std::span<const Activity> labels, double snr_db, std::uint64_t noise_key) {
  if (segments.empty() || segments.size() != labels.size())
    throw Error(ErrorKind::kPrecondition, "batch must be non-empty with one label per segment");
  SampleGradients total;
  for (std::size_t b = 0; b < segments.size(); ++b) {
    SampleGradients g =
        sample_gradients(model, segments[b], labels[b], ChannelConfig{snr_db, derive_seed(noise_key, {b})});
    if (b == 0) {
      total = std::move(g);
      continue;
    }
    total.loss += g.loss;
    for (std::size_t p = 0; p < total.grads.size(); ++p)
      for (std::size_t i = 0; i < total.grads[p].size(); ++i) total.grads[p][i] += g.grads[p][i];
  }
  const double inv = 1.0 / static_cast<double>(segments.size());
  total.loss *= inv;
  for (auto& g : total.grads)
    for (auto& v : g.data()) v *= inv;
  return total;
}

TrainResult train(std::span<const LabeledClip> dataset, const TrainConfig& config,
                  std::optional<CodecModel> initial) {
  if (dataset.empty()) throw Error(ErrorKind::kPrecondition, "training set is empty");
  if (config.batch_size == 0 || config.epochs < 0)
    throw Error(ErrorKind::kPrecondition, "batch size must be >= 1 and epochs >= 0");

  TrainResult result;
  result.model = initial ? std::move(*initial) : CodecModel::initialize(config.seed);
  CodecModel& model = result.model;
  const auto params = model.parameters();

  std::vector<std::size_t> order(dataset.size());
  std::vector<Tensor> velocity;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng shuffle_rng(derive_seed(config.seed, {0x5348u, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = config.lr(epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<VideoSegment> segments;
      std::vector<Activity> labels;
      for (std::size_t j = start; j < end; ++j) {
        segments.push_back(VideoSegment::from_rgb8(order[j], dataset[order[j]].rgb));
        labels.push_back(dataset[order[j]].label);
      }
      // Per-sample logits are needed for the running accuracy, so the batch
      // average is assembled here rather than through batch_gradients.
      const std::uint64_t noise_key =
          derive_seed(config.seed, {0x4e4fu, static_cast<std::uint64_t>(epoch), stats.steps});
      std::vector<Tensor> sum;
      for (std::size_t b = 0; b < segments.size(); ++b) {
        SampleGradients g = sample_gradients(model, segments[b], labels[b],
                                             ChannelConfig{config.snr_train_db, derive_seed(noise_key, {b})});
        loss_sum += g.loss;
        if (classify(g.logits) == labels[b]) ++correct;
        if (b == 0) {
          sum = std::move(g.grads);
        } else {
          for (std::size_t p = 0; p < sum.size(); ++p)
            for (std::size_t i = 0; i < sum[p].size(); ++i) sum[p][i] += g.grads[p][i];
        }
      }
      const double inv = 1.0 / static_cast<double>(segments.size());
      for (auto& g : sum)
        for (auto& v : g.data()) v *= inv;
      if (config.momentum > 0.0) {
        if (velocity.empty()) {
          velocity = sum;
        } else {
          for (std::size_t p = 0; p < sum.size(); ++p)
            for (std::size_t i = 0; i < sum[p].size(); ++i)
              velocity[p][i] = config.momentum * velocity[p][i] + sum[p][i];
        }
        sgd_step(params, velocity, stats.lr);
      } else {
        sgd_step(params, sum, stats.lr);
      }
      ++stats.steps;
      ++result.optimizer_steps;
    }
    stats.mean_loss = loss_sum / static_cast<double>(dataset.size());
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    result.history.push_back(stats);
  }

  for (Tensor* p : params) round_to_f32(p->data());
  model.epochs_trained += config.epochs;
  model.snr_train_db = static_cast<double>(static_cast<float>(config.snr_train_db));
  return result;
}

std::vector<std::vector<double>> evaluate_grid(const CodecModel& model, std::span<const LabeledClip> dataset,
                                               std::span<const double> snrs_db,
                                               std::span<const std::uint64_t> seeds) {
  if (dataset.empty()) throw Error(ErrorKind::kPrecondition, "evaluation set is empty");
  std::vector<std::vector<std::size_t>> correct(snrs_db.size(), std::vector<std::size_t>(seeds.size(), 0));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SymbolFrame sent = encode(VideoSegment::from_rgb8(i, dataset[i].rgb), model);
    for (std::size_t s = 0; s < snrs_db.size(); ++s)
      for (std::size_t r = 0; r < seeds.size(); ++r) {
        const SymbolFrame received = transmit(sent, ChannelConfig{snrs_db[s], derive_seed(seeds[r], {i})});
        if (classify(decode(received, model).logits) == dataset[i].label) ++correct[s][r];
      }
  }
  std::vector<std::vector<double>> acc(snrs_db.size(), std::vector<double>(seeds.size()));
  for (std::size_t s = 0; s < snrs_db.size(); ++s)
    for (std::size_t r = 0; r < seeds.size(); ++r)
      acc[s][r] = static_cast<double>(correct[s][r]) / static_cast<double>(dataset.size());
  return acc;
}

double evaluate(const CodecModel& model, std::span<const LabeledClip> dataset, double snr_db,
                std::uint64_t seed) {
  const double snrs[] = {snr_db};
  const std::uint64_t seeds[] = {seed};
  return evaluate_grid(model, dataset, snrs, seeds)[0][0];
}

// ---- persistence ----------------------------------------------------------

void save_model(const CodecModel& model, const std::filesystem::path& path) {
  std::vector<NamedArray> arrays;
  const auto params = model.parameters();
  const auto& names = CodecModel::parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i)
    arrays.push_back({names[i], params[i]->dims(), {params[i]->data().begin(), params[i]->data().end()}});
  arrays.push_back({"meta.epochs", {1}, {static_cast<double>(model.epochs_trained)}});
  arrays.push_back({"meta.snr_train_db", {1}, {model.snr_train_db}});
  write_weights_file(path, arrays);
}

CodecModel load_model(const std::filesystem::path& path) {
  const auto arrays = read_weights_file(path);
  CodecModel m = CodecModel::initialize(0);
  const auto params = m.parameters();
  const auto& names = CodecModel::parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedArray& a = find_array(arrays, names[i]);
    if (a.dims != params[i]->dims())
      throw Error(ErrorKind::kFormat, names[i] + " has dims " + shape_string(a.dims) + ", expected " +
                                          shape_string(params[i]->dims()));
    *params[i] = Tensor(a.dims, a.values);
  }
  m.epochs_trained = static_cast<int>(find_array(arrays, "meta.epochs").values.at(0));
  m.snr_train_db = find_array(arrays, "meta.snr_train_db").values.at(0);
  return m;
}

}  // namespace coopsc
