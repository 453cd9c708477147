#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopsc/channel.hpp"
#include "coopsc/layers.hpp"
#include "coopsc/tensor.hpp"

namespace coopsc {

enum class Activity : std::uint8_t { kSleeping = 0, kResting, kDressUp, kEating, kCalling };
inline constexpr std::size_t kNumActivities = 5;

std::string_view to_string(Activity a);
std::optional<Activity> parse_activity(std::string_view name);

inline constexpr std::size_t kSegmentFrames = 16;
inline constexpr std::size_t kFrameSide = 112;
inline constexpr std::size_t kColorChannels = 3;
inline constexpr std::size_t kFrameBytes = kFrameSide * kFrameSide * kColorChannels;

/// Symbols per semantic feature frame (L).
inline constexpr std::size_t kSymbolsPerFeature = 4840;
inline const Shape kSegmentShape{kColorChannels, kSegmentFrames, kFrameSide, kFrameSide};
inline const Shape kFeatureShape{4, 5, 22, 22};
inline const Shape kDeepFeatureShape{8, 1, 5, 5};

/// One 8-bit RGB frame, row-major with interleaved channels (HxWx3).
using Frame = std::vector<std::uint8_t>;

/// 16 consecutive frames as a channels-first 3x16x112x112 tensor in [0,1].
struct VideoSegment {
  std::size_t sample_index = 0;
  Tensor frames;

  /// Throws kShape unless `frames` is exactly 3x16x112x112.
  static VideoSegment from_tensor(std::size_t index, Tensor frames);
  /// `rgb` holds 16 consecutive HxWx3 frames.
  static VideoSegment from_rgb8(std::size_t index, std::span<const std::uint8_t> rgb);
};

struct SemanticFeature {
  Tensor values;  // 4x5x22x22
};

/// Number of full windows of `kSegmentFrames` frames at the given stride.
std::size_t segment_count(std::size_t total_frames, std::size_t stride = kSegmentFrames);

/// Slides a 16-frame window with `stride`; incomplete trailing windows are dropped.
std::vector<VideoSegment> sample_segments(std::span<const Frame> frames, std::size_t stride = kSegmentFrames);

/// Encoder (camera side) and decoder + classifier (server side) weights.
struct CodecModel {
  Tensor enc_w, enc_b;
  Tensor dec1_w, dec1_b;
  Tensor dec2_w, dec2_b;
  Tensor dec3_w, dec3_b;
  Tensor fc_w, fc_b;
  int epochs_trained = 0;
  double snr_train_db = kNoiselessSnr;

  /// He-uniform weights, zero biases; values rounded to float32 precision so
  /// a fresh model survives a save/load cycle unchanged.
  static CodecModel initialize(std::uint64_t seed);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  static const std::vector<std::string>& parameter_names();

  friend bool operator==(const CodecModel&, const CodecModel&) = default;
};

SemanticFeature extract_features(const VideoSegment& segment, const CodecModel& model);

/// Row-major reshape (element 2t -> real, 2t+1 -> imag of symbol t) followed
/// by scaling to unit average power. All-zero features are sent unscaled.
SymbolFrame features_to_symbols(const SemanticFeature& feature);

/// Inverse of features_to_symbols: divides out the scale and reshapes.
SemanticFeature symbols_to_features(const SymbolFrame& frame);

SymbolFrame encode(const VideoSegment& segment, const CodecModel& model);

struct DecodeResult {
  Tensor logits;        // 5
  Tensor deep_feature;  // 8x1x5x5
};

DecodeResult decode_features(const SemanticFeature& feature, const CodecModel& model);
DecodeResult decode(const SymbolFrame& received, const CodecModel& model);

/// Encoder -> decoder with the channel removed.
DecodeResult forward(const VideoSegment& segment, const CodecModel& model);

/// Argmax over the five logits; ties go to the lowest code.
Activity classify(const Tensor& logits);

// ---- training -------------------------------------------------------------

struct LabeledClip {
  std::vector<std::uint8_t> rgb;  // 16 frames, HxWx3 each
  Activity label = Activity::kSleeping;
};

struct TrainConfig {
  int epochs = 15;
  std::size_t batch_size = 32;
  LrSchedule lr;
  double snr_train_db = 25.0;
  std::uint64_t seed = 7;
  double momentum = 0.9;  // heavy-ball; 0 gives plain SGD
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double accuracy = 0.0;  // on the noisy forward passes seen during the epoch
  std::size_t steps = 0;
};

struct TrainResult {
  CodecModel model;
  std::vector<EpochStats> history;
  std::size_t optimizer_steps = 0;
};

struct SampleGradients {
  double loss = 0.0;
  Tensor logits;
  std::vector<Tensor> grads;  // aligned with CodecModel::parameters()
};

/// Loss and parameter gradients for one segment sent through an AWGN link.
/// The noise is treated as an additive constant in the backward pass and the
/// power-normalisation gain as a constant, so d(received)/d(feature) = I.
SampleGradients sample_gradients(const CodecModel& model, const VideoSegment& segment, Activity label,
                                 const ChannelConfig& channel);

/// Averages sample_gradients over a batch. Sample b uses noise seed
/// derive_seed(noise_key, {b}).
SampleGradients batch_gradients(const CodecModel& model, std::span<const VideoSegment> segments,
                                std::span<const Activity> labels, double snr_db, std::uint64_t noise_key);

/// End-to-end training through the noisy channel with minibatch SGD.
/// `initial` overrides the seeded He initialisation.
TrainResult train(std::span<const LabeledClip> dataset, const TrainConfig& config,
                  std::optional<CodecModel> initial = std::nullopt);

/// Fraction of clips whose decoded class matches the label, one fresh noise
/// draw per clip.
double evaluate(const CodecModel& model, std::span<const LabeledClip> dataset, double snr_db,
                std::uint64_t seed);

/// Accuracy for every (snr, seed) pair; the encoder runs once per clip.
/// Result is indexed [snr][seed].
std::vector<std::vector<double>> evaluate_grid(const CodecModel& model, std::span<const LabeledClip> dataset,
                                               std::span<const double> snrs_db,
                                               std::span<const std::uint64_t> seeds);

// ---- persistence ----------------------------------------------------------

void save_model(const CodecModel& model, const std::filesystem::path& path);
CodecModel load_model(const std::filesystem::path& path);

}  // namespace coopsc
