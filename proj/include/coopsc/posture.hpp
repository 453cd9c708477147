#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "coopsc/channel.hpp"

namespace coopsc {

enum class Posture : std::uint8_t { kLying = 0, kSitting, kStanding, kWalking };
inline constexpr std::size_t kNumPostures = 4;

std::string_view to_string(Posture p);
std::optional<Posture> parse_posture(std::string_view name);

inline constexpr double kAccelRateHz = 50.0;
inline constexpr std::size_t kWindowSamples = 50;

using Vec3 = std::array<double, 3>;

struct AccelSample {
  double t = 0.0;  // seconds
  Vec3 a{};        // g units
};

// ---- raw transmission -----------------------------------------------------

/// 12-bit signed fixed point over [-4 g, +4 g).
struct RawQuantizer {
  static constexpr double kRangeG = 4.0;
  static constexpr int kBits = 12;
  static constexpr int kMinCode = -(1 << (kBits - 1));
  static constexpr int kMaxCode = (1 << (kBits - 1)) - 1;
  static constexpr double kStep = 2.0 * kRangeG / (1 << kBits);

  /// Nearest code, clamped to the representable range.
  static int quantize(double g, bool* clamped = nullptr);
  static double dequantize(int code) { return code * kStep; }
  /// Code to transmit amplitude in [-1, 1).
  static double to_amplitude(int code) { return code / static_cast<double>(1 << (kBits - 1)); }
  static int from_amplitude(double amplitude);
};

inline constexpr std::size_t kRawValuesPerFrame = 3 * kWindowSamples;     // one second, three axes
inline constexpr std::size_t kRawSymbolsPerFrame = kRawValuesPerFrame / 2;  // 75

struct RawEncodeResult {
  std::vector<SymbolFrame> frames;
  std::size_t clamped = 0;
};

/// Quantises each axis value, packs consecutive values (ax0, ay0, az0, ax1, ...)
/// two per complex symbol and emits one 75-symbol frame per full second.
/// A trailing partial second is not sent.
RawEncodeResult encode_raw(std::span<const AccelSample> samples);

/// Nearest-code recovery of each amplitude; timestamps restart at `t0` on a 50 Hz grid.
std::vector<AccelSample> decode_raw(std::span<const SymbolFrame> frames, double t0 = 0.0);

// ---- gravity estimation ---------------------------------------------------

/// Second-order Butterworth low-pass designed with the bilinear transform
/// (cutoff prewarped), in direct form II transposed.
class Biquad {
 public:
  Biquad(double cutoff_hz, double sample_rate_hz);

  /// Sets the state to the steady state for a constant input `x`.
  void warm_start(double x);
  double process(double x);

  std::array<double, 3> b() const { return b_; }
  std::array<double, 3> a() const { return a_; }
  /// |H(e^{jw})| at frequency `hz`.
  double magnitude(double hz) const;

 private:
  std::array<double, 3> b_{};
  std::array<double, 3> a_{};  // a_[0] == 1
  double fs_;
  double z1_ = 0.0, z2_ = 0.0;
};

/// Causal three-axis gravity filter; the first sample primes the state so a
/// constant signal passes through without a start-up transient.
class GravityFilter {
 public:
  static constexpr double kDefaultCutoffHz = 0.3;

  explicit GravityFilter(double cutoff_hz = kDefaultCutoffHz, double sample_rate_hz = kAccelRateHz);

  AccelSample process(const AccelSample& s);

 private:
  std::array<Biquad, 3> axes_;
  bool primed_ = false;
};

std::vector<AccelSample> lowpass_gravity(std::span<const AccelSample> samples,
                                         double cutoff_hz = GravityFilter::kDefaultCutoffHz,
                                         double sample_rate_hz = kAccelRateHz);

struct AccelWindow {
  std::size_t index = 0;
  std::array<Vec3, kWindowSamples> g{};  // columns g_ij
};

/// Consecutive disjoint 50-sample windows; a trailing partial window is dropped.
std::vector<AccelWindow> make_windows(std::span<const AccelSample> filtered);

struct GravityFeature {
  std::size_t index = 0;
  double u = 0.0;
  std::size_t degenerate_columns = 0;
};

inline constexpr Vec3 kDefaultGravity{0.0, 0.0, 1.0};

/// Mean cosine between each column and the default gravity direction.
/// Columns with norm <= 1e-6 are skipped and counted; throws kPrecondition
/// when every column is degenerate.
GravityFeature gravity_feature(const AccelWindow& window);

}  // namespace coopsc
