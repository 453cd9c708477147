#include "coopsc/posture.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "coopsc/error.hpp"

namespace coopsc {

namespace {
constexpr std::array<std::string_view, kNumPostures> kPostureNames = {"lying", "sitting", "standing",
                                                                      "walking"};
}

std::string_view to_string(Posture p) { return kPostureNames.at(static_cast<std::size_t>(p)); }

std::optional<Posture> parse_posture(std::string_view name) {
  for (std::size_t i = 0; i < kPostureNames.size(); ++i)
    if (kPostureNames[i] == name) return static_cast<Posture>(i);
  return std::nullopt;
}

// ---- raw transmission -----------------------------------------------------

int RawQuantizer::quantize(double g, bool* clamped) {
  const double code = std::nearbyint(g / kStep);
  bool hit = false;
  int out;
  if (!(code >= kMinCode)) {  // also catches NaN
    out = kMinCode;
    hit = true;
  } else if (code > kMaxCode) {
    out = kMaxCode;
    hit = true;
  } else {
    out = static_cast<int>(code);
  }
  if (clamped) *clamped = hit;
  return out;
}

int RawQuantizer::from_amplitude(double amplitude) {
  return quantize(amplitude * (1 << (kBits - 1)) * kStep);
}

RawEncodeResult encode_raw(std::span<const AccelSample> samples) {
  RawEncodeResult out;
  const std::size_t seconds = samples.size() / kWindowSamples;
  out.frames.reserve(seconds);
  std::array<double, kRawValuesPerFrame> values{};
  for (std::size_t s = 0; s < seconds; ++s) {
    for (std::size_t j = 0; j < kWindowSamples; ++j)
      for (std::size_t axis = 0; axis < 3; ++axis) {
        bool clamped = false;
        const int code = RawQuantizer::quantize(samples[s * kWindowSamples + j].a[axis], &clamped);
        if (clamped) ++out.clamped;
        values[3 * j + axis] = RawQuantizer::to_amplitude(code);
      }
    SymbolFrame frame;
    frame.symbols.resize(kRawSymbolsPerFrame);
    for (std::size_t t = 0; t < kRawSymbolsPerFrame; ++t) frame.symbols[t] = Symbol(values[2 * t], values[2 * t + 1]);
    frame.avg_power = average_power(frame.symbols);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

std::vector<AccelSample> decode_raw(std::span<const SymbolFrame> frames, double t0) {
  std::vector<AccelSample> out;
  out.reserve(frames.size() * kWindowSamples);
  std::array<double, kRawValuesPerFrame> values{};
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& syms = frames[f].symbols;
    if (syms.size() != kRawSymbolsPerFrame)
      throw Error(ErrorKind::kShape, "raw accelerometer frame " + std::to_string(f) + " has " +
                                         std::to_string(syms.size()) + " symbols, expected 75");
    for (std::size_t t = 0; t < kRawSymbolsPerFrame; ++t) {
      values[2 * t] = syms[t].real();
      values[2 * t + 1] = syms[t].imag();
    }
    for (std::size_t j = 0; j < kWindowSamples; ++j) {
      AccelSample s;
      s.t = t0 + static_cast<double>(out.size()) / kAccelRateHz;
      for (std::size_t axis = 0; axis < 3; ++axis)
        s.a[axis] = RawQuantizer::dequantize(RawQuantizer::from_amplitude(values[3 * j + axis]));
      out.push_back(s);
    }
  }
  return out;
}

// ---- gravity estimation ---------------------------------------------------

Biquad::Biquad(double cutoff_hz, double sample_rate_hz) : fs_(sample_rate_hz) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0))
    throw Error(ErrorKind::kPrecondition, "cutoff must lie in (0, fs/2)");
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  b_[0] = k * k * norm;
  b_[1] = 2.0 * b_[0];
  b_[2] = b_[0];
  a_[0] = 1.0;
  a_[1] = 2.0 * (k * k - 1.0) * norm;
  a_[2] = (1.0 - q * k + k * k) * norm;
}

void Biquad::warm_start(double x) {
  // Steady state of the transposed direct form with y == x.
  z2_ = (b_[2] - a_[2]) * x;
  z1_ = (1.0 - b_[0]) * x;
}

double Biquad::process(double x) {
  const double y = b_[0] * x + z1_;
  z1_ = b_[1] * x - a_[1] * y + z2_;
  z2_ = b_[2] * x - a_[2] * y;
  return y;
}

double Biquad::magnitude(double hz) const {
  const double w = 2.0 * std::numbers::pi * hz / fs_;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  return std::abs((b_[0] + b_[1] * z1 + b_[2] * z2) / (a_[0] + a_[1] * z1 + a_[2] * z2));
}

GravityFilter::GravityFilter(double cutoff_hz, double sample_rate_hz)
    : axes_{Biquad(cutoff_hz, sample_rate_hz), Biquad(cutoff_hz, sample_rate_hz),
            Biquad(cutoff_hz, sample_rate_hz)} {}

AccelSample GravityFilter::process(const AccelSample& s) {
  if (!primed_) {
    for (std::size_t i = 0; i < 3; ++i) axes_[i].warm_start(s.a[i]);
    primed_ = true;
  }
  AccelSample out{s.t, {}};
  for (std::size_t i = 0; i < 3; ++i) out.a[i] = axes_[i].process(s.a[i]);
  return out;
}

std::vector<AccelSample> lowpass_gravity(std::span<const AccelSample> samples, double cutoff_hz,
                                         double sample_rate_hz) {
  GravityFilter filter(cutoff_hz, sample_rate_hz);
  std::vector<AccelSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(filter.process(s));
  return out;
}

std::vector<AccelWindow> make_windows(std::span<const AccelSample> filtered) {
  std::vector<AccelWindow> out(filtered.size() / kWindowSamples);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].index = i;
    for (std::size_t j = 0; j < kWindowSamples; ++j) out[i].g[j] = filtered[i * kWindowSamples + j].a;
  }
  return out;
}

GravityFeature gravity_feature(const AccelWindow& window) {
  const double ref_norm = std::hypot(kDefaultGravity[0], kDefaultGravity[1], kDefaultGravity[2]);
  GravityFeature f;
  f.index = window.index;
  double sum = 0.0;
  for (const Vec3& g : window.g) {
    const double norm = std::hypot(g[0], g[1], g[2]);
    if (!(norm > 1e-6)) {
      ++f.degenerate_columns;
      continue;
    }
    const double dot = g[0] * kDefaultGravity[0] + g[1] * kDefaultGravity[1] + g[2] * kDefaultGravity[2];
    sum += std::clamp(dot / (norm * ref_norm), -1.0, 1.0);
  }
  const std::size_t used = window.g.size() - f.degenerate_columns;
  if (used == 0) throw Error(ErrorKind::kPrecondition, "every column of the window is degenerate");
  f.u = sum / static_cast<double>(used);
  return f;
}

}  // namespace coopsc
