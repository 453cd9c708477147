#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace coopsc {

using Symbol = std::complex<double>;

/// On-air unit: a block of complex channel symbols plus the transmit-side
/// metadata the receiver needs (power and the normalisation gain, if any).
struct SymbolFrame {
  std::vector<Symbol> symbols;
  double avg_power = 0.0;  // mean of re^2 + im^2 as transmitted
  double scale = 1.0;      // gain applied before transmission; receivers divide it out

  friend bool operator==(const SymbolFrame&, const SymbolFrame&) = default;
};

double average_power(std::span<const Symbol> symbols);

/// SNR sentinel for a noiseless link.
inline constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

struct ChannelConfig {
  double snr_db = kNoiselessSnr;
  std::uint64_t rng_seed = 0;
};

/// sigma^2 = P / 10^(snr_db / 10).
double noise_variance(double signal_power, double snr_db);

/// Adds complex AWGN with total per-symbol variance sigma^2 (sigma^2/2 per
/// quadrature), where P is measured on `frame`. Returns a new frame.
SymbolFrame transmit(const SymbolFrame& frame, const ChannelConfig& config);

/// 10 log10(P_signal / P_noise) with the noise taken as noisy - clean.
/// Returns kNoiselessSnr when the two frames are identical.
double measured_snr(const SymbolFrame& clean, const SymbolFrame& noisy);

}  // namespace coopsc
