#include "coopsc/channel.hpp"

#include <cmath>
#include <string>

#include "coopsc/error.hpp"
#include "coopsc/rng.hpp"

namespace coopsc {

double average_power(std::span<const Symbol> symbols) {
  if (symbols.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : symbols) sum += std::norm(s);
  return sum / static_cast<double>(symbols.size());
}

double noise_variance(double signal_power, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

SymbolFrame transmit(const SymbolFrame& frame, const ChannelConfig& config) {
  if (frame.symbols.empty()) throw Error(ErrorKind::kPrecondition, "cannot transmit an empty frame");
  SymbolFrame out = frame;
  if (std::isinf(config.snr_db) && config.snr_db > 0) return out;

  const double power = average_power(frame.symbols);
  if (power == 0.0)
    throw Error(ErrorKind::kPrecondition, "all-zero frame has no defined noise level at finite SNR");
  const double sigma = std::sqrt(noise_variance(power, config.snr_db) / 2.0);
  CounterRng rng(config.rng_seed);
  for (auto& s : out.symbols) {
    const double re = rng.gaussian();
    const double im = rng.gaussian();
    s += Symbol(sigma * re, sigma * im);
  }
  return out;
}

double measured_snr(const SymbolFrame& clean, const SymbolFrame& noisy) {
  if (clean.symbols.size() != noisy.symbols.size())
    throw Error(ErrorKind::kShape, "measured_snr: frame lengths differ (" + std::to_string(clean.symbols.size()) +
                                       " vs " + std::to_string(noisy.symbols.size()) + ")");
  const double signal = average_power(clean.symbols);
  if (signal == 0.0) throw Error(ErrorKind::kPrecondition, "measured_snr: clean frame has zero power");
  double noise = 0.0;
  for (std::size_t i = 0; i < clean.symbols.size(); ++i) noise += std::norm(noisy.symbols[i] - clean.symbols[i]);
  noise /= static_cast<double>(clean.symbols.size());
  if (noise == 0.0) return kNoiselessSnr;
  return 10.0 * std::log10(signal / noise);
}

}  // namespace coopsc
