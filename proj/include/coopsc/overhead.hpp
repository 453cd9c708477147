#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace coopsc {

/// Symbols needed when every feature frame is sent: L * N_f.
std::uint64_t c_sc(std::uint64_t symbols_per_frame, std::uint64_t frames_available);

/// Symbols needed when only commanded uploads are sent: L * N_t.
std::uint64_t c_tc(std::uint64_t symbols_per_frame, std::uint64_t frames_uploaded);

/// Channel uses for an N_b-bit MPEG-4 stream over a unit-bandwidth AWGN
/// link at `snr_db`: N_b / log2(1 + 10^(snr_db/10)).
double c_mpeg(double bits, double snr_db);

/// 110 MiB expressed in bits.
inline constexpr std::uint64_t kReferenceVideoBits = 110ULL * 1024 * 1024 * 8;
inline constexpr std::uint64_t kReferenceFeatureFrames = 1852;
inline constexpr std::uint64_t kReferenceUploads = 36;
inline constexpr double kReferenceSnrGrid[] = {7.0, 13.0, 19.0, 25.0};

struct OverheadLedger {
  std::uint64_t symbols_per_frame = 0;  // L
  std::uint64_t frames_available = 0;   // N_f
  std::uint64_t frames_uploaded = 0;    // N_t
  std::uint64_t video_bits = 0;         // N_b
  std::uint64_t raw_symbols = 0;        // accelerometer symbols on air

  void add_available(std::uint64_t n) { frames_available += n; }
  void add_uploads(std::uint64_t n) { frames_uploaded += n; }
  void add_raw_symbols(std::uint64_t n) { raw_symbols += n; }

  /// The accounting behind the published comparison (4840 x 1852 frames,
  /// 36 uploads, a 110 MiB reference video).
  static OverheadLedger reference();
};

struct OverheadRow {
  std::string method;
  std::optional<double> snr_db;
  double overhead_symbols = 0.0;
};

struct OverheadTable {
  std::string scenario;
  OverheadLedger ledger;
  std::vector<OverheadRow> rows;

  /// 1 - C_TC / C_SC, or 0 when C_SC is 0.
  double tc_reduction() const;
};

/// MPEG-4 rows for each SNR (rounded to the nearest symbol), then HAR-SC and HAR-SC-TC.
OverheadTable report(const OverheadLedger& ledger, std::span<const double> snr_grid,
                     std::string scenario = "custom");

nlohmann::json to_json(const OverheadTable& table);
std::string to_text(const OverheadTable& table);

}  // namespace coopsc
