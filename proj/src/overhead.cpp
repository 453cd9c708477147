#include "coopsc/overhead.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace coopsc {

std::uint64_t c_sc(std::uint64_t symbols_per_frame, std::uint64_t frames_available) {
  return symbols_per_frame * frames_available;
}

std::uint64_t c_tc(std::uint64_t symbols_per_frame, std::uint64_t frames_uploaded) {
  return symbols_per_frame * frames_uploaded;
}

double c_mpeg(double bits, double snr_db) {
  return bits / std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

OverheadLedger OverheadLedger::reference() {
  OverheadLedger l;
  l.symbols_per_frame = 4840;
  l.frames_available = kReferenceFeatureFrames;
  l.frames_uploaded = kReferenceUploads;
  l.video_bits = kReferenceVideoBits;
  return l;
}

double OverheadTable::tc_reduction() const {
  const auto sc = c_sc(ledger.symbols_per_frame, ledger.frames_available);
  if (sc == 0) return 0.0;
  return 1.0 - static_cast<double>(c_tc(ledger.symbols_per_frame, ledger.frames_uploaded)) /
                   static_cast<double>(sc);
}

OverheadTable report(const OverheadLedger& ledger, std::span<const double> snr_grid, std::string scenario) {
  OverheadTable t;
  t.scenario = std::move(scenario);
  t.ledger = ledger;
  for (double snr : snr_grid)
    t.rows.push_back({"MPEG-4", snr, std::round(c_mpeg(static_cast<double>(ledger.video_bits), snr))});
  t.rows.push_back({"HAR-SC", std::nullopt,
                    static_cast<double>(c_sc(ledger.symbols_per_frame, ledger.frames_available))});
  t.rows.push_back({"HAR-SC-TC", std::nullopt,
                    static_cast<double>(c_tc(ledger.symbols_per_frame, ledger.frames_uploaded))});
  return t;
}

nlohmann::json to_json(const OverheadTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json row{{"method", r.method}, {"overhead_symbols", static_cast<std::uint64_t>(r.overhead_symbols)}};
    if (r.snr_db) row["snr_db"] = *r.snr_db;
    rows.push_back(std::move(row));
  }
  return {{"scenario", table.scenario},
          {"L", table.ledger.symbols_per_frame},
          {"N_f", table.ledger.frames_available},
          {"N_t", table.ledger.frames_uploaded},
          {"N_b", table.ledger.video_bits},
          {"rows", std::move(rows)}};
}

namespace {

std::string with_commas(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i && (n - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace

std::string to_text(const OverheadTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "method" << "communication overhead\n";
  for (const auto& r : table.rows) {
    std::string label = r.method;
    if (r.snr_db) {
      std::ostringstream snr;
      snr << " (SNR=" << *r.snr_db << "dB)";
      label += snr.str();
    }
    os << std::left << std::setw(22) << label << with_commas(static_cast<std::uint64_t>(r.overhead_symbols))
       << '\n';
  }
  os << std::fixed << std::setprecision(4) << "HAR-SC-TC reduction vs HAR-SC: " << 100.0 * table.tc_reduction()
     << "%\n";
  return os.str();
}

}  // namespace coopsc
