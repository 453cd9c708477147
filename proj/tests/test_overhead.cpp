#include <gtest/gtest.h>

#include <cmath>

#include "coopsc/overhead.hpp"

using namespace coopsc;

namespace {

void expect_within(double got, double want, double rel) { EXPECT_LE(std::abs(got - want), rel * want) << got << " vs " << want; }

}  // namespace

TEST(Overhead, SemanticRows) {
  EXPECT_EQ(c_sc(4840, 1852), 8'963'680u);
  EXPECT_EQ(c_sc(4840, 0), 0u);
  EXPECT_EQ(c_sc(1, 7), 7u);
  EXPECT_EQ(c_tc(4840, 36), 174'240u);
  EXPECT_EQ(c_tc(4840, 0), 0u);
}

TEST(Overhead, ReductionIsNinetyEightPercent) {
  const double r = 1.0 - 174240.0 / 8963680.0;
  EXPECT_NEAR(r, 0.98056, 1e-5);
  const auto t = report(OverheadLedger::reference(), kReferenceSnrGrid);
  EXPECT_DOUBLE_EQ(t.tc_reduction(), r);
  // 98.056%: three significant figures by truncation give 98.0, rounding gives 98.1
  EXPECT_EQ(std::floor(t.tc_reduction() * 1000) / 10, 98.0);
  EXPECT_EQ(std::round(t.tc_reduction() * 1000) / 10, 98.1);
}

TEST(Overhead, MpegRows) {
  EXPECT_EQ(kReferenceVideoBits, 922'746'880u);
  expect_within(c_mpeg(922746880.0, 25), 111'048'888, 1e-4);
  expect_within(c_mpeg(922746880.0, 19), 145'780'221, 1e-4);
  expect_within(c_mpeg(922746880.0, 13), 210'237'977, 1e-4);
  expect_within(c_mpeg(922746880.0, 7), 356'573'829, 1e-4);
  EXPECT_EQ(c_mpeg(0, 13), 0.0);
}

TEST(Overhead, MpegDecreasesWithSnr) {
  double prev = c_mpeg(1e6, -10);
  for (double g = -9.5; g <= 40; g += 0.5) {
    const double v = c_mpeg(1e6, g);
    ASSERT_LT(v, prev);
    prev = v;
  }
}

TEST(Overhead, TcNeverExceedsSc) {
  for (std::uint64_t nf = 0; nf < 50; ++nf)
    for (std::uint64_t nt = 0; nt <= nf; ++nt) ASSERT_LE(c_tc(4840, nt), c_sc(4840, nf));
}

TEST(Overhead, ReferenceTable) {
  const auto t = report(OverheadLedger::reference(), kReferenceSnrGrid, "reference");
  ASSERT_EQ(t.rows.size(), 6u);
  const double want[] = {356'573'829, 210'237'977, 145'780'221, 111'048'888};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t.rows[i].snr_db, kReferenceSnrGrid[i]);
    expect_within(t.rows[i].overhead_symbols, want[i], 1e-4);
  }
  EXPECT_EQ(t.rows[4].method, "HAR-SC");
  EXPECT_EQ(t.rows[4].overhead_symbols, 8'963'680.0);
  EXPECT_EQ(t.rows[5].method, "HAR-SC-TC");
  EXPECT_EQ(t.rows[5].overhead_symbols, 174'240.0);
  const auto text = to_text(t);
  for (const char* s : {"8,963,680", "174,240", "356,573,829", "111,048,888"}) EXPECT_NE(text.find(s), std::string::npos) << s;
}

TEST(Overhead, EmptyLedgerGivesZeros) {
  const auto t = report(OverheadLedger{}, kReferenceSnrGrid);
  for (const auto& r : t.rows) EXPECT_EQ(r.overhead_symbols, 0.0);
  EXPECT_EQ(t.tc_reduction(), 0.0);
}

TEST(Overhead, JsonShape) {
  const auto j = to_json(report(OverheadLedger::reference(), kReferenceSnrGrid, "reference"));
  EXPECT_EQ(j["scenario"], "reference");
  EXPECT_EQ(j["L"], 4840);
  EXPECT_EQ(j["N_f"], 1852);
  EXPECT_EQ(j["N_t"], 36);
  EXPECT_EQ(j["N_b"], 922746880);
  ASSERT_EQ(j["rows"].size(), 6u);
  EXPECT_EQ(j["rows"][0]["snr_db"], 7.0);
  EXPECT_FALSE(j["rows"][5].contains("snr_db"));
  EXPECT_EQ(j["rows"][5]["overhead_symbols"], 174240.0);
}
