#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

namespace {

struct Run {
  int status = -1;
  std::string output;
};

Run run(const std::string& args) {
  Run r;
  const std::string cmd = std::string(COOPSC_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

}  // namespace

TEST(Cli, OverheadPaperPrintsSixValues) {
  const auto r = run("overhead --paper");
  EXPECT_EQ(r.status, 0);
  for (const char* v : {"356,573,829", "210,237,977", "145,780,221", "111,048,888", "8,963,680", "174,240"})
    EXPECT_NE(r.output.find(v), std::string::npos) << v << "\n" << r.output;
}

TEST(Cli, GradcheckSeed7) {
  const auto r = run("gradcheck --seed 7");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("max relative error"), std::string::npos);
}

TEST(Cli, MissingConfigFails) {
  const auto r = run("simulate --config missing.cfg");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("not found"), std::string::npos) << r.output;
  EXPECT_EQ(std::count(r.output.begin(), r.output.end(), '\n'), 1);
}

TEST(Cli, UnknownFlagPrintsUsage) {
  const auto r = run("overhead --bogus");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("Usage"), std::string::npos);
  EXPECT_EQ(run("--nope").status, 2);
  EXPECT_EQ(run("").status, 2);
}

TEST(Cli, OverheadCustomJson) {
  const auto r = run("overhead --symbols 1 --frames 7 --uploads 2 --bits 0 --json");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("\"N_f\": 7"), std::string::npos) << r.output;
}
