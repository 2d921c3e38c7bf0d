// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include "quokka/bench/bench.hpp"
#include "support/fixture.hpp"

namespace qk::bench {
namespace {

ParseOutcome parse(std::vector<const char*> args) {
  args.insert(args.begin(), "bench");
  return parse_cli(static_cast<int>(args.size()), args.data());
}

BenchConfig config(const std::string& task, std::vector<std::uint64_t> sizes, std::string backend = "reference") {
  BenchConfig c;
  c.task = task;
  c.sizes = std::move(sizes);
  c.backends = {std::move(backend)};
  c.workers = 2;
  return c;
}

BenchRecord rec(const std::string& backend, std::uint64_t n, int trial, double s) {
  BenchRecord r;
  r.task = "matmul";
  r.backend = backend;
  r.dtype = "f32";
  r.n = n;
  r.trial = trial;
  r.seconds = s;
  return r;
}

TEST(BenchParse, FullCommandLine) {
  const auto p = parse({"--task", "accu", "--sizes", "1e3,1e4", "--dtype", "f32", "--backend", "parallel",
                        "--trials", "5", "--seed", "42", "--out", "r.csv"});
  ASSERT_TRUE(p.config) << p.message;
  const BenchConfig& c = *p.config;
  EXPECT_EQ(c.task, "accu");
  EXPECT_EQ(c.sizes, (std::vector<std::uint64_t>{1000, 10000}));
  EXPECT_EQ(c.dtype, "f32");
  EXPECT_EQ(c.backends, (std::vector<std::string>{"parallel"}));
  EXPECT_EQ(c.trials, 5);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.out, "r.csv");
}

TEST(BenchParse, UnknownTaskListsValidTasks) {
  const auto p = parse({"--task", "sort", "--sizes", "10"});
  EXPECT_FALSE(p.config);
  EXPECT_NE(p.exit_code, 0);
  for (const char* t : {"accu", "axpy", "matmul", "lu"}) EXPECT_NE(p.message.find(t), std::string::npos) << t;
  EXPECT_NE(p.message.find("Usage"), std::string::npos) << p.message;
}

TEST(BenchParse, SizesMustIncrease) {
  const auto p = parse({"--task", "accu", "--sizes", "100,50"});
  EXPECT_FALSE(p.config);
  EXPECT_NE(p.exit_code, 0);
  EXPECT_NE(p.message.find("sizes must be strictly increasing"), std::string::npos) << p.message;
}

TEST(BenchParse, RejectsBadValues) {
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "10", "--trials", "2"}).config);
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "10", "--dtype", "f16"}).config);
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "10", "--backend", "cuda"}).config);
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "ten"}).config);
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "1.5"}).config);
  EXPECT_FALSE(parse({"--task", "accu", "--sizes", "10", "--frobnicate"}).config);
  EXPECT_FALSE(parse({"--sizes", "10"}).config);
  const auto both = parse({"--task", "lu", "--sizes", "8", "--backend", "reference,parallel"});
  ASSERT_TRUE(both.config);
  EXPECT_EQ(both.config->backends.size(), 2u);
}

TEST(BenchParse, HelpExitsCleanly) {
  const auto p = parse({"--help"});
  EXPECT_FALSE(p.config);
  EXPECT_EQ(p.exit_code, 0);
  EXPECT_NE(p.message.find("--sizes"), std::string::npos);
}

class BenchRun : public testing::RuntimeTest<testing::kReference> {};

TEST_F(BenchRun, AccuIsDeterministicAcrossTrials) {
  const auto r = run_task(config("accu", {1024}));
  ASSERT_EQ(r.size(), 3u);
  for (const auto& x : r) {
    EXPECT_FALSE(x.skipped);
    EXPECT_GT(x.seconds, 0.0);
    EXPECT_EQ(x.checksum, r[0].checksum);
    EXPECT_EQ(x.launches, 1u);
    EXPECT_EQ(x.transfers_d2h + x.transfers_h2d, 0u) << "operands are staged before timing";
  }
}

TEST_F(BenchRun, LuLaunchesKernels) {
  const auto r = run_task(config("lu", {64}));
  ASSERT_EQ(r.size(), 3u);
  for (const auto& x : r) EXPECT_GE(x.launches, 1u);
}

TEST_F(BenchRun, TimedRegionsHaveNoTransfers) {
  for (const char* task : {"accu", "axpy", "matmul"}) {
    for (const auto& x : run_task(config(task, {16, 32}, "parallel")))
      EXPECT_EQ(x.transfers_d2h + x.transfers_h2d, 0u) << task;
  }
}

TEST_F(BenchRun, F64OnIncapableDeviceIsSkipped) {
  BenchConfig c = config("matmul", {8, 16}, "parallel");
  c.dtype = "f64";
  c.device = 1;
  const auto r = run_task(c);
  ASSERT_EQ(r.size(), 6u);
  for (const auto& x : r) {
    EXPECT_TRUE(x.skipped);
    EXPECT_EQ(x.reason, "precision-unsupported");
  }
  std::ostringstream os;
  write_csv(os, r);
  EXPECT_NE(os.str().find("skipped:precision-unsupported"), std::string::npos);
}

TEST_F(BenchRun, CsvNonTimingColumnsAreReproducible) {
  auto strip = [](const std::vector<BenchRecord>& rs) {
    std::ostringstream os;
    for (const auto& r : rs)
      os << r.task << r.backend << r.dtype << r.n << r.trial << r.launches << r.transfers_d2h << r.transfers_h2d
         << r.checksum << '\n';
    return os.str();
  };
  BenchConfig c = config("axpy", {100, 200});
  EXPECT_EQ(strip(run_task(c)), strip(run_task(c)));
}

TEST(BenchCsv, HeaderAndRows) {
  std::ostringstream os;
  BenchRecord r = rec("reference", 64, 0, 0.25);
  r.launches = 3;
  r.transfers_d2h = 1;
  write_csv(os, {r});
  EXPECT_EQ(os.str(),
            "task,backend,dtype,n,trial,seconds,launches,transfers_d2h,transfers_h2d\n"
            "matmul,reference,f32,64,0,0.250000000,3,1,0\n");
}

TEST(BenchReport, TiesNeverCount) {
  std::vector<BenchRecord> r;
  for (std::uint64_t n : {64u, 128u})
    for (int t = 0; t < 3; ++t) {
      r.push_back(rec("reference", n, t, 0.1 * static_cast<double>(n)));
      r.push_back(rec("parallel", n, t, 0.1 * static_cast<double>(n)));
    }
  const CrossoverReport rep = crossover_report(r);
  EXPECT_FALSE(rep.crossover);
  EXPECT_NE(rep.text.find("no crossover in range"), std::string::npos) << rep.text;
}

TEST(BenchReport, ReportsFirstWinningSize) {
  std::vector<BenchRecord> r;
  for (std::uint64_t n : {128u, 256u, 512u, 1024u})
    for (int t = 0; t < 3; ++t) {
      r.push_back(rec("reference", n, t, 1.0));
      r.push_back(rec("parallel", n, t, n >= 512 ? 0.5 : 2.0));
    }
  const CrossoverReport rep = crossover_report(r);
  ASSERT_TRUE(rep.crossover);
  EXPECT_EQ(*rep.crossover, 512u);
  EXPECT_NE(rep.text.find("crossover at n = 512"), std::string::npos) << rep.text;
}

TEST(BenchReport, UsesMedianNotMean) {
  std::vector<BenchRecord> r;
  const double par[] = {0.5, 0.6, 100.0};
  for (int t = 0; t < 3; ++t) {
    r.push_back(rec("reference", 64, t, 1.0));
    r.push_back(rec("parallel", 64, t, par[t]));
  }
  EXPECT_EQ(crossover_report(r).crossover, 64u);
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(BenchReport, GridMismatchIsAnError) {
  std::vector<BenchRecord> r = {rec("reference", 64, 0, 1), rec("parallel", 128, 0, 1)};
  EXPECT_THROW(crossover_report(r), std::invalid_argument);
  EXPECT_THROW(crossover_report({rec("reference", 64, 0, 1)}), std::invalid_argument);
}

TEST(BenchCli, ExitCodes) {
  std::ostringstream out, err;
  const char* bad[] = {"bench", "--task", "sort", "--sizes", "4"};
  EXPECT_EQ(run_cli(5, bad, out, err), 2);
  EXPECT_NE(err.str().find("sort"), std::string::npos);
}

}  // namespace
}  // namespace qk::bench
