// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qk::bench {

inline constexpr const char* kTasks[] = {"accu", "axpy", "matmul", "lu"};

struct BenchConfig {
  std::string task = "accu";
  std::vector<std::uint64_t> sizes;
  std::string dtype = "f32";
  /// One or more backends, run one after the other in the same process.
  std::vector<std::string> backends = {"parallel"};
  int device = 0;
  std::size_t workers = 0;  ///< 0 = hardware concurrency
  int trials = 3;
  std::uint64_t seed = 42;
  std::string out;     ///< CSV path; empty = stdout
  std::string report;  ///< crossover text path; empty = no report file
};

struct BenchRecord {
  std::string task;
  std::string backend;
  std::string dtype;
  std::uint64_t n = 0;
  int trial = 0;
  double seconds = 0;
  std::uint64_t launches = 0;
  std::uint64_t transfers_d2h = 0;
  std::uint64_t transfers_h2d = 0;
  bool skipped = false;
  std::string reason;
  /// Task-specific digest of the result (accu value, sum of outputs), read
  /// after the timed region. Not part of the CSV.
  double checksum = 0;
};

struct ParseOutcome {
  std::optional<BenchConfig> config;
  int exit_code = 0;
  std::string message;  ///< usage or error text when config is empty
};

ParseOutcome parse_cli(int argc, const char* const* argv);

/// Parses "64,1e3,2048". Throws std::invalid_argument with a readable message.
std::vector<std::uint64_t> parse_sizes(const std::string& s);

/// Runs every (backend, size, trial) of `cfg`. The runtime is re-initialised
/// for each backend.
std::vector<BenchRecord> run_task(const BenchConfig& cfg);

inline constexpr const char* kCsvHeader = "task,backend,dtype,n,trial,seconds,launches,transfers_d2h,transfers_h2d";
void write_csv(std::ostream& os, const std::vector<BenchRecord>& records);

struct CrossoverReport {
  std::optional<std::uint64_t> crossover;  ///< smallest n where parallel's median is lower
  std::string text;
};

/// Compares median seconds of "parallel" against "reference" per size.
/// Throws std::invalid_argument when the two backends cover different grids.
CrossoverReport crossover_report(const std::vector<BenchRecord>& records);

double median(std::vector<double> v);

/// Full CLI: parse, run, write outputs. Returns the process exit status:
/// 0 ok, 1 runtime failure, 2 usage error, 3 report requested but no crossover.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qk::bench
