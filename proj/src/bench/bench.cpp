// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include "quokka/bench/bench.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "quokka/quokka.hpp"

namespace qk::bench {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", s);
  return buf;
}

}  // namespace

std::vector<std::uint64_t> parse_sizes(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split(s, ',')) {
    double v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw std::invalid_argument("invalid size \"" + tok + "\"");
    if (!(v >= 1) || v != std::floor(v) || v > 1e12)
      throw std::invalid_argument("size \"" + tok + "\" must be a positive integer");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("no sizes given");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw std::invalid_argument("sizes must be strictly increasing");
  return out;
}

ParseOutcome parse_cli(int argc, const char* const* argv) {
  CLI::App app{"Timing harness for the accu, axpy, matmul and lu tasks", "bench"};
  BenchConfig cfg;
  std::string sizes, backends = "parallel";
  app.add_option("--task", cfg.task, "accu | axpy | matmul | lu")
      ->required()
      ->check(CLI::IsMember({"accu", "axpy", "matmul", "lu"}));
  app.add_option("--sizes", sizes, "comma-separated, strictly increasing (1e3 shorthand allowed)")->required();
  app.add_option("--dtype", cfg.dtype, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--backend", backends, "reference | parallel, or both comma-separated");
  app.add_option("--device", cfg.device, "device id");
  app.add_option("--workers", cfg.workers, "parallel backend worker count (0 = all hardware threads)");
  app.add_option("--trials", cfg.trials, "trials per size (at least 3)");
  app.add_option("--seed", cfg.seed, "operand seed");
  app.add_option("--out", cfg.out, "CSV output path (default: stdout)");
  app.add_option("--report", cfg.report, "crossover report path (needs both backends)");

  try {
    app.parse(argc, argv);
    cfg.sizes = parse_sizes(sizes);
    cfg.backends = split(backends, ',');
    for (const auto& b : cfg.backends)
      if (b != "reference" && b != "parallel")
        throw std::invalid_argument("unknown backend \"" + b + "\" (valid: reference, parallel)");
    if (cfg.trials < 3) throw std::invalid_argument("trials must be at least 3");
  } catch (const CLI::CallForHelp&) {
    return {std::nullopt, 0, app.help()};
  } catch (const CLI::ParseError& e) {
    return {std::nullopt, 2, std::string("error: ") + e.what() + "\n" + app.help()};
  } catch (const std::invalid_argument& e) {
    return {std::nullopt, 2, std::string("error: ") + e.what() + "\n" + app.help()};
  }
  return {cfg, 0, {}};
}

namespace {

using Clock = std::chrono::steady_clock;

struct Timed {
  double seconds = 0;
  Counters delta;
  double checksum = 0;
};

template <class F> Timed timed(F&& body) {
  auto& rt = Runtime::get();
  rt.synchronise();
  const Counters c0 = rt.counters_snapshot();
  const auto t0 = Clock::now();
  body();
  rt.synchronise();
  const auto t1 = Clock::now();
  Timed t;
  t.delta = rt.counters_snapshot() - c0;
  t.seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
  return t;
}

template <class T> Timed trial(const std::string& task, uword n) {
  if (task == "accu") {
    Mat<T> f(n, 1, fill::randu);
    Matrix s;
    Timed t = timed([&] { accu(f, s); });
    t.checksum = s(0);
    return t;
  }
  if (task == "axpy") {
    Mat<T> A(n, 1, fill::randu), B(n, 1, fill::randu);
    Timed t = timed([&] { B += 3 * A.expr(); });
    t.checksum = accu(B);
    return t;
  }
  if (task == "matmul") {
    Mat<T> A(n, n, fill::randu), B(n, n, fill::randu), C;
    Timed t = timed([&] { C = A * B; });
    t.checksum = accu(C);
    return t;
  }
  Mat<T> A(n, n, fill::randu), L, U;
  Timed t = timed([&] { lu(L, U, A); });
  t.checksum = accu(U);
  return t;
}

}  // namespace

std::vector<BenchRecord> run_task(const BenchConfig& cfg) {
  std::vector<BenchRecord> out;
  auto& rt = Runtime::get();
  for (const auto& backend : cfg.backends) {
    if (rt.initialized()) rt.shutdown();
    RuntimeOptions opts;
    opts.backend = backend;
    opts.device_id = cfg.device;
    opts.worker_count = cfg.workers;
    rt.init(opts);
    for (std::uint64_t n : cfg.sizes) {
      for (int k = 0; k < cfg.trials; ++k) {
        BenchRecord r;
        r.task = cfg.task;
        r.backend = backend;
        r.dtype = cfg.dtype;
        r.n = n;
        r.trial = k;
        try {
          rt.set_seed(cfg.seed);
          const Timed t = cfg.dtype == "f64" ? trial<double>(cfg.task, n) : trial<float>(cfg.task, n);
          r.seconds = t.seconds;
          r.launches = t.delta.launches;
          r.transfers_d2h = t.delta.transfers_d2h;
          r.transfers_h2d = t.delta.transfers_h2d;
          r.checksum = t.checksum;
        } catch (const PrecisionError&) {
          r.skipped = true;
          r.reason = "precision-unsupported";
        }
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << r.task << ',' << r.backend << ',' << r.dtype << ',' << r.n << ',' << r.trial << ',';
    if (r.skipped)
      os << "skipped:" << r.reason << ",0,0,0\n";
    else
      os << fmt_seconds(r.seconds) << ',' << r.launches << ',' << r.transfers_d2h << ',' << r.transfers_h2d << '\n';
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CrossoverReport crossover_report(const std::vector<BenchRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::uint64_t>;
  std::map<Key, std::vector<double>> ref, par;
  for (const auto& r : records) {
    auto* dst = r.backend == "reference" ? &ref : r.backend == "parallel" ? &par : nullptr;
    if (!dst) throw std::invalid_argument("crossover report: unexpected backend \"" + r.backend + "\"");
    auto& v = (*dst)[{r.task, r.dtype, r.n}];
    if (!r.skipped) v.push_back(r.seconds);
  }
  std::set<Key> a, b;
  for (const auto& [k, v] : ref) a.insert(k);
  for (const auto& [k, v] : par) b.insert(k);
  if (a.empty() || a != b)
    throw std::invalid_argument("crossover report: reference and parallel records cover different grids");

  CrossoverReport rep;
  std::ostringstream os;
  os << "n,reference_median,parallel_median,faster\n";
  for (const auto& k : a) {
    const double mr = median(ref[k]), mp = median(par[k]);
    const bool comparable = !std::isnan(mr) && !std::isnan(mp);
    const bool wins = comparable && mp < mr;
    os << std::get<2>(k) << ',' << (std::isnan(mr) ? "skipped" : fmt_seconds(mr)) << ','
       << (std::isnan(mp) ? "skipped" : fmt_seconds(mp)) << ','
       << (!comparable ? "n/a" : wins ? "parallel" : "reference") << '\n';
    if (wins && !rep.crossover) rep.crossover = std::get<2>(k);
  }
  if (rep.crossover)
    os << "crossover at n = " << *rep.crossover << '\n';
  else
    os << "no crossover in range\n";
  rep.text = os.str();
  return rep;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const ParseOutcome p = parse_cli(argc, argv);
  if (!p.config) {
    (p.exit_code == 0 ? out : err) << p.message;
    return p.exit_code;
  }
  const BenchConfig& cfg = *p.config;
  std::vector<BenchRecord> records;
  try {
    records = run_task(cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& r : records)
    if (r.skipped) err << "skipped " << r.task << " n=" << r.n << " on " << r.backend << ": " << r.reason << '\n';

  if (cfg.out.empty()) {
    write_csv(out, records);
  } else {
    std::ofstream f(cfg.out);
    if (!f) {
      err << "error: cannot write " << cfg.out << '\n';
      return 1;
    }
    write_csv(f, records);
  }

  if (cfg.report.empty()) return 0;
  CrossoverReport rep;
  try {
    rep = crossover_report(records);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  std::ofstream f(cfg.report);
  if (!f) {
    err << "error: cannot write " << cfg.report << '\n';
    return 1;
  }
  f << rep.text;
  out << rep.text;
  return rep.crossover ? 0 : 3;
}

}  // namespace qk::bench
