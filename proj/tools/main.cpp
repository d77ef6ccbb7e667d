#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rhh/harness.hpp"
#include "rhh/serial_table.hpp"
#include "rhh/verify.hpp"

namespace {

int run_bench(const rhh::harness::WorkloadSpec& base,
              const std::vector<double>& loads,
              const std::vector<double>& updates,
              const std::vector<unsigned>& threads, bool verify,
              const std::string& format, const std::string& out_path) {
  bool audits_ok = true;
  const auto results =
      rhh::harness::run_grid(base, loads, updates, threads,
                             verify ? &audits_ok : nullptr, &std::cerr);
  const auto fmt = format == "csv" ? rhh::harness::Format::kCsv
                                   : rhh::harness::Format::kJsonLines;
  if (out_path.empty()) {
    rhh::harness::emit(results, fmt, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot open " << out_path << "\n";
      return 1;
    }
    rhh::harness::emit(results, fmt, out);
  }
  if (verify && !audits_ok) {
    std::cerr << "post-trial audit FAILED\n";
    return 1;
  }
  return 0;
}

int run_verify(const std::string& suite, std::uint32_t capacity_log2,
               unsigned threads, unsigned keys, unsigned cells, double seconds,
               unsigned runs, unsigned schedules, std::uint64_t seed) {
  bool ok = true;
  if (suite == "audit") {
    rhh::RobinHoodTable table(capacity_log2);
    rhh::harness::WorkloadSpec spec;
    spec.capacity_log2 = capacity_log2;
    spec.load_factor = 0.8;
    spec.seed = seed;
    rhh::harness::prefill(table, spec);
    const auto report = rhh::verify::audit_quiescent(table);
    report.print(std::cout);
    ok = report.passed();
  } else if (suite == "linearizability") {
    for (unsigned r = 0; r < runs && ok; ++r) {
      ok = rhh::verify::linearizability_run(threads, keys, seconds, seed + r);
      std::cout << "run " << r << ": " << (ok ? "pass" : "FAIL") << "\n";
    }
  } else if (suite == "races") {
    for (const auto& scenario : rhh::verify::race_scenarios()) {
      unsigned passes = 0;
      for (unsigned r = 0; r < runs; ++r) {
        passes += rhh::verify::run_directed_race(scenario) ? 1 : 0;
      }
      std::cout << scenario << ": " << passes << "/" << runs << "\n";
      ok = ok && passes == runs;
    }
  } else if (suite == "kcas-torture") {
    std::uint64_t total = 0;
    const bool torture = rhh::verify::kcas_torture(threads, cells, seconds, &total);
    std::cout << "torture: " << total << " successful multi-word swaps, "
              << (torture ? "counters reconcile" : "MISMATCH") << "\n";
    const bool overlap = rhh::verify::kcas_overlap_enumeration(schedules, seed);
    std::cout << "overlap schedules: " << (overlap ? "pass" : "FAIL") << "\n";
    ok = torture && overlap;
  } else if (suite == "probe-stats") {
    const auto big = rhh::probe_stats(capacity_log2, 0.8, seed);
    const auto small = rhh::probe_stats(10, 0.8, seed);
    std::cout << "load 0.8, capacity 2^" << capacity_log2
              << ": mean successful probes " << big.mean_successful
              << ", mean unsuccessful " << big.mean_unsuccessful << "\n"
              << "load 0.8, capacity 2^10: mean unsuccessful "
              << small.mean_unsuccessful << "\n";
    ok = big.mean_successful >= 2.0 && big.mean_successful <= 3.2 &&
         big.mean_unsuccessful > small.mean_unsuccessful;
  } else {
    std::cerr << "unknown suite " << suite << "\n";
    return 2;
  }
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent Robin Hood hash set: benchmark and verification driver"};
  app.require_subcommand(1);

  rhh::harness::WorkloadSpec base;
  std::vector<double> loads{0.2, 0.4, 0.6, 0.8};
  std::vector<double> updates{0.1, 0.2};
  std::vector<unsigned> threads{1};
  bool verify_after = false;
  std::string format = "csv";
  std::string out_path;

  auto* bench = app.add_subcommand("bench", "timed workload grid");
  bench->add_option("--capacity-log2", base.capacity_log2, "table size exponent");
  bench->add_option("--load-factor", loads, "prefill load factors (repeatable)");
  bench->add_option("--update-ratio", updates, "update ratios (repeatable)");
  bench->add_option("--threads", threads, "thread counts (repeatable)");
  bench->add_option("--duration-secs", base.duration_secs, "seconds per trial");
  bench->add_option("--trials", base.trials, "trials per grid cell");
  bench->add_option("--seed", base.seed, "workload rng seed");
  bench->add_option("--shard-log2", base.shard_log2, "buckets per timestamp shard, log2");
  bench->add_flag("--backoff", base.backoff, "exponential backoff between retries");
  bench->add_flag("--verify", verify_after, "audit the table after every trial");
  bench->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"csv", "json-lines"}));
  bench->add_option("--out", out_path, "output path (default stdout)");

  std::string suite;
  std::uint32_t v_capacity_log2 = 16;
  unsigned v_threads = 8, v_keys = 8, v_cells = 4, v_runs = 5,
           v_schedules = 10000;
  double v_seconds = 5.0;
  std::uint64_t v_seed = 1;

  auto* verify = app.add_subcommand("verify", "correctness suites");
  verify->add_option("--suite", suite, "which checks to run")
      ->required()
      ->check(CLI::IsMember({"audit", "linearizability", "races", "kcas-torture",
                             "probe-stats"}));
  verify->add_option("--capacity-log2", v_capacity_log2, "table size exponent");
  verify->add_option("--threads", v_threads, "worker threads");
  verify->add_option("--keys", v_keys, "key space for linearizability runs");
  verify->add_option("--cells", v_cells, "counter cells for torture");
  verify->add_option("--seconds", v_seconds, "duration of timed suites");
  verify->add_option("--runs", v_runs, "repetitions (linearizability, races)");
  verify->add_option("--schedules", v_schedules, "random overlap schedules");
  verify->add_option("--seed", v_seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  if (bench->parsed()) {
    return run_bench(base, loads, updates, threads, verify_after, format, out_path);
  }
  return run_verify(suite, v_capacity_log2, v_threads, v_keys, v_cells,
                    v_seconds, v_runs, v_schedules, v_seed);
}
