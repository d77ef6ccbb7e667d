#include "rhh/harness.hpp"

#include <barrier>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "rhh/util.hpp"
#include "rhh/verify.hpp"

namespace rhh::harness {

namespace {

// Golden-ratio stride keeps per-trial base seeds far apart; each worker then
// xors in its thread index (splittable-counter style).
constexpr std::uint64_t kTrialStride = 0x9e3779b97f4a7c15ULL;

SplitMix64 stream_rng(const WorkloadSpec& spec, int trial, unsigned thread) {
  return SplitMix64(mix64(spec.seed + kTrialStride * std::uint64_t(trial + 1)) ^
                    thread);
}

}  // namespace

void prefill(RobinHoodTable& table, const WorkloadSpec& spec) {
  const std::uint64_t capacity = table.capacity();
  const auto target =
      static_cast<std::uint64_t>(std::llround(spec.load_factor * double(capacity)));
  std::vector<std::uint64_t> keys(capacity);
  std::iota(keys.begin(), keys.end(), std::uint64_t{1});
  SplitMix64 rng(mix64(spec.seed));
  for (std::uint64_t i = 0; i < target; ++i) {
    const std::uint64_t j = i + rng.next() % (capacity - i);
    std::swap(keys[i], keys[j]);
    table.add(keys[i]);
  }
}

RunResult run_trial(RobinHoodTable& table, const WorkloadSpec& spec, int trial) {
  RunResult result;
  result.spec = spec;
  result.trial = trial;
  result.per_thread_ops.assign(spec.threads, 0);

  std::vector<std::uint64_t> retries(spec.threads, 0);
  std::vector<std::uint64_t> probes(spec.threads, 0);
  std::atomic<bool> stop{false};
  std::barrier start(spec.threads + 1);
  const std::uint64_t capacity = table.capacity();

  std::vector<std::thread> workers;
  for (unsigned t = 0; t < spec.threads; ++t) {
    workers.emplace_back([&, t] {
      SplitMix64 rng = stream_rng(spec, trial, t);
      std::uint64_t ops = 0, retry = 0, probe = 0;
      start.arrive_and_wait();
      while (!stop.load(std::memory_order_relaxed)) {
        const double roll = rng.next_unit();
        const std::uint64_t key = 1 + rng.next() % capacity;
        OpStats stats;
        try {
          if (roll < spec.update_ratio / 2) {
            table.add(key, &stats);
          } else if (roll < spec.update_ratio) {
            table.remove(key, &stats);
          } else {
            table.contains(key, &stats);
          }
        } catch (const SaturatedError&) {
        }
        ++ops;
        retry += stats.retries;
        probe += stats.probes;
      }
      result.per_thread_ops[t] = ops;
      retries[t] = retry;
      probes[t] = probe;
    });
  }

  start.arrive_and_wait();
  const auto begin = std::chrono::steady_clock::now();
  std::this_thread::sleep_for(std::chrono::duration<double>(spec.duration_secs));
  stop.store(true);
  for (auto& w : workers) w.join();
  const std::chrono::duration<double, std::micro> elapsed =
      std::chrono::steady_clock::now() - begin;

  for (unsigned t = 0; t < spec.threads; ++t) result.total_ops += result.per_thread_ops[t];
  const std::uint64_t total_retries = std::accumulate(retries.begin(), retries.end(), 0ULL);
  const std::uint64_t total_probes = std::accumulate(probes.begin(), probes.end(), 0ULL);
  result.ops_per_us = double(result.total_ops) / elapsed.count();
  if (result.total_ops > 0) {
    result.retries_per_op = double(total_retries) / double(result.total_ops);
    result.mean_probe = double(total_probes) / double(result.total_ops);
  }
  return result;
}

std::vector<RunResult> run_grid(const WorkloadSpec& base,
                                std::span<const double> load_factors,
                                std::span<const double> update_ratios,
                                std::span<const unsigned> thread_counts,
                                bool* audits_ok, std::ostream* progress) {
  std::vector<RunResult> results;
  if (audits_ok) *audits_ok = true;
  for (const double load : load_factors) {
    for (const double update : update_ratios) {
      for (const unsigned threads : thread_counts) {
        WorkloadSpec spec = base;
        spec.load_factor = load;
        spec.update_ratio = update;
        spec.threads = threads;

        RunResult avg;
        avg.spec = spec;
        avg.trial = -1;
        for (unsigned trial = 0; trial < spec.trials; ++trial) {
          RobinHoodTable table(spec.table_options());
          prefill(table, spec);
          RunResult r = run_trial(table, spec, int(trial));
          if (audits_ok && !verify::audit_quiescent(table).passed()) {
            *audits_ok = false;
          }
          if (progress) {
            *progress << "load " << load << " update " << update << " threads "
                      << threads << " trial " << trial << ": " << r.ops_per_us
                      << " ops/us\n";
          }
          avg.total_ops += r.total_ops;
          avg.ops_per_us += r.ops_per_us;
          avg.retries_per_op += r.retries_per_op;
          avg.mean_probe += r.mean_probe;
          results.push_back(std::move(r));
        }
        if (spec.trials > 0) {
          avg.total_ops /= spec.trials;
          avg.ops_per_us /= spec.trials;
          avg.retries_per_op /= spec.trials;
          avg.mean_probe /= spec.trials;
        }
        results.push_back(std::move(avg));
      }
    }
  }
  return results;
}

namespace {

nlohmann::json to_record(const RunResult& r) {
  return nlohmann::json{
      {"capacity_log2", r.spec.capacity_log2},
      {"load_factor", r.spec.load_factor},
      {"update_ratio", r.spec.update_ratio},
      {"threads", r.spec.threads},
      {"trial", r.trial},
      {"seed", r.spec.seed},
      {"total_ops", r.total_ops},
      {"ops_per_us", r.ops_per_us},
      {"retries_per_op", r.retries_per_op},
      {"mean_probe", r.mean_probe},
  };
}

constexpr const char* kColumns[] = {
    "capacity_log2", "load_factor",  "update_ratio",   "threads",    "trial",
    "seed",          "total_ops",    "ops_per_us",     "retries_per_op",
    "mean_probe",
};

}  // namespace

void emit(std::span<const RunResult> results, Format format, std::ostream& out) {
  if (format == Format::kCsv) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
      out << (i ? "," : "") << kColumns[i];
    }
    out << "\n";
  }
  for (const RunResult& r : results) {
    const nlohmann::json rec = to_record(r);
    if (format == Format::kJsonLines) {
      out << rec.dump() << "\n";
    } else {
      for (std::size_t i = 0; i < std::size(kColumns); ++i) {
        // Values are serialized through the same JSON writer in both formats
        // so doubles round-trip identically.
        out << (i ? "," : "") << rec.at(kColumns[i]).dump();
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("emit: write failed");
}

std::vector<RunResult> parse_jsonl(std::istream& in) {
  std::vector<RunResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    RunResult r;
    r.spec.capacity_log2 = rec.at("capacity_log2").get<std::uint32_t>();
    r.spec.load_factor = rec.at("load_factor").get<double>();
    r.spec.update_ratio = rec.at("update_ratio").get<double>();
    r.spec.threads = rec.at("threads").get<unsigned>();
    r.spec.seed = rec.at("seed").get<std::uint64_t>();
    r.trial = rec.at("trial").get<int>();
    r.total_ops = rec.at("total_ops").get<std::uint64_t>();
    r.ops_per_us = rec.at("ops_per_us").get<double>();
    r.retries_per_op = rec.at("retries_per_op").get<double>();
    r.mean_probe = rec.at("mean_probe").get<double>();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace rhh::harness
