#include "egpbo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "egpbo/errors.hpp"

namespace egpbo {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(std::span<const RunRecord> runs) {
  std::size_t length = 0;
  for (const auto& r : runs) length = std::max(length, r.size());
  std::vector<AggregateRow> out;
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> v;
    for (const auto& r : runs) {
      if (t < r.size()) v.push_back(r.rows[t].simple_regret);
    }
    std::sort(v.begin(), v.end());
    AggregateRow row;
    row.t = t;
    row.n = v.size();
    row.median = quantile(v, 0.5);
    row.q25 = quantile(v, 0.25);
    row.q75 = quantile(v, 0.75);
    double sum = 0.0;
    for (double x : v) sum += x;
    row.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - row.mean) * (x - row.mean);
    row.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    row.min = v.front();
    row.max = v.back();
    out.push_back(row);
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
  out << "t,n,median,q25,q75,mean,sd,min,max\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.n,
                  r.median, r.q25, r.q75, r.mean, r.sd, r.min, r.max);
    out << buf;
  }
}

RunRecord run_method(const Problem& problem, const std::string& method,
                     const std::string& dictionary, const BOConfig& config) {
  if (method == "random") return baseline_random(problem, config);
  if (method == "egp") return run_bo(problem, KernelDictionary::parse(dictionary), config);
  if (method.rfind("gp:", 0) == 0) {
    const KernelDictionary single = KernelDictionary::parse(method.substr(3));
    if (single.size() != 1) throw UsageError("gp:<kernel> takes exactly one kernel");
    BOConfig c = config;
    c.surrogate = SurrogateKind::SingleGp;
    return run_bo(problem, single, c);
  }
  throw UsageError("unknown method '" + method + "' (choices: egp, gp:<kernel>, random)");
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("EGPBO_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void write_run(const std::filesystem::path& dir, const RunRecord& r) {
  std::ofstream out(dir / ("run_" + std::to_string(r.run_id) + ".csv"));
  write_record_csv(out, r);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw UsageError("repeats must be at least 1");
  SyntheticObjective objective = make_objective(cfg.objective);
  if (cfg.noise_sd) objective.set_noise_sd(*cfg.noise_sd);
  // validate the method and dictionary before starting any thread
  if (cfg.method == "egp") {
    (void)KernelDictionary::parse(cfg.dictionary);
  } else if (cfg.method.rfind("gp:", 0) != 0 && cfg.method != "random") {
    throw UsageError("unknown method '" + cfg.method + "' (choices: egp, gp:<kernel>, random)");
  }
  cfg.bo.validate();
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  ExperimentResult result;
  result.runs.resize(cfg.repeats);
  std::vector<std::string> errors(cfg.repeats);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.repeats; r = next++) {
      BOConfig bo = cfg.bo;
      bo.seed = cfg.bo.seed + r;
      bo.run_id = r;
      const Problem problem = make_problem(objective, bo.seed);
      try {
        result.runs[r] = run_method(problem, cfg.method, cfg.dictionary, bo);
      } catch (const RunAborted& e) {
        result.runs[r] = e.partial();
        errors[r] = e.what();
      } catch (const std::exception& e) {
        result.runs[r].run_id = r;
        errors[r] = e.what();
      }
    }
  };
  const std::size_t threads =
      std::min(cfg.repeats, cfg.threads > 0 ? cfg.threads : default_thread_count());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    if (!errors[r].empty()) result.failures.push_back("run " + std::to_string(r) + ": " + errors[r]);
  }
  std::vector<RunRecord> nonempty;
  for (const auto& r : result.runs)
    if (r.size() > 0) nonempty.push_back(r);
  if (!nonempty.empty()) result.aggregate = aggregate(nonempty);

  if (!cfg.out_dir.empty()) {
    for (const auto& r : result.runs)
      if (r.size() > 0) write_run(cfg.out_dir, r);
    std::ofstream agg(cfg.out_dir / "aggregate.csv");
    write_aggregate_csv(agg, result.aggregate);
    if (result.partial()) {
      std::ofstream failed(cfg.out_dir / "FAILED.txt");
      for (const auto& f : result.failures) failed << f << '\n';
    }
  }
  return result;
}

std::vector<AggregateRow> aggregate_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no run_*.csv files in " + dir.string());
  std::vector<RunRecord> runs;
  for (const auto& f : files) {
    std::ifstream in(f);
    for (auto& r : read_records_csv(in)) runs.push_back(std::move(r));
  }
  const auto rows = aggregate(runs);
  std::ofstream out(dir / "aggregate.csv");
  write_aggregate_csv(out, rows);
  return rows;
}

}  // namespace egpbo
