#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egpbo/engine.hpp"
#include "egpbo/objectives.hpp"
#include "egpbo/run_record.hpp"

namespace egpbo {

struct ExperimentConfig {
  std::string objective = "dropwave";
  std::string dictionary = "rbf,rbf_ard,matern1.5,matern2.5";
  std::string method = "egp";  // egp | gp:<kernel> | random
  BOConfig bo;                 // bo.seed is the root seed; repeat r uses seed + r
  std::size_t repeats = 10;
  std::optional<double> noise_sd;  // default: 0.01 * probed value range
  std::filesystem::path out_dir;   // empty: nothing written
  std::size_t threads = 0;         // 0: EGPBO_THREADS or hardware concurrency
};

/// Simple-regret statistics across runs at one evaluation index.
struct AggregateRow {
  std::size_t t = 0;
  std::size_t n = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // ordered by repeat index
  std::vector<AggregateRow> aggregate;
  std::vector<std::string> failures;
  [[nodiscard]] bool partial() const noexcept { return !failures.empty(); }
};

/// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

std::vector<AggregateRow> aggregate(std::span<const RunRecord> runs);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);

/// One run of `method` on `problem`.
RunRecord run_method(const Problem& problem, const std::string& method,
                     const std::string& dictionary, const BOConfig& config);

/// R independent seeded runs; writes run_<r>.csv and aggregate.csv into
/// out_dir when set. Failed runs keep their partial records and are listed
/// in `failures` (and FAILED.txt).
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Reads every run_*.csv in `dir`, writes `dir`/aggregate.csv and returns it.
std::vector<AggregateRow> aggregate_dir(const std::filesystem::path& dir);

/// Worker count from EGPBO_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

}  // namespace egpbo
