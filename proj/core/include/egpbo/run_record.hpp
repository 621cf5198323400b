#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace egpbo {

/// One function evaluation in the order results became available.
struct RunRow {
  std::size_t t = 0;          // 0-based evaluation index
  std::size_t worker = 0;
  double virtual_time = 0.0;
  long model_index = -1;      // -1 for random (initial or baseline) points
  Eigen::VectorXd x;          // native coordinates
  double y = 0.0;             // observed (possibly noisy) value
  double best = 0.0;          // running max of y
  double simple_regret = 0.0; // f* - max noiseless f over the prefix; NaN if unknown
};

struct RunRecord {
  std::size_t run_id = 0;
  std::vector<RunRow> rows;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return rows.empty() ? 0 : rows.front().x.size(); }
};

bool operator==(const RunRow& a, const RunRow& b);
bool operator==(const RunRecord& a, const RunRecord& b);

/// Header: run_id,t,worker,virtual_time,model_index,x_0..x_{d-1},y,best,simple_regret.
/// Reals are written with 17 significant digits.
void write_record_csv(std::ostream& out, const RunRecord& record, bool header = true);

/// Parses one or more runs (grouped by run_id, in order of first appearance).
std::vector<RunRecord> read_records_csv(std::istream& in);

}  // namespace egpbo
