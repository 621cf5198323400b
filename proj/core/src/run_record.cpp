#include "egpbo/run_record.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "egpbo/errors.hpp"

namespace egpbo {

namespace {

bool same_real(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw UsageError("bad number in run record: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

bool operator==(const RunRow& a, const RunRow& b) {
  return a.t == b.t && a.worker == b.worker && same_real(a.virtual_time, b.virtual_time) &&
         a.model_index == b.model_index && a.x.size() == b.x.size() && a.x == b.x &&
         same_real(a.y, b.y) && same_real(a.best, b.best) &&
         same_real(a.simple_regret, b.simple_regret);
}

bool operator==(const RunRecord& a, const RunRecord& b) {
  return a.run_id == b.run_id && a.rows == b.rows;
}

void write_record_csv(std::ostream& out, const RunRecord& record, bool header) {
  const Eigen::Index d = record.dim();
  if (header) {
    out << "run_id,t,worker,virtual_time,model_index";
    for (Eigen::Index i = 0; i < d; ++i) out << ",x_" << i;
    out << ",y,best,simple_regret\n";
  }
  for (const auto& r : record.rows) {
    out << record.run_id << ',' << r.t << ',' << r.worker << ',' << fmt17(r.virtual_time) << ','
        << r.model_index;
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out << ',' << fmt17(r.x[i]);
    out << ',' << fmt17(r.y) << ',' << fmt17(r.best) << ',' << fmt17(r.simple_regret) << '\n';
  }
}

std::vector<RunRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split(line);
  if (header.size() < 8 || header[0] != "run_id") throw UsageError("run record CSV has no header");
  const std::size_t d = header.size() - 8;
  std::vector<RunRecord> runs;
  std::map<std::size_t, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw UsageError("run record row has wrong field count");
    RunRow r;
    const auto run_id = static_cast<std::size_t>(std::stoull(f[0]));
    r.t = static_cast<std::size_t>(std::stoull(f[1]));
    r.worker = static_cast<std::size_t>(std::stoull(f[2]));
    r.virtual_time = parse_real(f[3]);
    r.model_index = std::stol(f[4]);
    r.x.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) r.x[static_cast<Eigen::Index>(i)] = parse_real(f[5 + i]);
    r.y = parse_real(f[5 + d]);
    r.best = parse_real(f[6 + d]);
    r.simple_regret = parse_real(f[7 + d]);
    auto [it, inserted] = index.try_emplace(run_id, runs.size());
    if (inserted) runs.push_back(RunRecord{run_id, {}});
    runs[it->second].rows.push_back(std::move(r));
  }
  return runs;
}

}  // namespace egpbo
