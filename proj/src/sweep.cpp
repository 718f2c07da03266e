#include "retsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace retsim {
namespace {

bool near(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return false;
  return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct CellKey {
  double epsilon;
  int L_q;
  double R;
  int n;
};

bool key_matches(const CellKey& k, const CellResult& c) {
  return near(k.epsilon, c.epsilon) && k.L_q == c.L_q && near(k.R, c.R) &&
         k.n == c.n;
}

bool row_before(const SweepRow& a, const SweepRow& b) {
  if (a.epsilon != b.epsilon) return a.epsilon < b.epsilon;
  if (a.L_q != b.L_q) return a.L_q < b.L_q;
  if (a.R != b.R) return a.R < b.R;
  return a.n < b.n;
}

}  // namespace

bool parse_cell_csv_row(const std::string& line, CellResult* out) {
  std::vector<double> fields;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) {
    if (cur == "nan" || cur == "-nan" || cur == "NaN") {
      fields.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(cur.c_str(), &end);
    if (end == cur.c_str() || *end != '\0' || errno == ERANGE) return false;
    fields.push_back(x);
  }
  if (fields.size() != 15) return false;
  CellResult c;
  c.epsilon = fields[0];
  c.L_q = static_cast<int>(fields[1]);
  c.R = fields[2];
  c.n = static_cast<int>(fields[3]);
  c.trials = static_cast<int>(fields[4]);
  c.pe_mc = fields[5];
  c.ci_lo = fields[6];
  c.ci_hi = fields[7];
  c.pe_mvn = fields[8];
  c.b1 = fields[9];
  c.b1_clipped = fields[10];
  c.b3 = fields[11];
  c.sidak = fields[12];
  c.sidak_valid_frac = fields[13];
  c.resampled = static_cast<std::uint64_t>(fields[14]);
  *out = c;
  return true;
}

SweepResult run_sweep(const SweepSpec& spec, const std::string& resume_path,
                      std::ostream* progress) {
  spec.validate();
  const int total = spec.cells();

  // Existing rows available for reuse: raw text plus parsed key.
  std::vector<std::pair<CellResult, std::string>> existing;
  if (!resume_path.empty()) {
    std::ifstream in(resume_path);
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
        line.pop_back();
      CellResult c;
      if (parse_cell_csv_row(line, &c)) existing.emplace_back(c, line);
    }
  }

  SweepResult result;
  result.rows.resize(total);
  std::vector<int> pending;
  for (int i = 0; i < total; ++i) {
    double eps = 0.0;
    const ExperimentConfig cfg = spec.cell_config(i, &eps);
    SweepRow& row = result.rows[i];
    row.epsilon = eps;
    row.L_q = cfg.L_q;
    row.R = cfg.R;
    row.n = cfg.n;
    const CellKey key{eps, cfg.L_q, cfg.R, cfg.n};
    const auto hit =
        std::find_if(existing.begin(), existing.end(),
                     [&](const auto& e) { return key_matches(key, e.first); });
    if (hit != existing.end()) {
      row.reused = true;
      row.cell = hit->first;
      row.csv = hit->second;
    } else {
      pending.push_back(i);
    }
  }
  result.reused = total - static_cast<int>(pending.size());
  result.computed = static_cast<int>(pending.size());

  // One corpus per distinct n; built up front so workers share it read-only.
  std::map<int, Workspace> workspaces;
  if (!pending.empty()) {
    for (int n : spec.ns) {
      if (workspaces.count(n)) continue;
      ExperimentConfig cfg = spec.base;
      cfg.n = n;
      workspaces.emplace(n, prepare_workspace(cfg));
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  int done = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= pending.size()) return;
      const int i = pending[slot];
      double eps = 0.0;
      const ExperimentConfig cfg = spec.cell_config(i, &eps);
      const Workspace& ws = workspaces.at(cfg.n);
      CellResult cell = run_cell(cfg, ws, eps, /*with_mc=*/true,
                                 spec.with_bounds);
      SweepRow& row = result.rows[i];
      row.cell = cell;
      row.csv = cell_csv_row(cell);
      if (progress) {
        std::lock_guard<std::mutex> lock(mu);
        ++done;
        *progress << "cell " << done << "/" << pending.size() << " done"
                  << " (epsilon=" << eps << " L_q=" << cfg.L_q
                  << " R=" << cfg.R << " n=" << cfg.n << ")\n";
        progress->flush();
      }
    }
  };

  const int nthreads =
      std::max(1, std::min<int>(spec.workers,
                                static_cast<int>(pending.size())));
  if (nthreads <= 1 || pending.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::stable_sort(result.rows.begin(), result.rows.end(), row_before);
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = cell_csv_header();
  out += '\n';
  for (const SweepRow& row : result.rows) {
    out += row.csv;
    out += '\n';
  }
  return out;
}

std::string sweep_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& row : result.rows) {
    const CellResult& c = row.cell;
    rows.push_back({{"epsilon", c.epsilon},
                    {"L_q", c.L_q},
                    {"R", c.R},
                    {"n", c.n},
                    {"trials", c.trials},
                    {"pe_mc", c.pe_mc},
                    {"ci_lo", c.ci_lo},
                    {"ci_hi", c.ci_hi},
                    {"pe_mvn", c.pe_mvn},
                    {"b1", c.b1},
                    {"b1_clipped", c.b1_clipped},
                    {"b3", c.b3},
                    {"sidak", c.sidak},
                    {"sidak_valid_frac", c.sidak_valid_frac},
                    {"resampled_queries", c.resampled}});
  }
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  {
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      if (buf.str() == content) return;  // nothing new: leave mtime alone
    }
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path +
                             "': " + std::strerror(errno));
  }
}

}  // namespace retsim
