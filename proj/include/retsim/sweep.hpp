#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "retsim/config.hpp"

namespace retsim {

struct SweepRow {
  double epsilon = 0.0;
  int L_q = 0;
  double R = 1.0;
  int n = 0;
  std::string csv;  // row text exactly as it will appear in the CSV output
  bool reused = false;
  CellResult cell;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (epsilon, L_q, R, n)
  int computed = 0;
  int reused = 0;
};

// Parses one data row of the cell CSV schema; returns false on any
// malformed field (malformed rows in a resume file are simply recomputed).
bool parse_cell_csv_row(const std::string& line, CellResult* out);

// Runs every cell of the sweep on a pool of `spec.workers` threads. Cells
// whose key (epsilon, L_q, R, n) already appears in `resume_path` keep the
// existing row bytes and are not recomputed. Results are identical for any
// worker count: all randomness is keyed by cell, not by schedule.
SweepResult run_sweep(const SweepSpec& spec,
                      const std::string& resume_path = "",
                      std::ostream* progress = nullptr);

std::string sweep_csv(const SweepResult& result);
std::string sweep_json(const SweepResult& result);

// Atomic write (temp file + rename); leaves the file untouched when the new
// content is byte-identical.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace retsim
