#pragma once

#include <string>
#include <vector>

#include "retsim/harness.hpp"

namespace retsim {

// A sweep is the cross product epsilon x L_q x R x n on top of one shared
// base configuration. Scalar keys land in `base`; the four grid keys accept
// either a scalar or an array in the config file.
struct SweepSpec {
  ExperimentConfig base;
  std::vector<double> epsilons = {0.5};
  std::vector<int> L_qs = {100};
  std::vector<double> Rs = {1.0};
  std::vector<int> ns = {10};
  int workers = 1;
  std::string format = "csv";  // csv | json | both
  std::string out;             // empty: stdout
  bool with_bounds = true;

  int cells() const {
    return static_cast<int>(epsilons.size() * L_qs.size() * Rs.size() *
                            ns.size());
  }

  // Cell index -> fully specified per-cell configuration. Iteration order is
  // epsilon-major: index = ((i_n * |R| + i_R) * |L_q| + i_L) * |eps| + i_eps
  // reversed so epsilon varies fastest.
  ExperimentConfig cell_config(int index, double* epsilon_out) const;

  // Grid/worker checks beyond ExperimentConfig::validate; throws
  // invalid_argument naming the key.
  void validate() const;
};

// Flat TOML subset: `key = value` lines, values are numbers, booleans,
// quoted strings, bare words, or one-line arrays `[a, b]`. `[section]`
// headers are tolerated and ignored; `#` starts a comment. Unknown keys and
// malformed values raise invalid_argument naming the key and line.
SweepSpec parse_sweep_text(const std::string& text,
                           const std::string& origin = "<config>");
SweepSpec parse_sweep_file(const std::string& path);

}  // namespace retsim
