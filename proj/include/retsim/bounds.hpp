#pragma once

#include <string>
#include <vector>

#include "retsim/gaussian.hpp"
#include "retsim/margins.hpp"

namespace retsim {

// P(some margin <= 0) under the Gaussian surrogate: 1 minus the orthant
// probability at zero with flipped means. Zero-variance rows are resolved
// first: a deterministic margin mu_j <= 0 makes the error certain, a
// deterministic mu_j > 0 drops out.
gaussian::OrthantEstimate pe_mvn(const MarginMoments& moments,
                                 const gaussian::QmcConfig& cfg = {});

// First-order union bound: sum_j P(margin_j <= 0). May exceed 1.
double bonferroni_first(const MarginMoments& moments);

// Third-order truncation: B1 minus pairwise plus triple intersection terms,
// each an exact Gaussian CDF at zero of the corresponding sub-moments.
double bonferroni_third(const MarginMoments& moments);

struct SidakResult {
  double value = 0.0;  // 1 - prod_j P(margin_j > 0)
  bool valid = false;  // all defined pairwise correlations >= -1e-10
};
SidakResult sidak_bound(const MarginMoments& moments);

struct BoundReport {
  gaussian::OrthantEstimate pe;  // value is the error probability
  double b1 = 0.0;
  double b1_clipped = 0.0;
  double b3 = 0.0;
  double sidak = 0.0;
  bool sidak_valid = false;
  double combined = 0.0;  // min(b1_clipped, max(b3, 0))
  std::vector<int> degenerate_rows;
};

BoundReport full_report(const MarginMoments& moments,
                        const gaussian::QmcConfig& cfg = {});

std::string report_to_json(const BoundReport& report);
std::string report_csv_header();
std::string report_csv_row(const BoundReport& report);

}  // namespace retsim
