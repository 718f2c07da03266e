#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "retsim/bounds.hpp"
#include "retsim/coding.hpp"
#include "retsim/corpus.hpp"

namespace retsim {

enum class SimMode { kTfidf, kTokenDp };

struct ExperimentConfig {
  int N = 5000;
  double alpha = 1.0;
  int n = 10;
  int L_doc = 20000;
  int L_q = 100;
  int l_s = 0;  // stop-word ranks [0, l_s); masking off by default
  double R = 1.0;
  std::vector<double> epsilons = {0.5};
  int trials = 2000;
  int Q = 200;  // queries averaged for the analytic curves
  std::uint64_t seed = 0;
  gaussian::QmcConfig qmc;
  SimMode mode = SimMode::kTfidf;
  std::string token_scorer = "uniform";  // or "synthetic-random"
  int embed_dim = 16;                    // token mode embedding width
  bool with_bounds = true;

  // Throws invalid_argument naming the offending key.
  void validate() const;
};

// Inputs shared by every trial of one (n, N, alpha, L_doc) configuration.
struct Workspace {
  ZipfVocabulary vocab;
  DocumentCorpus corpus;
  // Token mode: per-document embeddings under the bag-of-term-vectors map.
  std::vector<std::vector<double>> doc_embed;
};

Workspace prepare_workspace(const ExperimentConfig& config);

// Deterministic random direction assigned to a term rank (token mode).
std::vector<double> term_vector(std::uint64_t seed, int rank, int dim);

struct TrialOutcome {
  bool error = false;
  std::uint32_t resample_attempts = 0;  // queries redrawn before this one
};

// One end-to-end trial: sample query, plan repetitions, erase, retrieve,
// compare with the no-erasure decision. Queries with empty support or a
// tied ground truth are resampled (counted).
TrialOutcome run_trial(const ExperimentConfig& config, const Workspace& ws,
                       double epsilon, std::uint64_t trial);

struct ErrorEstimate {
  double p_hat = 0.0;
  int trials = 0;
  double ci_lo = 0.0;  // Wilson 95%
  double ci_hi = 0.0;
  std::uint64_t resampled = 0;
};

ErrorEstimate estimate_error(const ExperimentConfig& config,
                             const Workspace& ws, double epsilon);

struct AveragedBounds {
  int Q = 0;
  double pe_mvn = 0.0, b1 = 0.0, b1_clipped = 0.0, b3 = 0.0, sidak = 0.0,
         combined = 0.0;
  double se_pe_mvn = 0.0, se_b1 = 0.0, se_b3 = 0.0, se_sidak = 0.0;
  double sidak_valid_frac = 0.0;
  std::uint64_t resampled = 0;
};

// Mean conditional bounds over Q sampled queries (tf-idf mode only).
AveragedBounds averaged_bounds(const ExperimentConfig& config,
                               const Workspace& ws, double epsilon, int Q);

// Stream label of the q-th averaged-bounds query (attempt counts resamples).
// Deliberately independent of epsilon and R so the same queries underlie
// every cell along those axes.
std::uint64_t bounds_query_label(const ExperimentConfig& config,
                                 std::uint64_t q, std::uint64_t attempt);

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t trials);

struct CellResult {
  double epsilon = 0.0;
  int L_q = 0;
  double R = 1.0;
  int n = 0;
  int trials = 0;
  double pe_mc = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  // NaN when the analytic side was not computed (token mode / simulate-only).
  double pe_mvn = 0.0, b1 = 0.0, b1_clipped = 0.0, b3 = 0.0, sidak = 0.0,
         sidak_valid_frac = 0.0;
  std::uint64_t resampled = 0;
};

CellResult run_cell(const ExperimentConfig& config, const Workspace& ws,
                    double epsilon, bool with_mc, bool with_bounds);

std::string cell_csv_header();
std::string cell_csv_row(const CellResult& cell);

}  // namespace retsim
