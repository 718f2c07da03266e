#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "retsim/corpus.hpp"

namespace retsim {

// Affine decomposition of the score margin against the reference document k:
// margin_j(e) = sum_i (C_{j,i} + e_i * delta_{j,i}) over support columns.
struct MarginCoefficients {
  int k = 0;
  std::vector<int> doc_ids;  // row j -> competitor document id (k excluded)
  std::vector<int> support;  // column index -> term rank
  Eigen::MatrixXd C;         // zeta^2 (vd_j^2 - vd_k^2)
  Eigen::MatrixXd delta;     // 2 zeta^2 v_q (vd_k - vd_j)

  int m() const { return static_cast<int>(doc_ids.size()); }
};

MarginCoefficients margin_coefficients(const std::vector<double>& v_q,
                                       const DocumentCorpus& corpus, int k,
                                       const std::vector<int>& support);

// margin_j for one indicator realization; fixed pairwise summation order.
Eigen::VectorXd margin_given_indicators(const MarginCoefficients& coeffs,
                                        const std::vector<std::uint8_t>& e);

struct MarginMoments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::vector<std::uint8_t> degenerate;  // rows with zero variance
};

// mu_j = sum_i (C_{j,i} + p_i delta_{j,i});
// sigma_{jl} = sum_i p_i (1-p_i) delta_{j,i} delta_{l,i}.
// p holds one survival probability per support column.
MarginMoments margin_moments(const MarginCoefficients& coeffs,
                             const std::vector<double>& p);

struct EmpiricalMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;      // sample covariance (T-1 denominator)
  Eigen::VectorXd se_mean;  // batch-based standard errors
  Eigen::MatrixXd se_cov;
  std::uint64_t trials = 0;
};

// Monte Carlo check of the closed-form moments; test harness only.
EmpiricalMoments empirical_margin_check(const MarginCoefficients& coeffs,
                                        const std::vector<double>& p,
                                        std::uint64_t trials,
                                        std::uint64_t seed);

struct CorrelationSummary {
  Eigen::MatrixXd rho;                 // zero where undefined
  std::vector<std::uint8_t> defined;   // per-row: variance > 0
  double min_offdiag = 0.0;            // over defined pairs; NaN when none
  double mean_offdiag = 0.0;
  int defined_pairs = 0;
};

CorrelationSummary correlation_matrix(const MarginMoments& moments);

std::string moments_to_json(const MarginMoments& moments);

}  // namespace retsim
