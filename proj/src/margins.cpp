#include "retsim/margins.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "retsim/channel.hpp"
#include "retsim/numeric.hpp"

namespace retsim {

MarginCoefficients margin_coefficients(const std::vector<double>& v_q,
                                       const DocumentCorpus& corpus, int k,
                                       const std::vector<int>& support) {
  if (k < 0 || k >= corpus.n)
    throw std::invalid_argument("margin_coefficients: reference index invalid");
  if (support.empty())
    throw std::invalid_argument("margin_coefficients: empty support");
  MarginCoefficients out;
  out.k = k;
  out.support = support;
  for (int j = 0; j < corpus.n; ++j)
    if (j != k) out.doc_ids.push_back(j);
  const int m = out.m();
  const int K = static_cast<int>(support.size());
  out.C.resize(m, K);
  out.delta.resize(m, K);
  for (int row = 0; row < m; ++row) {
    const int j = out.doc_ids[row];
    for (int col = 0; col < K; ++col) {
      const int i = support[col];
      const double z2 = corpus.zeta[i] * corpus.zeta[i];
      const double dj = corpus.v[j][i], dk = corpus.v[k][i];
      out.C(row, col) = z2 * (dj * dj - dk * dk);
      out.delta(row, col) = 2.0 * z2 * v_q[i] * (dk - dj);
    }
  }
  return out;
}

Eigen::VectorXd margin_given_indicators(const MarginCoefficients& coeffs,
                                        const std::vector<std::uint8_t>& e) {
  const int m = coeffs.m();
  const int K = static_cast<int>(coeffs.support.size());
  if (static_cast<int>(e.size()) != K)
    throw std::invalid_argument("margin_given_indicators: length mismatch");
  Eigen::VectorXd out(m);
  std::vector<double> terms(K);
  for (int row = 0; row < m; ++row) {
    for (int col = 0; col < K; ++col)
      terms[col] =
          coeffs.C(row, col) + (e[col] ? coeffs.delta(row, col) : 0.0);
    out[row] = pairwise_sum(terms.data(), terms.size());
  }
  return out;
}

MarginMoments margin_moments(const MarginCoefficients& coeffs,
                             const std::vector<double>& p) {
  const int m = coeffs.m();
  const int K = static_cast<int>(coeffs.support.size());
  if (static_cast<int>(p.size()) != K)
    throw std::invalid_argument("margin_moments: p not aligned with support");
  MarginMoments out;
  out.mu.resize(m);
  out.sigma.resize(m, m);
  std::vector<double> w(K), terms(K);
  for (int col = 0; col < K; ++col) {
    if (!(p[col] >= 0.0 && p[col] <= 1.0))
      throw std::invalid_argument("margin_moments: probability outside [0,1]");
    w[col] = p[col] * (1.0 - p[col]);
  }
  for (int row = 0; row < m; ++row) {
    for (int col = 0; col < K; ++col)
      terms[col] = coeffs.C(row, col) + p[col] * coeffs.delta(row, col);
    out.mu[row] = pairwise_sum(terms.data(), terms.size());
  }
  for (int row = 0; row < m; ++row) {
    for (int other = row; other < m; ++other) {
      for (int col = 0; col < K; ++col)
        terms[col] = w[col] * coeffs.delta(row, col) * coeffs.delta(other, col);
      const double s = pairwise_sum(terms.data(), terms.size());
      out.sigma(row, other) = s;
      out.sigma(other, row) = s;
    }
  }
  out.degenerate.resize(m);
  for (int row = 0; row < m; ++row)
    out.degenerate[row] = out.sigma(row, row) <= 0.0 ? 1 : 0;
  return out;
}

EmpiricalMoments empirical_margin_check(const MarginCoefficients& coeffs,
                                        const std::vector<double>& p,
                                        std::uint64_t trials,
                                        std::uint64_t seed) {
  if (trials < 1)
    throw std::invalid_argument("empirical_margin_check: trials must be >= 1");
  const int m = coeffs.m();
  const int nb = trials >= 40 ? 20 : 1;
  const std::uint64_t per_batch = trials / nb;

  Eigen::VectorXd total_sum = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd total_sq = Eigen::MatrixXd::Zero(m, m);
  std::vector<Eigen::VectorXd> batch_mean;
  std::vector<Eigen::MatrixXd> batch_cov;

  std::uint64_t done = 0;
  for (int b = 0; b < nb; ++b) {
    const std::uint64_t count = (b == nb - 1) ? trials - done : per_batch;
    Eigen::VectorXd bsum = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd bsq = Eigen::MatrixXd::Zero(m, m);
    for (std::uint64_t t = 0; t < count; ++t) {
      CounterRng rng(seed, combine_all({label("margins-mc"), done + t}));
      const std::vector<std::uint8_t> e = sample_indicators(p, rng);
      const Eigen::VectorXd d = margin_given_indicators(coeffs, e);
      bsum += d;
      bsq += d * d.transpose();
    }
    done += count;
    total_sum += bsum;
    total_sq += bsq;
    if (count >= 2) {
      const Eigen::VectorXd bm = bsum / static_cast<double>(count);
      batch_mean.push_back(bm);
      batch_cov.push_back((bsq - count * bm * bm.transpose()) /
                          static_cast<double>(count - 1));
    }
  }

  EmpiricalMoments out;
  out.trials = trials;
  const double T = static_cast<double>(trials);
  out.mean = total_sum / T;
  if (trials >= 2) {
    out.cov = (total_sq - T * out.mean * out.mean.transpose()) / (T - 1.0);
  } else {
    out.cov = Eigen::MatrixXd::Zero(m, m);
  }

  const double inf = std::numeric_limits<double>::infinity();
  out.se_mean = Eigen::VectorXd::Constant(m, inf);
  out.se_cov = Eigen::MatrixXd::Constant(m, m, inf);
  const int k = static_cast<int>(batch_mean.size());
  if (k >= 2) {
    Eigen::VectorXd mm = Eigen::VectorXd::Zero(m);
    for (const auto& bm : batch_mean) mm += bm;
    mm /= k;
    Eigen::VectorXd vv = Eigen::VectorXd::Zero(m);
    for (const auto& bm : batch_mean)
      vv += (bm - mm).cwiseProduct(bm - mm);
    out.se_mean = (vv / (k - 1) / k).cwiseSqrt();

    Eigen::MatrixXd mc = Eigen::MatrixXd::Zero(m, m);
    for (const auto& bc : batch_cov) mc += bc;
    mc /= k;
    Eigen::MatrixXd vc = Eigen::MatrixXd::Zero(m, m);
    for (const auto& bc : batch_cov)
      vc += (bc - mc).cwiseProduct(bc - mc);
    out.se_cov = (vc / (k - 1) / k).cwiseSqrt();
  }
  return out;
}

CorrelationSummary correlation_matrix(const MarginMoments& moments) {
  const int m = static_cast<int>(moments.mu.size());
  CorrelationSummary out;
  out.rho = Eigen::MatrixXd::Zero(m, m);
  out.defined.resize(m);
  for (int j = 0; j < m; ++j) {
    out.defined[j] = moments.sigma(j, j) > 0.0 ? 1 : 0;
    out.rho(j, j) = out.defined[j] ? 1.0 : 0.0;
  }
  double mn = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int pairs = 0;
  for (int j = 0; j < m; ++j) {
    for (int l = j + 1; l < m; ++l) {
      if (!out.defined[j] || !out.defined[l]) continue;
      double r = moments.sigma(j, l) /
                 std::sqrt(moments.sigma(j, j) * moments.sigma(l, l));
      r = std::min(1.0, std::max(-1.0, r));
      out.rho(j, l) = out.rho(l, j) = r;
      mn = std::min(mn, r);
      sum += r;
      ++pairs;
    }
  }
  out.defined_pairs = pairs;
  if (pairs > 0) {
    out.min_offdiag = mn;
    out.mean_offdiag = sum / pairs;
  } else {
    out.min_offdiag = std::numeric_limits<double>::quiet_NaN();
    out.mean_offdiag = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string moments_to_json(const MarginMoments& moments) {
  nlohmann::json j;
  j["mu"] = std::vector<double>(moments.mu.data(),
                                moments.mu.data() + moments.mu.size());
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < moments.sigma.rows(); ++r) {
    std::vector<double> row(moments.sigma.cols());
    for (int c = 0; c < moments.sigma.cols(); ++c) row[c] = moments.sigma(r, c);
    rows.push_back(row);
  }
  j["sigma"] = rows;
  j["degenerate"] = std::vector<int>(moments.degenerate.begin(),
                                     moments.degenerate.end());
  return j.dump(2);
}

}  // namespace retsim
