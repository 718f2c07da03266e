#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "retsim/rng.hpp"

namespace retsim::gaussian {

// Per-thread tallies of CDF evaluations, used to assert cost scaling of the
// bound computations (see error-bounds tests). Counts calls to the public
// entry points, not internal node evaluations.
struct CdfCallCounts {
  std::uint64_t uni = 0;
  std::uint64_t bi = 0;
  std::uint64_t tri = 0;
  void reset() { uni = bi = tri = 0; }
};
CdfCallCounts& cdf_call_counts();

double std_normal_pdf(double x);

// Absolute error <= 1e-12 over the full range; NaN input -> invalid_argument.
double std_normal_cdf(double x);

// Inverse of std_normal_cdf. p=0 / p=1 map to -inf / +inf; p outside [0,1]
// or NaN -> invalid_argument. Absolute error ~1e-15 in the deviate.
double std_normal_quantile(double p);

// One standard normal draw from a counter-based stream.
double sample_std_normal(CounterRng& rng);

enum class OrthantMethod { kClosedForm, kQuadrature, kRandomizedQmc };
const char* method_name(OrthantMethod m);

struct OrthantEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // nonzero only for the randomized estimator
  std::uint64_t samples = 0;
  OrthantMethod method = OrthantMethod::kClosedForm;
  bool converged = true;  // standard-error target met within the budget
  // Deterministic accuracy of the non-randomized paths (closed form 1e-12,
  // bivariate 1e-6, trivariate 1e-5); 0 for the randomized estimator.
  double accuracy_bound = 0.0;

  // One number usable as "how wrong can this be": the standard error where
  // sampling dominates, the documented accuracy bound otherwise.
  double uncertainty() const {
    return standard_error > accuracy_bound ? standard_error : accuracy_bound;
  }
};

struct QmcConfig {
  double target_se = 1e-4;
  std::uint64_t max_samples = std::uint64_t{1} << 20;
  int randomizations = 8;
  std::uint64_t seed = 0;
  int threads = 1;
};

// P(Z <= 0) for Z ~ N(mu, Sigma), 2x2. Degenerate (rank < 2) inputs reduce
// to univariate or indicator terms; Sigma must be symmetric PSD within
// tolerance or invalid_argument is thrown. Absolute error <= 1e-6.
double bivariate_cdf_at_zero(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma);

// P(Z <= 0) for Z ~ N(mu, Sigma), 3x3, by conditioning quadrature over one
// variable with bivariate inner calls. Absolute error <= 1e-5.
double trivariate_cdf_at_zero(const Eigen::Vector3d& mu, const Eigen::Matrix3d& sigma);

// P(Z <= 0) for Z ~ N(mu, Sigma), any m >= 1. Dimensions 1..3 use the exact
// routines above; higher dimensions use a separation-of-variables estimator
// over a randomized rank-1 lattice sequence, with variables ordered by
// |mu_j|/sigma_j descending and rank-deficient Sigma handled by a
// diagonal-threshold pivoted Cholesky (eigendecomposition fallback with
// truncation of directions below 1e-12*trace). Deterministic under a fixed
// cfg.seed, independent of cfg.threads.
OrthantEstimate mvn_cdf_at_zero(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sigma,
                                const QmcConfig& cfg = {});

}  // namespace retsim::gaussian
