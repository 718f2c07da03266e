#include "retsim/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace retsim::gaussian {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925287;

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// Counter-free scalar CDF for inner loops.
double phi_raw(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Wichura's AS 241 (PPND16) rational approximations; p in (0,1).
double quantile_raw(double p) {
  const double q = p - 0.5;
  double r, val;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    val = q *
          (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                67265.770927008700853) *
                   r +
               45921.953931549871457) *
                  r +
              13731.693765509461125) *
                 r +
             1971.5909503065514427) *
                r +
            133.14166789178437745) *
               r +
           3.387132872796366608) /
          (((((((r * 5226.495278852854561 + 28729.085735721942674) * r +
                39307.89580009271061) *
                   r +
               21213.794301586595867) *
                  r +
              5394.1960214247511077) *
                 r +
             687.1870074920579083) *
                r +
            42.313330701600911252) *
               r +
           1.0);
    return val;
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                0.24178072517745061177) *
                   r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) *
                   r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) *
                   r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) *
                   r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  return (q < 0.0) ? -val : val;
}

struct QuadRule {
  std::vector<double> x;  // nodes on (-1, 1)
  std::vector<double> w;  // weights summing to 2
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n.
QuadRule make_legendre(int n) {
  QuadRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    rule.x[i] = x;
    rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const QuadRule& legendre_rule(int n) {
  static const QuadRule r6 = make_legendre(6);
  static const QuadRule r10 = make_legendre(10);
  static const QuadRule r12 = make_legendre(12);
  static const QuadRule r20 = make_legendre(20);
  switch (n) {
    case 6:
      return r6;
    case 10:
      return r10;
    case 12:
      return r12;
    default:
      return r20;
  }
}

// Genz's BVND: P(X > h, Y > k) for standard bivariate normal, correlation r.
// Single-integral form after Drezner & Wesolowsky; the |r| >= 0.925 branch
// integrates the complementary density with the singular part removed.
double bvnu(double h, double k, double r) {
  if (h > 37.5 || k > 37.5) return 0.0;
  if (h < -37.5 && k < -37.5) return 1.0;
  const int ng = std::fabs(r) < 0.3 ? 6 : (std::fabs(r) < 0.75 ? 12 : 20);
  const QuadRule& rule = legendre_rule(ng);
  const double hk = h * k;
  double bvn = 0.0;
  if (std::fabs(r) < 0.925) {
    if (r != 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < ng; ++i) {
        const double sn = std::sin(asr * (rule.x[i] + 1.0) / 2.0);
        bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
      bvn = bvn * asr / (2.0 * kTwoPi);
    }
    bvn += phi_raw(-h) * phi_raw(-k);
  } else {
    double kk = k, hk2 = hk;
    if (r < 0.0) {
      kk = -kk;
      hk2 = -hk2;
    }
    if (std::fabs(r) < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - kk) * (h - kk);
      const double c = (4.0 - hk2) / 8.0;
      const double d = (12.0 - hk2) / 16.0;
      double asr = -(bs / as + hk2) / 2.0;
      if (asr > -100.0) {
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 +
               c * d * as * as / 5.0);
      }
      if (-hk2 < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk2 / 2.0) * std::sqrt(kTwoPi) * phi_raw(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < ng; ++i) {
        const double xs0 = a * (rule.x[i] + 1.0);
        const double xs = xs0 * xs0;
        const double rs = std::sqrt(1.0 - xs);
        asr = -(bs / xs + hk2) / 2.0;
        if (asr > -100.0) {
          bvn += a * rule.w[i] * std::exp(asr) *
                 (std::exp(-hk2 * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += phi_raw(-std::max(h, kk));
    } else {
      bvn = -bvn;
      if (kk > h) bvn += phi_raw(kk) - phi_raw(h);
    }
  }
  return clamp01(bvn);
}

// P(X <= x, Y <= y), robust at |rho| -> 1.
double bvn_lower(double x, double y, double rho) {
  if (rho >= 1.0 - 5e-16) return phi_raw(std::min(x, y));
  if (rho <= -1.0 + 5e-16) return std::max(0.0, phi_raw(x) + phi_raw(y) - 1.0);
  return bvnu(-x, -y, rho);
}

void check_finite(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  if (!mu.allFinite() || !sigma.allFinite())
    throw std::invalid_argument("gaussian: non-finite moment input");
}

void check_symmetric(const Eigen::MatrixXd& sigma) {
  const double scale = sigma.cwiseAbs().maxCoeff();
  const double tol = 1e-8 * scale + 1e-300;
  for (int i = 0; i < sigma.rows(); ++i)
    for (int j = i + 1; j < sigma.cols(); ++j)
      if (std::fabs(sigma(i, j) - sigma(j, i)) > tol)
        throw std::invalid_argument("gaussian: covariance not symmetric");
}

template <class F>
double gl10_panel(const F& f, double a, double b) {
  const QuadRule& rule = legendre_rule(10);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 10; ++i) s += rule.w[i] * f(c + h * rule.x[i]);
  return s * h;
}

template <class F>
double adaptive_rec(const F& f, double a, double b, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double left = gl10_panel(f, a, m);
  const double right = gl10_panel(f, m, b);
  if (depth <= 0 || std::fabs(left + right - whole) <= tol)
    return left + right;
  return adaptive_rec(f, a, m, left, tol / 2.0, depth - 1) +
         adaptive_rec(f, m, b, right, tol / 2.0, depth - 1);
}

template <class F>
double adaptive_integral(const F& f, double a, double b, double tol) {
  return adaptive_rec(f, a, b, gl10_panel(f, a, b), tol, 26);
}

std::vector<int> first_primes(int count) {
  std::vector<int> out;
  for (int c = 2; static_cast<int>(out.size()) < count; ++c) {
    bool prime = true;
    for (int d = 2; d * d <= c; ++d)
      if (c % d == 0) {
        prime = false;
        break;
      }
    if (prime) out.push_back(c);
  }
  return out;
}

// Separation-of-variables system: Z = mu + L w with w iid standard normal;
// the event {Z <= 0} becomes per-column intervals on w, each row attached to
// its last significant column.
struct SovSystem {
  Eigen::MatrixXd L;                          // ma x rank
  std::vector<double> b;                      // upper limits, b = -mu
  int ma = 0;
  int rank = 0;
  std::vector<std::vector<int>> attach;       // rows bounded at column s
  std::vector<std::vector<int>> update_rows;  // rows needing y_s accumulated
  bool zero_prob = false;                     // a vacuous row was violated
};

// Pivoted Cholesky that keeps the caller's row order, deferring rows whose
// residual diagonal falls below 1e-12*trace (they become dependent rows).
// Returns false when a residual goes negative beyond tolerance, signalling
// the eigendecomposition fallback.
bool threshold_cholesky(const Eigen::MatrixXd& S, Eigen::MatrixXd* L,
                        std::vector<int>* pivots) {
  const int ma = static_cast<int>(S.rows());
  const double trace = std::max(S.trace(), 1e-300);
  const double tol_dep = 1e-12 * trace;
  const double tol_neg = 1e-8 * trace;
  L->setZero(ma, ma);
  pivots->clear();
  std::vector<char> done(ma, 0);
  Eigen::VectorXd resid = S.diagonal();
  for (;;) {
    int q = -1;
    for (int i = 0; i < ma; ++i)
      if (!done[i] && resid[i] > tol_dep) {
        q = i;
        break;
      }
    if (q < 0) break;
    const int s = static_cast<int>(pivots->size());
    const double d = std::sqrt(resid[q]);
    (*L)(q, s) = d;
    for (int i = 0; i < ma; ++i) {
      if (i == q || done[i]) continue;
      double v = S(i, q);
      for (int t = 0; t < s; ++t) v -= (*L)(i, t) * (*L)(q, t);
      v /= d;
      (*L)(i, s) = v;
      resid[i] -= v * v;
      if (resid[i] < -tol_neg) return false;
    }
    done[q] = 1;
    pivots->push_back(q);
  }
  return true;
}

// Factor S (rows already in processing order) into L with rows kept in that
// order; b holds the limits. Dependent and vacuous rows are classified here.
SovSystem build_sov(const Eigen::MatrixXd& S, const Eigen::VectorXd& mu) {
  SovSystem sys;
  const int ma = static_cast<int>(S.rows());
  sys.ma = ma;
  const double trace = std::max(S.trace(), 1e-300);

  Eigen::MatrixXd L;
  std::vector<int> pivots;
  if (threshold_cholesky(S, &L, &pivots)) {
    sys.rank = static_cast<int>(pivots.size());
    sys.L = L.leftCols(sys.rank);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("gaussian: eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-8 * trace)
      throw std::invalid_argument("gaussian: covariance not PSD");
    std::vector<int> keep;
    for (int i = 0; i < ma; ++i)
      if (lam[i] >= 1e-12 * trace) keep.push_back(i);
    const int r = static_cast<int>(keep.size());
    Eigen::MatrixXd A(ma, r);
    for (int j = 0; j < r; ++j)
      A.col(j) = es.eigenvectors().col(keep[j]) * std::sqrt(lam[keep[j]]);
    // Row-order-preserving lower-trapezoidal form via QR of A^T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A.transpose());
    Eigen::MatrixXd R = qr.matrixQR().topRows(r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < i && j < R.cols(); ++j) R(i, j) = 0.0;
    sys.L = R.transpose();
    sys.rank = r;
    for (int s = 0; s < r && s < ma; ++s)
      if (sys.L(s, s) < 0.0) sys.L.col(s) *= -1.0;
  }

  sys.b.resize(ma);
  for (int i = 0; i < ma; ++i) sys.b[i] = -mu[i];

  const double eps_attach = 1e-12 * std::sqrt(S.diagonal().maxCoeff() + 1e-300);
  sys.attach.assign(std::max(sys.rank, 1), {});
  std::vector<int> last_col(ma, -1);
  for (int i = 0; i < ma; ++i) {
    for (int t = sys.rank - 1; t >= 0; --t)
      if (std::fabs(sys.L(i, t)) > eps_attach) {
        last_col[i] = t;
        break;
      }
    if (last_col[i] < 0) {
      // Numerically zero row: the constraint is deterministic.
      if (sys.b[i] < 0.0) sys.zero_prob = true;
      continue;
    }
    sys.attach[last_col[i]].push_back(i);
  }
  sys.update_rows.assign(std::max(sys.rank, 1), {});
  for (int i = 0; i < ma; ++i)
    for (int s = 0; s < last_col[i]; ++s) sys.update_rows[s].push_back(i);
  return sys;
}

double evaluate_sov(const SovSystem& sys, const double* w,
                    std::vector<double>& acc) {
  acc.assign(sys.ma, 0.0);
  double prod = 1.0;
  for (int s = 0; s < sys.rank; ++s) {
    double lo = -kInf, hi = kInf;
    for (int i : sys.attach[s]) {
      const double c = sys.L(i, s);
      const double t = (sys.b[i] - acc[i]) / c;
      if (c > 0.0) {
        hi = std::min(hi, t);
      } else {
        lo = std::max(lo, t);
      }
    }
    const double flo = lo <= -37.0 ? 0.0 : (lo >= 37.0 ? 1.0 : phi_raw(lo));
    const double fhi = hi >= 37.0 ? 1.0 : (hi <= -37.0 ? 0.0 : phi_raw(hi));
    const double f = fhi - flo;
    if (!(f > 0.0)) return 0.0;
    prod *= f;
    if (s + 1 < sys.rank) {
      double u = flo + w[s] * f;
      u = std::min(std::max(u, 1e-300), 1.0 - 1e-16);
      const double y = quantile_raw(u);
      for (int i : sys.update_rows[s]) acc[i] += sys.L(i, s) * y;
    }
  }
  return prod;
}

struct RandomizationState {
  std::vector<double> x;  // running Kronecker point, one entry per dimension
  double sum = 0.0;
  std::uint64_t n = 0;
};

OrthantEstimate closed_estimate(double value) {
  OrthantEstimate est;
  est.value = clamp01(value);
  est.method = OrthantMethod::kClosedForm;
  est.accuracy_bound = 1e-12;
  est.samples = 0;
  return est;
}

// Randomized rank-1 Kronecker (Richtmyer) sequence with the baker transform,
// averaged over independent random shifts.
OrthantEstimate mvn_qmc(const Eigen::VectorXd& mu, const Eigen::MatrixXd& S,
                        const QmcConfig& cfg) {
  const int ma = static_cast<int>(mu.size());

  // Order rows by |mu|/sigma descending; ties keep the original order.
  std::vector<int> order(ma);
  for (int i = 0; i < ma; ++i) order[i] = i;
  std::vector<double> ratio(ma);
  for (int i = 0; i < ma; ++i)
    ratio[i] = std::fabs(mu[i]) / std::sqrt(std::max(S(i, i), 1e-300));
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ratio[a] > ratio[b]; });
  Eigen::MatrixXd Sh(ma, ma);
  Eigen::VectorXd muh(ma);
  for (int i = 0; i < ma; ++i) {
    muh[i] = mu[order[i]];
    for (int j = 0; j < ma; ++j) Sh(i, j) = S(order[i], order[j]);
  }

  const SovSystem sys = build_sov(Sh, muh);
  if (sys.zero_prob) return closed_estimate(0.0);
  if (sys.rank == 0) return closed_estimate(1.0);

  std::vector<double> acc;
  const int dims = sys.rank - 1;
  if (dims == 0) {
    // Single sampled variable: the product of interval masses is exact.
    return closed_estimate(evaluate_sov(sys, nullptr, acc));
  }

  const std::vector<int> primes = first_primes(dims);
  std::vector<double> alpha(dims);
  for (int j = 0; j < dims; ++j) {
    const double s = std::sqrt(static_cast<double>(primes[j]));
    alpha[j] = s - std::floor(s);
  }

  const int nr = std::max(2, cfg.randomizations);
  std::vector<RandomizationState> states(nr);
  for (int l = 0; l < nr; ++l) {
    CounterRng shift_rng(cfg.seed, combine_all({streams::kQmcShift,
                                                static_cast<std::uint64_t>(l)}));
    states[l].x.resize(dims);
    for (int j = 0; j < dims; ++j) states[l].x[j] = shift_rng.uniform();
  }

  const auto run_batch = [&](RandomizationState& st, std::uint64_t count) {
    std::vector<double> w(dims);
    std::vector<double> local_acc;
    for (std::uint64_t k = 0; k < count; ++k) {
      for (int j = 0; j < dims; ++j) {
        st.x[j] += alpha[j];
        if (st.x[j] >= 1.0) st.x[j] -= 1.0;
        w[j] = std::fabs(2.0 * st.x[j] - 1.0);
      }
      st.sum += evaluate_sov(sys, w.data(), local_acc);
      ++st.n;
    }
  };

  const std::uint64_t max_total = std::max<std::uint64_t>(
      cfg.max_samples, static_cast<std::uint64_t>(nr));
  std::uint64_t total = 0;
  std::uint64_t batch = 128;
  double value = 0.0, se = kInf;
  std::vector<double> means(nr);
  const int threads = std::max(1, cfg.threads);
  for (;;) {
    if (threads == 1 || nr == 1) {
      for (auto& st : states) run_batch(st, batch);
    } else {
      const int nt = std::min(threads, nr);
      std::vector<std::thread> pool;
      pool.reserve(nt);
      for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
          for (int l = t; l < nr; l += nt) run_batch(states[l], batch);
        });
      }
      for (auto& th : pool) th.join();
    }
    total += batch * nr;
    double m = 0.0;
    for (int l = 0; l < nr; ++l) {
      means[l] = states[l].sum / static_cast<double>(states[l].n);
      m += means[l];
    }
    value = m / nr;
    double var = 0.0;
    for (int l = 0; l < nr; ++l)
      var += (means[l] - value) * (means[l] - value);
    se = std::sqrt(var / (nr - 1) / nr);
    if (se <= cfg.target_se || total >= max_total) break;
    const std::uint64_t room = (max_total - total + nr - 1) / nr;
    batch = std::max<std::uint64_t>(1, std::min(batch * 2, room));
  }

  OrthantEstimate est;
  est.value = clamp01(value);
  est.standard_error = se;
  est.samples = total;
  est.method = OrthantMethod::kRandomizedQmc;
  est.converged = se <= cfg.target_se;
  est.accuracy_bound = 0.0;
  return est;
}

}  // namespace

CdfCallCounts& cdf_call_counts() {
  thread_local CdfCallCounts counts;
  return counts;
}

const char* method_name(OrthantMethod m) {
  switch (m) {
    case OrthantMethod::kClosedForm:
      return "closed-form";
    case OrthantMethod::kQuadrature:
      return "quadrature";
    default:
      return "randomized-qmc";
  }
}

double std_normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw std::invalid_argument("std_normal_cdf: NaN input");
  ++cdf_call_counts().uni;
  return phi_raw(x);
}

double std_normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw std::invalid_argument("std_normal_quantile: p outside [0,1]");
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;
  return quantile_raw(p);
}

double sample_std_normal(CounterRng& rng) {
  return quantile_raw(rng.uniform_pos());
}

double bivariate_cdf_at_zero(const Eigen::Vector2d& mu,
                             const Eigen::Matrix2d& sigma) {
  ++cdf_call_counts().bi;
  check_finite(mu, sigma);
  check_symmetric(sigma);
  const double scale = sigma.cwiseAbs().maxCoeff() + 1e-300;
  double s11 = sigma(0, 0), s22 = sigma(1, 1);
  if (s11 < -1e-10 * scale || s22 < -1e-10 * scale)
    throw std::invalid_argument("bivariate_cdf_at_zero: negative variance");
  s11 = std::max(s11, 0.0);
  s22 = std::max(s22, 0.0);
  if (s11 == 0.0 && s22 == 0.0)
    return (mu[0] <= 0.0 && mu[1] <= 0.0) ? 1.0 : 0.0;
  if (s11 == 0.0)
    return mu[0] <= 0.0 ? phi_raw(-mu[1] / std::sqrt(s22)) : 0.0;
  if (s22 == 0.0)
    return mu[1] <= 0.0 ? phi_raw(-mu[0] / std::sqrt(s11)) : 0.0;
  const double sd1 = std::sqrt(s11), sd2 = std::sqrt(s22);
  const double cov = 0.5 * (sigma(0, 1) + sigma(1, 0));
  double rho = cov / (sd1 * sd2);
  if (rho > 1.0) {
    if (rho > 1.0 + 1e-8)
      throw std::invalid_argument("bivariate_cdf_at_zero: covariance not PSD");
    rho = 1.0;
  } else if (rho < -1.0) {
    if (rho < -1.0 - 1e-8)
      throw std::invalid_argument("bivariate_cdf_at_zero: covariance not PSD");
    rho = -1.0;
  }
  return clamp01(bvn_lower(-mu[0] / sd1, -mu[1] / sd2, rho));
}

double trivariate_cdf_at_zero(const Eigen::Vector3d& mu,
                              const Eigen::Matrix3d& sigma) {
  ++cdf_call_counts().tri;
  check_finite(mu, sigma);
  check_symmetric(sigma);
  const double scale = sigma.cwiseAbs().maxCoeff() + 1e-300;
  Eigen::Matrix3d S = 0.5 * (sigma + sigma.transpose());
  for (int i = 0; i < 3; ++i) {
    if (S(i, i) < -1e-10 * scale)
      throw std::invalid_argument("trivariate_cdf_at_zero: negative variance");
    S(i, i) = std::max(S(i, i), 0.0);
  }

  // Deterministic coordinates factor out as indicators.
  std::vector<int> live;
  for (int i = 0; i < 3; ++i) {
    if (S(i, i) == 0.0) {
      if (mu[i] > 0.0) return 0.0;
    } else {
      live.push_back(i);
    }
  }
  if (live.size() < 3) {
    if (live.empty()) return 1.0;
    if (live.size() == 1)
      return phi_raw(-mu[live[0]] / std::sqrt(S(live[0], live[0])));
    Eigen::Vector2d m2(mu[live[0]], mu[live[1]]);
    Eigen::Matrix2d s2;
    s2 << S(live[0], live[0]), S(live[0], live[1]), S(live[1], live[0]),
        S(live[1], live[1]);
    return bivariate_cdf_at_zero(m2, s2);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(S);
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(S.trace(), 1e-300))
    throw std::invalid_argument("trivariate_cdf_at_zero: covariance not PSD");

  double sd[3], b[3];
  for (int i = 0; i < 3; ++i) {
    sd[i] = std::sqrt(S(i, i));
    b[i] = -mu[i] / sd[i];
  }
  double rho[3][3];
  for (int i = 0; i < 3; ++i) {
    rho[i][i] = 1.0;
    for (int j = i + 1; j < 3; ++j) {
      double r = S(i, j) / (sd[i] * sd[j]);
      r = std::min(1.0, std::max(-1.0, r));
      rho[i][j] = rho[j][i] = r;
    }
  }

  // Perfectly dependent pairs collapse to a bivariate problem.
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const int c = 3 - i - j;
      if (rho[i][j] >= 1.0 - 5e-16) {
        const double bmin = std::min(b[i], b[j]);
        Eigen::Vector2d m2(-bmin, -b[c]);
        Eigen::Matrix2d s2;
        s2 << 1.0, rho[i][c], rho[i][c], 1.0;
        return bivariate_cdf_at_zero(m2, s2);
      }
      if (rho[i][j] <= -1.0 + 5e-16) {
        // X_j = -X_i: interval constraint -b_j <= X_i <= b_i.
        if (-b[j] > b[i]) return 0.0;
        const double upper = bvn_lower(b[i], b[c], rho[i][c]);
        const double lower = bvn_lower(-b[j], b[c], rho[i][c]);
        return clamp01(upper - lower);
      }
    }
  }

  // Condition on the variable with the smallest worst-case correlation to
  // the other two, then integrate phi(t) * Phi2(..) over its range.
  int c = 0;
  double best = kInf;
  for (int i = 0; i < 3; ++i) {
    double worst = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) worst = std::max(worst, std::fabs(rho[i][j]));
    if (worst < best) {
      best = worst;
      c = i;
    }
  }
  const int a1 = c == 0 ? 1 : 0;
  const int a2 = c == 2 ? 1 : 2;
  const double r1 = rho[c][a1], r2 = rho[c][a2];
  const double s1 = std::sqrt(std::max(1.0 - r1 * r1, 1e-300));
  const double s2 = std::sqrt(std::max(1.0 - r2 * r2, 1e-300));
  double rc = (rho[a1][a2] - r1 * r2) / (s1 * s2);
  rc = std::min(1.0, std::max(-1.0, rc));

  const double hi = std::min(b[c], 8.5);
  if (hi <= -8.5) return 0.0;
  const auto f = [&](double t) {
    return std_normal_pdf(t) *
           bvn_lower((b[a1] - r1 * t) / s1, (b[a2] - r2 * t) / s2, rc);
  };
  return clamp01(adaptive_integral(f, -8.5, hi, 2e-7));
}

OrthantEstimate mvn_cdf_at_zero(const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sigma,
                                const QmcConfig& cfg) {
  const int m = static_cast<int>(mu.size());
  if (m < 1 || sigma.rows() != m || sigma.cols() != m)
    throw std::invalid_argument("mvn_cdf_at_zero: dimension mismatch");
  check_finite(mu, sigma);
  check_symmetric(sigma);
  Eigen::MatrixXd S = 0.5 * (sigma + sigma.transpose());
  const double scale = S.cwiseAbs().maxCoeff() + 1e-300;
  for (int i = 0; i < m; ++i) {
    if (S(i, i) < -1e-10 * scale)
      throw std::invalid_argument("mvn_cdf_at_zero: negative variance");
    S(i, i) = std::max(S(i, i), 0.0);
  }

  // Zero-variance coordinates are deterministic indicators.
  const double max_diag = S.diagonal().maxCoeff();
  const double tol_var = 1e-14 * max_diag;
  std::vector<int> live;
  for (int i = 0; i < m; ++i) {
    if (S(i, i) <= tol_var) {
      if (mu[i] > 0.0) return closed_estimate(0.0);
    } else {
      live.push_back(i);
    }
  }
  const int mr = static_cast<int>(live.size());
  if (mr == 0) return closed_estimate(1.0);

  Eigen::VectorXd mur(mr);
  Eigen::MatrixXd Sr(mr, mr);
  for (int i = 0; i < mr; ++i) {
    mur[i] = mu[live[i]];
    for (int j = 0; j < mr; ++j) Sr(i, j) = S(live[i], live[j]);
  }

  if (mr == 1) {
    OrthantEstimate est =
        closed_estimate(phi_raw(-mur[0] / std::sqrt(Sr(0, 0))));
    return est;
  }
  if (mr == 2) {
    OrthantEstimate est;
    est.value = bivariate_cdf_at_zero(Eigen::Vector2d(mur), Eigen::Matrix2d(Sr));
    est.method = OrthantMethod::kQuadrature;
    est.accuracy_bound = 1e-6;
    return est;
  }
  if (mr == 3) {
    OrthantEstimate est;
    est.value =
        trivariate_cdf_at_zero(Eigen::Vector3d(mur), Eigen::Matrix3d(Sr));
    est.method = OrthantMethod::kQuadrature;
    est.accuracy_bound = 1e-5;
    return est;
  }
  return mvn_qmc(mur, Sr, cfg);
}

}  // namespace retsim::gaussian
