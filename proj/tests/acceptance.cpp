// End-to-end acceptance checks. Each check prints one [PASS]/[FAIL] line;
// the exit status is the number of failures. Statistical tolerances are
// pinned here on purpose — do not loosen them to make a run green.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "retsim/bounds.hpp"
#include "retsim/coding.hpp"
#include "retsim/corpus.hpp"
#include "retsim/channel.hpp"
#include "retsim/harness.hpp"
#include "retsim/margins.hpp"
#include "retsim/retrieval.hpp"
#include "retsim/rng.hpp"

using namespace retsim;

namespace {

int g_failures = 0;

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

void report(int id, const char* name, bool pass, const std::string& detail,
            double elapsed) {
  std::printf("[%s] %2d %-38s %7.1fs  %s\n", pass ? "PASS" : "FAIL", id, name,
              elapsed, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

gaussian::QmcConfig fast_qmc() {
  gaussian::QmcConfig qc;
  qc.target_se = 1e-3;
  qc.max_samples = 1 << 16;
  qc.threads = 4;
  return qc;
}

// --- shared random-instance builders --------------------------------------

MarginMoments random_moments(CounterRng& rng, int m) {
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = 2.0 * rng.uniform() - 1.0;
  Eigen::MatrixXd s =
      a * a.transpose() + 0.25 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd d = s.diagonal().cwiseSqrt();
  MarginMoments mm;
  mm.mu.resize(m);
  mm.sigma.resize(m, m);
  mm.degenerate.assign(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd scale(m);
  for (int i = 0; i < m; ++i) {
    mm.mu[i] = -0.5 + 2.0 * rng.uniform();
    scale[i] = 0.5 + rng.uniform();
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      mm.sigma(i, j) = s(i, j) / (d[i] * d[j]) * scale[i] * scale[j];
  return mm;
}

struct SmallInstance {
  std::vector<double> v_q;
  DocumentCorpus corpus;
  std::vector<int> support;
  std::vector<double> p;
};

SmallInstance random_small_instance(CounterRng& rng) {
  SmallInstance inst;
  const int n = 2 + static_cast<int>(rng.uniform_index(4));  // 2..5
  const int k = 1 + static_cast<int>(rng.uniform_index(8));  // 1..8
  inst.corpus.n = n;
  inst.corpus.L_doc = 1;
  inst.corpus.v.assign(n, std::vector<double>(k));
  for (auto& row : inst.corpus.v)
    for (double& x : row) x = rng.uniform();
  inst.corpus.zeta.resize(k);
  for (double& z : inst.corpus.zeta) z = 0.2 + 1.8 * rng.uniform();
  inst.corpus.presence.assign(k, 0);
  inst.v_q.resize(k);
  for (double& x : inst.v_q) x = rng.uniform();
  inst.support.resize(k);
  for (int i = 0; i < k; ++i) inst.support[i] = i;
  inst.p.resize(k);
  for (double& x : inst.p) x = 0.05 + 0.9 * rng.uniform();
  return inst;
}

// --- criteria -------------------------------------------------------------

void c1_epsilon_endpoints() {
  const double t0 = now_s();
  bool pass = true;
  std::string detail;
  double worst_cell = 0.0;
  for (const int n : {10, 100}) {
    ExperimentConfig base;
    base.n = n;
    const Workspace ws = prepare_workspace(base);
    for (const int L_q : {20, 100}) {
      for (const double R : {1.0, 0.5}) {
        ExperimentConfig cfg = base;
        cfg.L_q = L_q;
        cfg.R = R;
        cfg.trials = 2000;
        const double c0 = now_s();
        const ErrorEstimate lo = estimate_error(cfg, ws, 0.0);
        const ErrorEstimate hi = estimate_error(cfg, ws, 1.0);
        worst_cell = std::max(worst_cell, now_s() - c0);
        if (lo.p_hat != 0.0 || hi.p_hat != 1.0) {
          pass = false;
          detail += fmt("n=%d L_q=%d R=%g: pe(0)=%g pe(1)=%g  ", n, L_q, R,
                        lo.p_hat, hi.p_hat);
        }
      }
    }
  }
  if (worst_cell >= 60.0) {
    pass = false;
    detail += fmt("slowest cell %.1fs (limit 60s)", worst_cell);
  }
  if (detail.empty())
    detail = fmt("16 endpoint estimates exact; slowest cell %.1fs",
                 worst_cell);
  report(1, "epsilon endpoints exact", pass, detail, now_s() - t0);
}

void c2_analytic_tracks_simulation() {
  const double t0 = now_s();
  ExperimentConfig cfg;  // n=10, L_q=100, R=1
  cfg.trials = 5000;
  cfg.Q = 200;
  cfg.qmc = fast_qmc();
  const Workspace ws = prepare_workspace(cfg);
  bool pass = true;
  std::string detail;
  for (const double eps : {0.3, 0.5, 0.7, 0.9}) {
    const ErrorEstimate mc = estimate_error(cfg, ws, eps);
    const AveragedBounds ab = averaged_bounds(cfg, ws, eps, cfg.Q);
    const double gap = std::abs(mc.p_hat - ab.pe_mvn);
    if (gap > 0.05) pass = false;
    detail += fmt("eps=%.1f gap=%.4f  ", eps, gap);
  }
  const double elapsed = now_s() - t0;
  if (elapsed >= 600.0) {
    pass = false;
    detail += "(over 600s budget)";
  }
  report(2, "analytic curve tracks simulation", pass, detail + "(limit 0.05)",
         elapsed);
}

void c3_bound_ordering() {
  const double t0 = now_s();
  CounterRng rng(7, label("acceptance-ordering"));
  int violations = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 1 + static_cast<int>(rng.uniform_index(20));
    const MarginMoments mm = random_moments(rng, m);
    const BoundReport r = full_report(mm, fast_qmc());
    const double slack = 3.0 * r.pe.uncertainty();
    const double pe = r.pe.value;
    if (pe > r.b1 + slack || pe > r.b3 + slack ||
        (r.sidak_valid && pe > r.sidak + slack)) {
      ++violations;
      worst = std::max({worst, pe - r.b1, pe - r.b3,
                        r.sidak_valid ? pe - r.sidak : 0.0});
    }
  }
  report(3, "union bounds dominate exact value", violations == 0,
         violations ? fmt("%d/200 violations, worst excess %.3g", violations,
                          worst)
                    : "200 instances (m<=20), zero violations",
         now_s() - t0);
}

void c4_inclusion_exclusion_exact() {
  const double t0 = now_s();
  MarginMoments m2;
  m2.mu = Eigen::VectorXd::Zero(2);
  m2.sigma = Eigen::MatrixXd::Identity(2, 2);
  m2.degenerate.assign(2, 0);
  MarginMoments m3;
  m3.mu = Eigen::VectorXd::Zero(3);
  m3.sigma = Eigen::MatrixXd::Identity(3, 3);
  m3.degenerate.assign(3, 0);
  const double b2 = bonferroni_third(m2);
  const double b3 = bonferroni_third(m3);
  const bool pass = std::abs(b2 - 0.75) <= 1e-4 && std::abs(b3 - 0.875) <= 1e-4;
  report(4, "inclusion-exclusion exact at small m", pass,
         fmt("m=2: %.6f (want 0.75)  m=3: %.6f (want 0.875)", b2, b3),
         now_s() - t0);
}

void c5_orthant_oracles() {
  const double t0 = now_s();
  Eigen::Matrix2d s2;
  s2 << 1.0, 0.5, 0.5, 1.0;
  const double biv = gaussian::bivariate_cdf_at_zero(
      Eigen::Vector2d::Zero(), s2);
  Eigen::Matrix3d s3;
  s3 << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
  const double tri = gaussian::trivariate_cdf_at_zero(
      Eigen::Vector3d::Zero(), s3);
  const gaussian::OrthantEstimate five = gaussian::mvn_cdf_at_zero(
      Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5));
  const double e_biv = std::abs(biv - 1.0 / 3.0);
  const double e_tri = std::abs(tri - 0.25);
  const double e_five = std::abs(five.value - 1.0 / 32.0);
  const double tol_five = 3.0 * std::max(five.standard_error, 1e-12);
  const bool pass = e_biv <= 1e-6 && e_tri <= 1e-5 && e_five <= tol_five;
  report(5, "closed-form orthant oracles", pass,
         fmt("|biv-1/3|=%.2e  |tri-1/4|=%.2e  |m5-1/32|=%.2e (tol %.1e)",
             e_biv, e_tri, e_five, tol_five),
         now_s() - t0);
}

void c6_moment_exactness() {
  const double t0 = now_s();
  CounterRng rng(19, label("acceptance-moments"));
  int moment_fail = 0;
  double worst_score_dev = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const SmallInstance inst = random_small_instance(rng);
    const MarginCoefficients coeffs =
        margin_coefficients(inst.v_q, inst.corpus, 0, inst.support);
    const MarginMoments mom = margin_moments(coeffs, inst.p);
    const EmpiricalMoments emp = empirical_margin_check(
        coeffs, inst.p, 200000, combine(label("acceptance-mc"), rep));
    const int m = coeffs.m();
    bool ok = true;
    for (int j = 0; j < m; ++j) {
      if (std::abs(emp.mean[j] - mom.mu[j]) >
          5.0 * emp.se_mean[j] + 1e-12)
        ok = false;
      for (int l = 0; l < m; ++l)
        if (std::abs(emp.cov(j, l) - mom.sigma(j, l)) >
            5.0 * emp.se_cov(j, l) + 1e-12)
          ok = false;
    }
    if (!ok) ++moment_fail;

    // Score-consistency identity on one indicator draw per instance.
    const std::vector<std::uint8_t> e = sample_indicators(inst.p, rng);
    const Eigen::VectorXd margins = margin_given_indicators(coeffs, e);
    const std::vector<double> v_hat = reconstruct_query(inst.v_q, e);
    const double s_ref = tfidf_score(v_hat, inst.corpus.v[0],
                                     inst.corpus.zeta, inst.support);
    for (int j = 0; j < m; ++j) {
      const double s_j =
          tfidf_score(v_hat, inst.corpus.v[coeffs.doc_ids[j]],
                      inst.corpus.zeta, inst.support);
      worst_score_dev =
          std::max(worst_score_dev, std::abs(margins[j] - (s_j - s_ref)));
    }
  }
  const bool pass = moment_fail == 0 && worst_score_dev <= 1e-10;
  report(6, "margin moments match Monte Carlo", pass,
         fmt("%d/200 beyond 5 SE; worst score-identity dev %.2e", moment_fail,
             worst_score_dev),
         now_s() - t0);
}

void c7_iid_correlation_limit() {
  const double t0 = now_s();
  CounterRng rng(12, label("acceptance-iid-ensemble"));
  const int K = 2000, reps = 60;
  double sum = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<std::vector<double>> rows(4, std::vector<double>(K));
    for (auto& row : rows)
      for (double& x : row) x = rng.uniform();
    DocumentCorpus corpus;
    corpus.n = 4;
    corpus.L_doc = 1;
    corpus.v = std::move(rows);
    corpus.zeta.assign(K, 1.0);
    corpus.presence.assign(K, 0);
    std::vector<int> support(K);
    for (int i = 0; i < K; ++i) support[i] = i;
    const MarginCoefficients coeffs = margin_coefficients(
        std::vector<double>(K, 1.0), corpus, 0, support);
    const MarginMoments mom =
        margin_moments(coeffs, std::vector<double>(K, 0.5));
    sum += correlation_matrix(mom).mean_offdiag;
  }
  const double mean = sum / reps;
  const double elapsed = now_s() - t0;
  const bool pass = mean >= 0.45 && mean <= 0.55 && elapsed < 60.0;
  report(7, "iid-ensemble correlations near 1/2", pass,
         fmt("mean off-diagonal correlation %.4f at K=%d (window [0.45,0.55])",
             mean, K),
         elapsed);
}

void c8_dp_optimality() {
  const double t0 = now_s();
  CounterRng rng(5, label("acceptance-dp"));
  int mismatches = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const int L = 1 + static_cast<int>(rng.uniform_index(6));
    const int B = static_cast<int>(rng.uniform_index(9));
    std::vector<double> scores(L);
    for (double& s : scores) s = rng.uniform();
    for (const double eps : {0.1, 0.5, 0.9}) {
      const TokenBudgetAllocation dp = dp_budget_allocation(scores, B, eps);
      const TokenBudgetAllocation ex =
          exhaustive_budget_allocation(scores, B, eps);
      if (dp.objective != ex.objective || dp.r != ex.r) ++mismatches;
    }
  }
  report(8, "budget DP matches exhaustive search", mismatches == 0,
         fmt("%d/1500 mismatches over 500 score vectors x 3 erasure rates",
             mismatches),
         now_s() - t0);
}

void c9_rate_and_length_trends() {
  const double t0 = now_s();
  ExperimentConfig cfg;  // n=10
  cfg.trials = 5000;
  const Workspace ws = prepare_workspace(cfg);

  ExperimentConfig full = cfg;  // L_q=100, R=1
  ExperimentConfig half = cfg;
  half.R = 0.5;
  ExperimentConfig shortq = cfg;
  shortq.L_q = 20;

  const ErrorEstimate e_full = estimate_error(full, ws, 0.5);
  const ErrorEstimate e_half = estimate_error(half, ws, 0.5);
  const ErrorEstimate e_short = estimate_error(shortq, ws, 0.5);

  const bool rate_ok =
      e_half.p_hat < e_full.p_hat && e_half.ci_hi < e_full.ci_lo;
  const bool length_ok =
      e_full.p_hat < e_short.p_hat && e_full.ci_hi < e_short.ci_lo;
  report(9, "rate and query-length trends", rate_ok && length_ok,
         fmt("pe(R=1/2)=%.3f < pe(R=1)=%.3f [%s]; pe(L=100)=%.3f < "
             "pe(L=20)=%.3f [%s]; CIs disjoint required",
             e_half.p_hat, e_full.p_hat, rate_ok ? "ok" : "FAIL",
             e_full.p_hat, e_short.p_hat, length_ok ? "ok" : "FAIL"),
         now_s() - t0);
}

void c10_effective_rate_cap() {
  const double t0 = now_s();
  const ZipfVocabulary vocab = make_vocabulary(5000, 1.0);
  const double rates[] = {1.0, 0.5, 0.75, 1.0 / 3.0};
  CounterRng rng(23, label("acceptance-rate-cap"));
  int violations = 0;
  for (int q = 0; q < 1000; ++q) {
    const std::vector<int> counts = sample_counts(vocab, 100, rng);
    const QueryRepresentation query = build_query(counts, 0);
    const double R = rates[q % 4];
    const RepetitionPlan plan = proportional_plan(query.v, query.M, R, 0.5);
    if (effective_rate(plan.r, query.M) > R) ++violations;
  }
  report(10, "effective rate never exceeds design rate", violations == 0,
         fmt("%d/1000 queries above cap", violations), now_s() - t0);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  const double t0 = now_s();
  c1_epsilon_endpoints();
  c2_analytic_tracks_simulation();
  c3_bound_ordering();
  c4_inclusion_exclusion_exact();
  c5_orthant_oracles();
  c6_moment_exactness();
  c7_iid_correlation_limit();
  c8_dp_optimality();
  c9_rate_and_length_trends();
  c10_effective_rate_cap();
  std::printf("%d/10 criteria passed (%.1fs)\n", 10 - g_failures,
              now_s() - t0);
  return g_failures;
}
