#include "retsim/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <utility>

#include "retsim/channel.hpp"
#include "retsim/errors.hpp"
#include "retsim/retrieval.hpp"

namespace retsim {
namespace {

constexpr std::uint32_t kMaxResampleAttempts = 10000;

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

std::uint64_t mode_id(SimMode m) {
  return m == SimMode::kTfidf ? 0u : 1u;
}

// Trial streams are keyed by everything that distinguishes a cell, so no two
// cells of a sweep share random draws and results survive re-partitioning
// across workers.
std::uint64_t cell_label(const ExperimentConfig& c, double epsilon,
                         std::uint64_t stream) {
  return combine_all({stream, bits(epsilon), bits(c.R),
                      static_cast<std::uint64_t>(c.L_q),
                      static_cast<std::uint64_t>(c.n),
                      static_cast<std::uint64_t>(c.l_s), mode_id(c.mode)});
}

[[noreturn]] void resample_overflow(const char* what, double epsilon) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%s: exceeded %u query resamples (epsilon=%g); the "
                "configuration almost never yields a usable query",
                what, kMaxResampleAttempts, epsilon);
  throw std::runtime_error(buf);
}

std::vector<double> gather_support(const std::vector<double>& full,
                                   const std::vector<int>& support) {
  std::vector<double> out(support.size());
  for (std::size_t t = 0; t < support.size(); ++t) out[t] = full[support[t]];
  return out;
}

// --- token mode -----------------------------------------------------------

std::vector<double> embed_tokens(const ExperimentConfig& cfg,
                                 const std::vector<int>& tokens) {
  std::vector<double> z(cfg.embed_dim, 0.0);
  for (int tok : tokens) {
    const std::vector<double> vec = term_vector(cfg.seed, tok, cfg.embed_dim);
    for (int d = 0; d < cfg.embed_dim; ++d) z[d] += vec[d];
  }
  return z;
}

// Smallest-index nearest document under cosine distance; documents with a
// zero embedding can never win.
int nearest_doc(const Workspace& ws, const std::vector<double>& z,
                bool* tie_out) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  bool tie = false;
  for (int j = 0; j < ws.corpus.n; ++j) {
    const auto& emb = ws.doc_embed[j];
    const bool zero =
        std::all_of(emb.begin(), emb.end(), [](double x) { return x == 0.0; });
    if (zero) continue;
    const double d = cosine_distance(z, emb);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = j;
      tie = false;
    } else if (d <= best_d + 1e-12) {
      tie = true;
      if (d < best_d) best_d = d;
    }
  }
  if (best < 0)
    throw std::runtime_error("token mode: every document embedding is zero");
  if (tie_out) *tie_out = tie;
  return best;
}

TrialOutcome run_trial_token(const ExperimentConfig& cfg, const Workspace& ws,
                             double epsilon, std::uint64_t trial) {
  for (std::uint32_t attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    CounterRng trng(cfg.seed, combine_all({cell_label(cfg, epsilon,
                                                      streams::kTokens),
                                           trial, attempt}));
    std::vector<int> tokens(cfg.L_q);
    for (int& t : tokens) t = sample_rank(ws.vocab, trng);

    std::vector<int> content;
    for (int t : tokens)
      if (!ws.vocab.is_stopword(t)) content.push_back(t);
    if (content.empty()) continue;  // all stop words: resample

    bool tie = false;
    const int ref = nearest_doc(ws, embed_tokens(cfg, content), &tie);
    if (tie) continue;

    std::vector<double> scores(tokens.size(), 0.0);
    if (cfg.token_scorer == "uniform") {
      for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!ws.vocab.is_stopword(tokens[i])) scores[i] = 1.0;
    } else {  // synthetic-random
      CounterRng srng(cfg.seed, combine_all({cell_label(cfg, epsilon,
                                                        streams::kScores),
                                             trial, attempt}));
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double u = srng.uniform_pos();
        if (!ws.vocab.is_stopword(tokens[i])) scores[i] = u;
      }
    }

    const int B = budget_from_rate(cfg.L_q, cfg.R);
    const TokenBudgetAllocation alloc =
        dp_budget_allocation(scores, B, epsilon);

    CounterRng erng(cfg.seed, combine_all({cell_label(cfg, epsilon,
                                                      streams::kErasure),
                                           trial, attempt}));
    const std::vector<int> survivors =
        erase_token_sequence(tokens, alloc.r, epsilon, erng);
    std::vector<int> kept;
    for (int t : survivors)
      if (!ws.vocab.is_stopword(t)) kept.push_back(t);
    if (kept.empty()) return {true, attempt};  // nothing left to embed

    const int sel = nearest_doc(ws, embed_tokens(cfg, kept), nullptr);
    return {sel != ref, attempt};
  }
  resample_overflow("run_trial", epsilon);
}

// --- tf-idf mode ----------------------------------------------------------

TrialOutcome run_trial_tfidf(const ExperimentConfig& cfg, const Workspace& ws,
                             double epsilon, std::uint64_t trial) {
  for (std::uint32_t attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    CounterRng qrng(cfg.seed, combine_all({cell_label(cfg, epsilon,
                                                      streams::kQuery),
                                           trial, attempt}));
    const std::vector<int> counts = sample_counts(ws.vocab, cfg.L_q, qrng);
    QueryRepresentation query;
    try {
      query = build_query(counts, cfg.l_s);
    } catch (const EmptySupportError&) {
      continue;
    }

    const RetrievalDecision ref = retrieve(query.v, ws.corpus, query.support);
    if (ref.tie) continue;

    const RepetitionPlan plan =
        proportional_plan(query.v, query.M, cfg.R, epsilon);
    const std::vector<double> p = gather_support(plan.p, query.support);

    CounterRng erng(cfg.seed, combine_all({cell_label(cfg, epsilon,
                                                      streams::kErasure),
                                           trial, attempt}));
    const std::vector<std::uint8_t> ind = sample_indicators(p, erng);

    std::vector<std::uint8_t> e_full(query.v.size(), 0);
    for (std::size_t t = 0; t < query.support.size(); ++t)
      e_full[query.support[t]] = ind[t];
    const std::vector<double> v_hat = reconstruct_query(query.v, e_full);

    const RetrievalDecision got = retrieve(v_hat, ws.corpus, query.support);
    return {got.selected != ref.selected, attempt};
  }
  resample_overflow("run_trial", epsilon);
}

}  // namespace

std::uint64_t bounds_query_label(const ExperimentConfig& c, std::uint64_t q,
                                 std::uint64_t attempt) {
  return combine_all({streams::kBoundsQuery,
                      static_cast<std::uint64_t>(c.L_q),
                      static_cast<std::uint64_t>(c.n),
                      static_cast<std::uint64_t>(c.l_s), q, attempt});
}

void ExperimentConfig::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw std::invalid_argument(std::string("config: key '") + key + "' " +
                                why);
  };
  if (N < 1) fail("N", "must be >= 1");
  if (!(alpha >= 0.0)) fail("alpha", "must be >= 0");
  if (n < 2) fail("n", "must be >= 2 (retrieval needs competitors)");
  if (L_doc < 1) fail("L_doc", "must be >= 1");
  if (L_q < 1) fail("L_q", "must be >= 1");
  if (l_s < 0 || l_s > N) fail("l_s", "must lie in [0, N]");
  if (!(R > 0.0)) fail("R", "must be positive");
  if (epsilons.empty()) fail("epsilon", "grid must be non-empty");
  for (double e : epsilons)
    if (!(e >= 0.0 && e <= 1.0)) fail("epsilon", "values must lie in [0, 1]");
  if (trials < 1) fail("trials", "must be >= 1");
  if (Q < 1) fail("Q", "must be >= 1");
  if (!(qmc.target_se > 0.0)) fail("qmc_target_se", "must be positive");
  if (qmc.max_samples < 1) fail("qmc_max_samples", "must be >= 1");
  if (qmc.randomizations < 1) fail("qmc_randomizations", "must be >= 1");
  if (qmc.threads < 1) fail("qmc_threads", "must be >= 1");
  if (token_scorer != "uniform" && token_scorer != "synthetic-random")
    fail("token_scorer", "must be 'uniform' or 'synthetic-random'");
  if (embed_dim < 1) fail("embed_dim", "must be >= 1");
}

std::vector<double> term_vector(std::uint64_t seed, int rank, int dim) {
  CounterRng rng(seed,
                 combine(streams::kEmbed, static_cast<std::uint64_t>(rank)));
  std::vector<double> v(dim);
  for (double& x : v) x = gaussian::sample_std_normal(rng);
  return v;
}

Workspace prepare_workspace(const ExperimentConfig& config) {
  config.validate();
  Workspace ws;
  ws.vocab = make_vocabulary(config.N, config.alpha, config.l_s);
  ws.corpus = generate_corpus(ws.vocab, config.n, config.L_doc, config.seed);
  if (config.mode == SimMode::kTokenDp) {
    ws.doc_embed.assign(config.n, std::vector<double>(config.embed_dim, 0.0));
    for (int i = config.l_s; i < config.N; ++i) {
      bool used = false;
      for (int j = 0; j < config.n && !used; ++j)
        used = ws.corpus.v[j][i] != 0.0;
      if (!used) continue;
      const std::vector<double> vec =
          term_vector(config.seed, i, config.embed_dim);
      for (int j = 0; j < config.n; ++j) {
        const double w = ws.corpus.v[j][i];
        if (w == 0.0) continue;
        for (int d = 0; d < config.embed_dim; ++d)
          ws.doc_embed[j][d] += w * vec[d];
      }
    }
  }
  return ws;
}

TrialOutcome run_trial(const ExperimentConfig& config, const Workspace& ws,
                       double epsilon, std::uint64_t trial) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("run_trial: epsilon must lie in [0, 1]");
  return config.mode == SimMode::kTokenDp
             ? run_trial_token(config, ws, epsilon, trial)
             : run_trial_tfidf(config, ws, epsilon, trial);
}

std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t trials) {
  if (trials == 0)
    throw std::invalid_argument("wilson_interval: trials must be positive");
  if (successes > trials)
    throw std::invalid_argument("wilson_interval: successes exceed trials");
  const double z = 1.959963984540054;  // Phi^{-1}(0.975)
  const double T = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / T;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / T;
  const double center = (ph + z2 / (2.0 * T)) / denom;
  const double half =
      z / denom * std::sqrt(ph * (1.0 - ph) / T + z2 / (4.0 * T * T));
  // The endpoints are exactly 0 / 1 at 0 or T successes; do not leave that
  // to floating-point cancellation.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

ErrorEstimate estimate_error(const ExperimentConfig& config,
                             const Workspace& ws, double epsilon) {
  if (config.trials < 100)
    throw std::invalid_argument(
        "estimate_error: trials must be >= 100 for interval coverage");
  ErrorEstimate est;
  est.trials = config.trials;
  std::uint64_t errors = 0;
  for (int t = 0; t < config.trials; ++t) {
    const TrialOutcome out =
        run_trial(config, ws, epsilon, static_cast<std::uint64_t>(t));
    errors += out.error ? 1 : 0;
    est.resampled += out.resample_attempts;
  }
  est.p_hat = static_cast<double>(errors) / config.trials;
  std::tie(est.ci_lo, est.ci_hi) =
      wilson_interval(errors, static_cast<std::uint64_t>(config.trials));
  return est;
}

AveragedBounds averaged_bounds(const ExperimentConfig& config,
                               const Workspace& ws, double epsilon, int Q) {
  if (config.mode != SimMode::kTfidf)
    throw std::invalid_argument(
        "averaged_bounds: analytic bounds exist only in tf-idf mode");
  if (Q < 1) throw std::invalid_argument("averaged_bounds: Q must be >= 1");

  std::vector<double> pes, b1s, b1cs, b3s, sidaks, combineds;
  pes.reserve(Q);
  AveragedBounds out;
  out.Q = Q;
  int valid = 0;

  for (int q = 0; q < Q; ++q) {
    bool done = false;
    for (std::uint32_t attempt = 0; attempt < kMaxResampleAttempts;
         ++attempt) {
      const std::uint64_t qlab =
          bounds_query_label(config, static_cast<std::uint64_t>(q), attempt);
      CounterRng qrng(config.seed, qlab);
      const std::vector<int> counts =
          sample_counts(ws.vocab, config.L_q, qrng);
      QueryRepresentation query;
      try {
        query = build_query(counts, config.l_s);
      } catch (const EmptySupportError&) {
        ++out.resampled;
        continue;
      }
      const RetrievalDecision ref =
          retrieve(query.v, ws.corpus, query.support);
      if (ref.tie) {
        ++out.resampled;
        continue;
      }

      const RepetitionPlan plan =
          proportional_plan(query.v, query.M, config.R, epsilon);
      const std::vector<double> p = gather_support(plan.p, query.support);
      const MarginCoefficients coeffs =
          margin_coefficients(query.v, ws.corpus, ref.selected, query.support);
      const MarginMoments moments = margin_moments(coeffs, p);

      gaussian::QmcConfig qc = config.qmc;
      qc.seed = combine_all({config.seed, qlab, bits(epsilon)});
      const BoundReport rep = full_report(moments, qc);

      pes.push_back(rep.pe.value);
      b1s.push_back(rep.b1);
      b1cs.push_back(rep.b1_clipped);
      b3s.push_back(rep.b3);
      sidaks.push_back(rep.sidak);
      combineds.push_back(rep.combined);
      valid += rep.sidak_valid ? 1 : 0;
      done = true;
      break;
    }
    if (!done) resample_overflow("averaged_bounds", epsilon);
  }

  auto mean_se = [Q](const std::vector<double>& xs, double* se) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= Q;
    double var = 0.0;
    if (Q > 1) {
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= (Q - 1);
    }
    if (se) *se = std::sqrt(var / Q);
    return mean;
  };
  out.pe_mvn = mean_se(pes, &out.se_pe_mvn);
  out.b1 = mean_se(b1s, &out.se_b1);
  out.b1_clipped = mean_se(b1cs, nullptr);
  out.b3 = mean_se(b3s, &out.se_b3);
  out.sidak = mean_se(sidaks, &out.se_sidak);
  out.combined = mean_se(combineds, nullptr);
  out.sidak_valid_frac = static_cast<double>(valid) / Q;
  return out;
}

CellResult run_cell(const ExperimentConfig& config, const Workspace& ws,
                    double epsilon, bool with_mc, bool with_bounds) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CellResult cell;
  cell.epsilon = epsilon;
  cell.L_q = config.L_q;
  cell.R = config.R;
  cell.n = config.n;
  cell.trials = with_mc ? config.trials : 0;
  cell.pe_mc = cell.ci_lo = cell.ci_hi = nan;
  cell.pe_mvn = cell.b1 = cell.b1_clipped = cell.b3 = cell.sidak =
      cell.sidak_valid_frac = nan;

  if (with_mc) {
    const ErrorEstimate est = estimate_error(config, ws, epsilon);
    cell.pe_mc = est.p_hat;
    cell.ci_lo = est.ci_lo;
    cell.ci_hi = est.ci_hi;
    cell.resampled += est.resampled;
  }
  if (with_bounds && config.mode == SimMode::kTfidf) {
    const AveragedBounds ab = averaged_bounds(config, ws, epsilon, config.Q);
    cell.pe_mvn = ab.pe_mvn;
    cell.b1 = ab.b1;
    cell.b1_clipped = ab.b1_clipped;
    cell.b3 = ab.b3;
    cell.sidak = ab.sidak;
    cell.sidak_valid_frac = ab.sidak_valid_frac;
    cell.resampled += ab.resampled;
  }
  return cell;
}

std::string cell_csv_header() {
  return "epsilon,L_q,R,n,trials,pe_mc,ci_lo,ci_hi,pe_mvn,b1,b1_clipped,b3,"
         "sidak,sidak_valid_frac,resampled_queries";
}

std::string cell_csv_row(const CellResult& cell) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.10g,%d,%.10g,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                "%.10g,%.10g,%.10g,%llu",
                cell.epsilon, cell.L_q, cell.R, cell.n, cell.trials,
                cell.pe_mc, cell.ci_lo, cell.ci_hi, cell.pe_mvn, cell.b1,
                cell.b1_clipped, cell.b3, cell.sidak, cell.sidak_valid_frac,
                static_cast<unsigned long long>(cell.resampled));
  return buf;
}

}  // namespace retsim
