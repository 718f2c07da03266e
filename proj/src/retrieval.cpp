#include "retsim/retrieval.hpp"

#include <cmath>
#include <stdexcept>

#include "retsim/numeric.hpp"

namespace retsim {

namespace {
bool near_equal(double a, double b) {
  const double m = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= kTieRelTol * m;
}
}  // namespace

double tfidf_score(const std::vector<double>& v_hat,
                   const std::vector<double>& v_d,
                   const std::vector<double>& zeta,
                   const std::vector<int>& support) {
  KahanSum acc;
  for (int i : support) {
    const double d = v_hat[i] - v_d[i];
    acc.add(zeta[i] * zeta[i] * d * d);
  }
  return acc.sum;
}

RetrievalDecision retrieve(const std::vector<double>& v_hat,
                           const DocumentCorpus& corpus,
                           const std::vector<int>& support) {
  if (corpus.n < 1) throw std::invalid_argument("retrieve: empty corpus");
  RetrievalDecision out;
  out.scores.resize(corpus.n);
  for (int j = 0; j < corpus.n; ++j)
    out.scores[j] = tfidf_score(v_hat, corpus.v[j], corpus.zeta, support);
  double best = out.scores[0];
  for (int j = 1; j < corpus.n; ++j)
    if (out.scores[j] < best) best = out.scores[j];
  int first = -1, hits = 0;
  for (int j = 0; j < corpus.n; ++j) {
    if (near_equal(out.scores[j], best)) {
      if (first < 0) first = j;
      ++hits;
    }
  }
  out.selected = first;
  out.tie = hits >= 2;
  return out;
}

int ground_truth(const std::vector<double>& v_q, const DocumentCorpus& corpus,
                 const std::vector<int>& support) {
  return retrieve(v_q, corpus, support).selected;
}

double cosine_distance(const std::vector<double>& z1,
                       const std::vector<double>& z2) {
  if (z1.size() != z2.size())
    throw std::invalid_argument("cosine_distance: length mismatch");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    dot += z1[i] * z2[i];
    n1 += z1[i] * z1[i];
    n2 += z2[i] * z2[i];
  }
  if (n1 == 0.0 || n2 == 0.0)
    throw std::invalid_argument("cosine_distance: zero vector");
  double c = dot / (std::sqrt(n1) * std::sqrt(n2));
  c = std::min(1.0, std::max(-1.0, c));
  return 1.0 - c;
}

}  // namespace retsim
