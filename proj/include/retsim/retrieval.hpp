#pragma once

#include <vector>

#include "retsim/corpus.hpp"

namespace retsim {

struct RetrievalDecision {
  std::vector<double> scores;
  int selected = 0;  // smallest index attaining the minimum
  bool tie = false;  // minimum shared by >= 2 documents within tolerance
};

// Scores within this relative difference count as tied.
inline constexpr double kTieRelTol = 1e-12;

// sum over the support of zeta_i^2 (vhat_i - vd_i)^2, compensated summation.
double tfidf_score(const std::vector<double>& v_hat,
                   const std::vector<double>& v_d,
                   const std::vector<double>& zeta,
                   const std::vector<int>& support);

RetrievalDecision retrieve(const std::vector<double>& v_hat,
                           const DocumentCorpus& corpus,
                           const std::vector<int>& support);

// The no-erasure reference decision for the same query.
int ground_truth(const std::vector<double>& v_q, const DocumentCorpus& corpus,
                 const std::vector<int>& support);

// 1 - cos(z1, z2), in [0, 2]; zero vectors are invalid.
double cosine_distance(const std::vector<double>& z1,
                       const std::vector<double>& z2);

}  // namespace retsim
