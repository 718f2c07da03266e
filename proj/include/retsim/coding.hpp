#pragma once

#include <string>
#include <vector>

namespace retsim {

struct RepetitionPlan {
  std::vector<int> r;     // copies per coordinate; 0 off the query support
  double design_rate = 1.0;
  double epsilon = 0.0;
  std::vector<double> p;  // survival probabilities 1 - epsilon^r
  int M = 0;
};

// r_i = ceil((M / (R * sum_j v_j)) * v_i) on active coordinates. The ceiling
// guarantees sum(r) >= M/R, so the effective rate never exceeds R.
RepetitionPlan proportional_plan(const std::vector<double>& v_q, int M,
                                 double R, double epsilon);

// p_i = 1 - epsilon^{r_i}, with 0^0 = 1: an untransmitted coordinate never
// arrives, even over a perfect channel.
std::vector<double> survival_probabilities(const std::vector<int>& r,
                                           double epsilon);

// M / sum(r); throws UndefinedRateError when r is all zero.
double effective_rate(const std::vector<int>& r, int M);

// B = round(L_q / R), ties to even.
int budget_from_rate(int L_q, double R);

struct TokenBudgetAllocation {
  std::vector<double> scores;
  int B = 0;
  std::vector<int> r;      // per-token copies, sums to B exactly
  double objective = 0.0;  // sum_i (1 - epsilon^{r_i}) * scores_i
  double epsilon = 0.0;
};

// Maximizes the expected preserved score mass subject to sum(r) = B.
// Ties resolve to the lexicographically smallest r.
TokenBudgetAllocation dp_budget_allocation(const std::vector<double>& scores,
                                           int B, double epsilon);

// Exhaustive reference over all compositions of B; objective evaluated with
// the same summation order as the DP so optima agree bit for bit. Intended
// for tests and the demo path; cost grows as C(B+L-1, L-1).
TokenBudgetAllocation exhaustive_budget_allocation(
    const std::vector<double>& scores, int B, double epsilon);

std::string plan_to_json(const RepetitionPlan& plan);

}  // namespace retsim
