#include "retsim/coding.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "retsim/errors.hpp"

namespace retsim {

namespace {

// Iterated product; the DP uses the same multiplication sequence, so
// objective values agree bit for bit across both paths.
double pow_int(double base, int e) {
  double acc = 1.0;
  for (int i = 0; i < e; ++i) acc *= base;
  return acc;
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon outside [0, 1]");
}

}  // namespace

RepetitionPlan proportional_plan(const std::vector<double>& v_q, int M,
                                 double R, double epsilon) {
  if (!(R > 0.0)) throw std::invalid_argument("proportional_plan: R must be > 0");
  if (M < 1) throw std::invalid_argument("proportional_plan: M must be >= 1");
  check_epsilon(epsilon);
  double vsum = 0.0;
  for (double x : v_q) {
    if (x < 0.0)
      throw std::invalid_argument("proportional_plan: negative tf value");
    vsum += x;
  }
  if (!(vsum > 0.0))
    throw std::invalid_argument("proportional_plan: zero tf mass");
  RepetitionPlan plan;
  plan.design_rate = R;
  plan.epsilon = epsilon;
  plan.M = M;
  plan.r.resize(v_q.size(), 0);
  const double scale = static_cast<double>(M) / (R * vsum);
  for (std::size_t i = 0; i < v_q.size(); ++i)
    if (v_q[i] != 0.0)
      plan.r[i] = static_cast<int>(std::ceil(scale * v_q[i]));
  plan.p = survival_probabilities(plan.r, epsilon);
  return plan;
}

std::vector<double> survival_probabilities(const std::vector<int>& r,
                                           double epsilon) {
  check_epsilon(epsilon);
  std::vector<double> p(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0)
      throw std::invalid_argument("survival_probabilities: negative count");
    p[i] = 1.0 - pow_int(epsilon, r[i]);  // 0^0 = 1: r = 0 never survives
  }
  return p;
}

double effective_rate(const std::vector<int>& r, int M) {
  long long total = 0;
  for (int x : r) total += x;
  if (total < 1)
    throw UndefinedRateError("effective_rate: all-zero repetition vector");
  return static_cast<double>(M) / static_cast<double>(total);
}

int budget_from_rate(int L_q, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("budget_from_rate: R must be > 0");
  return static_cast<int>(std::rint(static_cast<double>(L_q) / R));
}

TokenBudgetAllocation dp_budget_allocation(const std::vector<double>& scores,
                                           int B, double epsilon) {
  if (B < 0) throw std::invalid_argument("dp_budget_allocation: negative budget");
  check_epsilon(epsilon);
  const int L = static_cast<int>(scores.size());
  for (double s : scores)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw std::invalid_argument("dp_budget_allocation: scores must be >= 0");
  TokenBudgetAllocation out;
  out.scores = scores;
  out.B = B;
  out.epsilon = epsilon;
  if (L == 0) {
    if (B > 0)
      throw std::invalid_argument(
          "dp_budget_allocation: positive budget with no tokens");
    return out;
  }

  std::vector<double> eps_pow(B + 1);
  eps_pow[0] = 1.0;
  for (int k = 1; k <= B; ++k) eps_pow[k] = eps_pow[k - 1] * epsilon;
  const auto term = [&](int t, int rt) {
    return (1.0 - eps_pow[rt]) * scores[t];
  };

  const double ninf = -std::numeric_limits<double>::infinity();
  // f[t][b]: best objective for tokens t.. with budget exactly b.
  std::vector<std::vector<double>> f(L + 1, std::vector<double>(B + 1, ninf));
  std::vector<std::vector<int>> choice(L, std::vector<int>(B + 1, 0));
  f[L][0] = 0.0;
  for (int t = L - 1; t >= 0; --t) {
    for (int b = 0; b <= B; ++b) {
      double best = ninf;
      int arg = 0;
      for (int rt = 0; rt <= b; ++rt) {
        const double val = term(t, rt) + f[t + 1][b - rt];
        if (val > best) {  // strict: smallest maximizer -> lex-smallest r
          best = val;
          arg = rt;
        }
      }
      f[t][b] = best;
      choice[t][b] = arg;
    }
  }
  out.objective = f[0][B];
  out.r.resize(L);
  int rem = B;
  for (int t = 0; t < L; ++t) {
    out.r[t] = choice[t][rem];
    rem -= out.r[t];
  }
  return out;
}

TokenBudgetAllocation exhaustive_budget_allocation(
    const std::vector<double>& scores, int B, double epsilon) {
  if (B < 0)
    throw std::invalid_argument("exhaustive_budget_allocation: negative budget");
  check_epsilon(epsilon);
  const int L = static_cast<int>(scores.size());
  TokenBudgetAllocation out;
  out.scores = scores;
  out.B = B;
  out.epsilon = epsilon;
  if (L == 0) {
    if (B > 0)
      throw std::invalid_argument(
          "exhaustive_budget_allocation: positive budget with no tokens");
    return out;
  }
  std::vector<double> eps_pow(B + 1);
  eps_pow[0] = 1.0;
  for (int k = 1; k <= B; ++k) eps_pow[k] = eps_pow[k - 1] * epsilon;

  std::vector<int> r(L, 0);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> best_r;
  // Compositions enumerate in lexicographic order, so keeping the first
  // strict maximum returns the lexicographically smallest optimum.
  const auto evaluate = [&]() {
    double acc = 0.0;
    for (int t = L - 1; t >= 0; --t)
      acc = (1.0 - eps_pow[r[t]]) * scores[t] + acc;
    if (acc > best) {
      best = acc;
      best_r = r;
    }
  };
  const auto recurse = [&](auto&& self, int t, int rem) -> void {
    if (t == L - 1) {
      r[t] = rem;
      evaluate();
      r[t] = 0;
      return;
    }
    for (int x = 0; x <= rem; ++x) {
      r[t] = x;
      self(self, t + 1, rem - x);
    }
    r[t] = 0;
  };
  recurse(recurse, 0, B);
  out.objective = best;
  out.r = best_r;
  return out;
}

std::string plan_to_json(const RepetitionPlan& plan) {
  nlohmann::json j;
  j["design_rate"] = plan.design_rate;
  j["epsilon"] = plan.epsilon;
  j["M"] = plan.M;
  nlohmann::json r = nlohmann::json::object();
  nlohmann::json p = nlohmann::json::object();
  long long total = 0;
  for (std::size_t i = 0; i < plan.r.size(); ++i) {
    if (plan.r[i] > 0) {
      r[std::to_string(i)] = plan.r[i];
      p[std::to_string(i)] = plan.p[i];
      total += plan.r[i];
    }
  }
  j["r"] = r;
  j["p"] = p;
  j["total_copies"] = total;
  if (total > 0)
    j["effective_rate"] = static_cast<double>(plan.M) / total;
  return j.dump(2);
}

}  // namespace retsim
