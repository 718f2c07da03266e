#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "retsim/coding.hpp"
#include "retsim/corpus.hpp"
#include "retsim/errors.hpp"
#include "retsim/rng.hpp"

using namespace retsim;

TEST_CASE("proportional copies scale with the masked tf vector") {
  const std::vector<double> v{0.4, 0.2, 0.0};
  SUBCASE("unit rate") {
    const RepetitionPlan plan = proportional_plan(v, 3, 1.0, 0.5);
    CHECK(plan.r == std::vector<int>{2, 1, 0});
    CHECK(plan.design_rate == 1.0);
    CHECK(plan.M == 3);
    CHECK(plan.p.size() == 3);
    CHECK(plan.p[0] == doctest::Approx(1.0 - 0.25).epsilon(1e-15));
  }
  SUBCASE("half rate doubles every count") {
    const RepetitionPlan plan = proportional_plan(v, 3, 0.5, 0.5);
    CHECK(plan.r == std::vector<int>{4, 2, 0});
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(proportional_plan(v, 3, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(proportional_plan(v, 0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(proportional_plan({0.0, 0.0}, 1, 1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(proportional_plan({-0.1, 0.5}, 1, 1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(proportional_plan(v, 3, 1.0, 1.5), std::invalid_argument);
  }
}

TEST_CASE("every active coordinate gets at least one copy at rate <= 1") {
  CounterRng rng(17, label("test-plans"));
  const ZipfVocabulary vocab = make_vocabulary(30, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto counts = sample_counts(vocab, 40, rng);
    QueryRepresentation q;
    try {
      q = build_query(counts, 3);
    } catch (const EmptySupportError&) {
      continue;
    }
    const double R = 0.25 + 0.75 * rng.uniform();  // (0.25, 1]
    const RepetitionPlan plan = proportional_plan(q.v, q.M, R, 0.5);
    for (int i = 0; i < 30; ++i) {
      if (q.v[i] > 0.0) CHECK(plan.r[i] >= 1);
      if (q.v[i] == 0.0) CHECK(plan.r[i] == 0);
    }
    // The ceiling construction keeps the realized rate at or below R.
    CHECK(effective_rate(plan.r, q.M) <= R * (1.0 + 1e-12));
  }
}

TEST_CASE("survival probability of a repeated coordinate") {
  CHECK(survival_probabilities({0}, 0.3)[0] == 0.0);
  CHECK(survival_probabilities({3}, 0.0)[0] == 1.0);
  CHECK(survival_probabilities({2}, 0.5)[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(survival_probabilities({0}, 0.0)[0] == 0.0);  // 0^0 = 1 convention
  CHECK(survival_probabilities({5}, 1.0)[0] == 0.0);
  CHECK_THROWS_AS(survival_probabilities({-1}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(survival_probabilities({1}, -0.1), std::invalid_argument);
}

TEST_CASE("effective rate is query mass over total copies") {
  CHECK(effective_rate({2, 1, 0}, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(effective_rate({4, 2, 0}, 3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(effective_rate({1}, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(effective_rate({0, 0}, 3), UndefinedRateError);
}

TEST_CASE("token budget rounds half to even") {
  CHECK(budget_from_rate(100, 1.0) == 100);
  CHECK(budget_from_rate(100, 0.5) == 200);
  CHECK(budget_from_rate(5, 2.0) == 2);   // 2.5 rounds down to even
  CHECK(budget_from_rate(15, 2.0) == 8);  // 7.5 rounds up to even
  CHECK_THROWS_AS(budget_from_rate(10, 0.0), std::invalid_argument);
}

TEST_CASE("budget allocation favors the heavy score") {
  const TokenBudgetAllocation alloc =
      dp_budget_allocation({0.9, 0.1}, 3, 0.5);
  CHECK(alloc.r == std::vector<int>{3, 0});
  CHECK(alloc.objective == doctest::Approx(0.7875).epsilon(1e-15));
  CHECK(alloc.B == 3);
}

TEST_CASE("budget allocation corner cases") {
  CHECK(dp_budget_allocation({0.3, 0.7}, 0, 0.5).r ==
        std::vector<int>{0, 0});
  CHECK(dp_budget_allocation({0.3, 0.7}, 0, 0.5).objective == 0.0);
  CHECK(dp_budget_allocation({0.42}, 6, 0.3).r == std::vector<int>{6});

  // Equal scores tie; the lexicographically smallest split wins.
  CHECK(dp_budget_allocation({0.5, 0.5}, 1, 0.5).r ==
        std::vector<int>{0, 1});

  // A perfect channel needs one copy per useful token, no more.
  CHECK(dp_budget_allocation({0.3, 0.2}, 3, 0.0).r ==
        std::vector<int>{1, 2});
  CHECK(dp_budget_allocation({0.3, 0.2}, 3, 0.0).objective ==
        doctest::Approx(0.5).epsilon(1e-15));

  // A fully erasing channel scores zero everywhere; the tie-break rules.
  CHECK(dp_budget_allocation({0.3, 0.2}, 4, 1.0).r ==
        std::vector<int>{0, 4});

  CHECK_THROWS_AS(dp_budget_allocation({0.5}, -1, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(dp_budget_allocation({-0.5}, 1, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(dp_budget_allocation({0.5}, 1, 2.0), std::invalid_argument);
}

TEST_CASE("objective is monotone in the budget") {
  const std::vector<double> scores{0.5, 0.3, 0.1, 0.7};
  double prev = -1.0;
  for (int B = 0; B <= 12; ++B) {
    const double obj = dp_budget_allocation(scores, B, 0.4).objective;
    CHECK(obj >= prev);
    prev = obj;
  }
}

TEST_CASE("dynamic program matches exhaustive search exactly") {
  CounterRng rng(3, label("test-dp"));
  for (int rep = 0; rep < 500; ++rep) {
    const int L = 1 + static_cast<int>(rng.uniform_index(6));
    const int B = static_cast<int>(rng.uniform_index(9));
    std::vector<double> scores(L);
    for (double& s : scores) s = rng.uniform();
    for (const double eps : {0.1, 0.5, 0.9}) {
      const TokenBudgetAllocation dp = dp_budget_allocation(scores, B, eps);
      const TokenBudgetAllocation ex =
          exhaustive_budget_allocation(scores, B, eps);
      CHECK(dp.objective == ex.objective);  // bit-for-bit, shared summation
      CHECK(dp.r == ex.r);
      CHECK(std::accumulate(dp.r.begin(), dp.r.end(), 0) == B);
    }
  }
}
