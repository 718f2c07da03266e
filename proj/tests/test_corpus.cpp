#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "retsim/corpus.hpp"
#include "retsim/errors.hpp"
#include "retsim/rng.hpp"

using namespace retsim;

TEST_CASE("rank probabilities follow the power law") {
  SUBCASE("alpha 0 is uniform") {
    const auto p = zipf_probabilities(4, 0.0);
    for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("single rank gets everything") {
    const auto p = zipf_probabilities(1, 2.7);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("three ranks at alpha 1") {
    const auto p = zipf_probabilities(3, 1.0);
    CHECK(p[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(2.0 / 11.0).epsilon(1e-14));
  }
  SUBCASE("non-increasing and normalized") {
    const auto p = zipf_probabilities(50, 1.3);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) CHECK(p[i] >= p[i + 1]);
    for (double x : p) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("invalid shapes") {
    CHECK_THROWS_AS(zipf_probabilities(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(zipf_probabilities(3, -0.5), std::invalid_argument);
  }
}

TEST_CASE("vocabulary cdf is exact at the top") {
  const ZipfVocabulary vocab = make_vocabulary(17, 1.0);
  CHECK(vocab.cdf.back() == 1.0);
  for (std::size_t i = 0; i + 1 < vocab.cdf.size(); ++i)
    CHECK(vocab.cdf[i] <= vocab.cdf[i + 1]);
  CHECK_THROWS_AS(make_vocabulary(3, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_vocabulary(3, 1.0, -1), std::invalid_argument);
}

TEST_CASE("rank sampling matches the marginals at a million draws") {
  const ZipfVocabulary vocab = make_vocabulary(3, 1.0);
  CounterRng rng(2024, streams::kQuery);
  const int T = 1000000;
  std::vector<int> freq(3, 0);
  for (int t = 0; t < T; ++t) ++freq[sample_rank(vocab, rng)];
  CHECK(std::abs(freq[0] / double(T) - 6.0 / 11.0) < 0.005);
  CHECK(std::abs(freq[1] / double(T) - 3.0 / 11.0) < 0.005);
  CHECK(std::abs(freq[2] / double(T) - 2.0 / 11.0) < 0.005);
}

TEST_CASE("multinomial counts sum to the requested length") {
  const ZipfVocabulary vocab = make_vocabulary(20, 1.0);
  CounterRng rng(0, streams::kQuery);
  const auto counts = sample_counts(vocab, 57, rng);
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 57);

  const ZipfVocabulary one = make_vocabulary(1, 2.0);
  CounterRng rng2(0, streams::kQuery);
  CHECK(sample_counts(one, 5, rng2) == std::vector<int>{5});
  CounterRng rng3(0, streams::kQuery);
  CHECK(sample_counts(one, 0, rng3) == std::vector<int>{0});
  CHECK_THROWS_AS(sample_counts(one, -1, rng3), std::invalid_argument);

  // Seed overload replays the rng overload on the query stream.
  CounterRng rng4(9, streams::kQuery);
  CHECK(sample_counts(vocab, 30, std::uint64_t{9}) ==
        sample_counts(vocab, 30, rng4));
}

TEST_CASE("query vectors mask stop words and keep the rest") {
  SUBCASE("mid-vocabulary stop word") {
    const QueryRepresentation q = build_query({2, 1, 2}, std::vector<int>{2});
    CHECK(q.L_q == 5);
    CHECK(q.M == 3);
    CHECK(q.v == std::vector<double>{0.4, 0.2, 0.0});
    CHECK(q.support == std::vector<int>{0, 1});
    CHECK(q.K() == 2);
  }
  SUBCASE("no stop words") {
    const QueryRepresentation q = build_query({5}, std::vector<int>{});
    CHECK(q.v == std::vector<double>{1.0});
    CHECK(q.M == 5);
    CHECK(q.tf == q.v);
  }
  SUBCASE("all mass on stop words") {
    CHECK_THROWS_AS(build_query({0, 5}, std::vector<int>{1}),
                    EmptySupportError);
  }
  SUBCASE("non-contiguous mask") {
    const QueryRepresentation q = build_query({1, 2, 3}, std::vector<int>{0, 2});
    CHECK(q.v == std::vector<double>{0.0, 2.0 / 6.0, 0.0});
    CHECK(q.support == std::vector<int>{1});
    CHECK(q.M == 2);
  }
  SUBCASE("prefix overload agrees with the explicit set") {
    const auto a = build_query({3, 1, 4, 1}, 2);
    const auto b = build_query({3, 1, 4, 1}, std::vector<int>{0, 1});
    CHECK(a.v == b.v);
    CHECK(a.support == b.support);
    CHECK(a.M == b.M);
  }
  SUBCASE("mass conservation") {
    const QueryRepresentation q = build_query({4, 0, 3, 2, 1}, 1);
    double sum = 0.0;
    for (double x : q.v) sum += x;
    CHECK(sum == doctest::Approx(double(q.M) / q.L_q).epsilon(1e-15));
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(build_query({-1, 2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_query({0, 0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_query({1, 2}, std::vector<int>{2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_query({1, 2}, 3), std::invalid_argument);
    CHECK_NOTHROW(build_query({1, 2}, std::vector<int>{0, 0}));
  }
}

TEST_CASE("idf weights from realized presence") {
  CHECK(idf_weights({5}, 5)[0] == 0.0);
  CHECK(idf_weights({0}, 1)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(idf_weights({4}, 9)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // Strictly decreasing in the presence count.
  const int n = 12;
  std::vector<int> presence(n + 1);
  std::iota(presence.begin(), presence.end(), 0);
  const auto zeta = idf_weights(presence, n);
  for (std::size_t i = 0; i + 1 < zeta.size(); ++i) CHECK(zeta[i] > zeta[i + 1]);
  CHECK(zeta.back() == 0.0);

  CHECK_THROWS_AS(idf_weights({-1}, 4), std::invalid_argument);
  CHECK_THROWS_AS(idf_weights({5}, 4), std::invalid_argument);
}

TEST_CASE("degenerate corpus pins the weights") {
  const ZipfVocabulary vocab = make_vocabulary(1, 1.0);
  const DocumentCorpus corpus = generate_corpus(vocab, 2, 1, 0);
  CHECK(corpus.v[0] == std::vector<double>{1.0});
  CHECK(corpus.v[1] == std::vector<double>{1.0});
  CHECK(corpus.presence == std::vector<int>{2});
  CHECK(corpus.zeta[0] == 0.0);  // log((n+1)/(n_i+1)) with n_i = n
}

TEST_CASE("document rows are term-frequency vectors") {
  const ZipfVocabulary vocab = make_vocabulary(40, 1.0);
  const DocumentCorpus corpus = generate_corpus(vocab, 6, 250, 7);
  REQUIRE(corpus.v.size() == 6);
  for (const auto& row : corpus.v) {
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  for (int i = 0; i < vocab.N; ++i) {
    int present = 0;
    for (const auto& row : corpus.v) present += row[i] > 0.0;
    CHECK(corpus.presence[i] == present);
  }
}

TEST_CASE("corpus generation is deterministic and prefix-stable") {
  const ZipfVocabulary vocab = make_vocabulary(30, 1.0);
  const DocumentCorpus a = generate_corpus(vocab, 4, 100, 42);
  const DocumentCorpus b = generate_corpus(vocab, 4, 100, 42);
  CHECK(a.v == b.v);
  CHECK(a.presence == b.presence);

  // Document j depends only on (seed, j): a smaller corpus is a prefix.
  const DocumentCorpus c = generate_corpus(vocab, 2, 100, 42);
  CHECK(c.v[0] == a.v[0]);
  CHECK(c.v[1] == a.v[1]);

  const DocumentCorpus d = generate_corpus(vocab, 4, 100, 43);
  CHECK(d.v != a.v);

  CHECK_THROWS_AS(generate_corpus(vocab, 1, 100, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_corpus(vocab, 2, 0, 0), std::invalid_argument);
}

TEST_CASE("debug serialization round-trips through json") {
  const QueryRepresentation q = build_query({2, 1, 2}, std::vector<int>{2});
  const nlohmann::json jq = nlohmann::json::parse(query_to_json(q));
  CHECK(jq["L_q"] == 5);
  CHECK(jq["M"] == 3);
  CHECK(jq["K_q"] == 2);
  CHECK(jq["support"] == nlohmann::json({0, 1}));
  CHECK(jq["v"]["0"] == doctest::Approx(0.4));
  CHECK(jq["v"].contains("2") == false);

  const ZipfVocabulary vocab = make_vocabulary(5, 1.0);
  const DocumentCorpus corpus = generate_corpus(vocab, 3, 50, 1);
  const nlohmann::json jc = nlohmann::json::parse(corpus_to_json(corpus));
  CHECK(jc["n"] == 3);
  CHECK(jc["L_doc"] == 50);
  CHECK(jc["documents"].size() == 3);
}
