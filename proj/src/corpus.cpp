#include "retsim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "retsim/errors.hpp"

namespace retsim {

std::vector<double> zipf_probabilities(int N, double alpha) {
  if (N < 1) throw std::invalid_argument("zipf_probabilities: N must be >= 1");
  if (!(alpha >= 0.0))
    throw std::invalid_argument("zipf_probabilities: alpha must be >= 0");
  std::vector<double> p(N);
  for (int i = 0; i < N; ++i) p[i] = std::pow(static_cast<double>(i + 1), -alpha);
  const double norm = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= norm;
  return p;
}

ZipfVocabulary make_vocabulary(int N, double alpha, int l_s) {
  if (l_s < 0 || l_s > N)
    throw std::invalid_argument("make_vocabulary: l_s outside [0, N]");
  ZipfVocabulary vocab;
  vocab.N = N;
  vocab.alpha = alpha;
  vocab.l_s = l_s;
  vocab.probs = zipf_probabilities(N, alpha);
  vocab.cdf.resize(N);
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    acc += vocab.probs[i];
    vocab.cdf[i] = acc;
  }
  vocab.cdf[N - 1] = 1.0;  // uniform() < 1, so every draw lands in range
  return vocab;
}

int sample_rank(const ZipfVocabulary& vocab, CounterRng& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(vocab.cdf.begin(), vocab.cdf.end(), u);
  return static_cast<int>(it - vocab.cdf.begin());
}

std::vector<int> sample_counts(const ZipfVocabulary& vocab, int length,
                               CounterRng& rng) {
  if (length < 0) throw std::invalid_argument("sample_counts: negative length");
  std::vector<int> counts(vocab.N, 0);
  for (int t = 0; t < length; ++t) ++counts[sample_rank(vocab, rng)];
  return counts;
}

std::vector<int> sample_counts(const ZipfVocabulary& vocab, int length,
                               std::uint64_t seed) {
  CounterRng rng(seed, streams::kQuery);
  return sample_counts(vocab, length, rng);
}

namespace {
QueryRepresentation build_query_masked(const std::vector<int>& counts,
                                       const std::vector<char>& stop) {
  const int N = static_cast<int>(counts.size());
  QueryRepresentation q;
  q.counts = counts;
  long long total = 0, kept = 0;
  for (int i = 0; i < N; ++i) {
    if (counts[i] < 0)
      throw std::invalid_argument("build_query: negative count");
    total += counts[i];
    if (!stop[i]) kept += counts[i];
  }
  if (total < 1) throw std::invalid_argument("build_query: empty query");
  q.L_q = static_cast<int>(total);
  q.M = static_cast<int>(kept);
  if (q.M == 0)
    throw EmptySupportError("build_query: every token is a stop word");
  q.tf.resize(N);
  q.v.resize(N);
  for (int i = 0; i < N; ++i) {
    q.tf[i] = static_cast<double>(counts[i]) / q.L_q;
    q.v[i] = stop[i] ? 0.0 : q.tf[i];
    if (q.v[i] != 0.0) q.support.push_back(i);
  }
  return q;
}
}  // namespace

QueryRepresentation build_query(const std::vector<int>& counts,
                                const std::vector<int>& stopwords) {
  const int N = static_cast<int>(counts.size());
  std::vector<char> stop(N, 0);
  for (int s : stopwords) {
    if (s < 0 || s >= N)
      throw std::invalid_argument("build_query: stop word rank outside [0, N)");
    stop[s] = 1;
  }
  return build_query_masked(counts, stop);
}

QueryRepresentation build_query(const std::vector<int>& counts, int l_s) {
  const int N = static_cast<int>(counts.size());
  if (l_s < 0 || l_s > N)
    throw std::invalid_argument("build_query: l_s outside [0, N]");
  std::vector<char> stop(N, 0);
  std::fill(stop.begin(), stop.begin() + l_s, 1);
  return build_query_masked(counts, stop);
}

std::vector<double> idf_weights(const std::vector<int>& presence, int n) {
  std::vector<double> zeta(presence.size());
  for (std::size_t i = 0; i < presence.size(); ++i) {
    if (presence[i] < 0 || presence[i] > n)
      throw std::invalid_argument("idf_weights: presence count outside [0, n]");
    zeta[i] = std::log(static_cast<double>(n + 1) / (presence[i] + 1));
  }
  return zeta;
}

DocumentCorpus generate_corpus(const ZipfVocabulary& vocab, int n, int L_doc,
                               std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_corpus: n must be >= 2");
  if (L_doc < 1)
    throw std::invalid_argument("generate_corpus: L_doc must be >= 1");
  DocumentCorpus corpus;
  corpus.n = n;
  corpus.L_doc = L_doc;
  corpus.v.resize(n);
  corpus.presence.assign(vocab.N, 0);
  for (int j = 0; j < n; ++j) {
    CounterRng rng(seed, combine_all({streams::kCorpus,
                                      static_cast<std::uint64_t>(j)}));
    const std::vector<int> counts = sample_counts(vocab, L_doc, rng);
    corpus.v[j].resize(vocab.N);
    for (int i = 0; i < vocab.N; ++i) {
      corpus.v[j][i] = static_cast<double>(counts[i]) / L_doc;
      if (counts[i] > 0) ++corpus.presence[i];
    }
  }
  corpus.zeta = idf_weights(corpus.presence, n);
  return corpus;
}

namespace {
nlohmann::json sparse_map(const std::vector<double>& v) {
  nlohmann::json m = nlohmann::json::object();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) m[std::to_string(i)] = v[i];
  return m;
}
}  // namespace

std::string query_to_json(const QueryRepresentation& q) {
  nlohmann::json j;
  j["L_q"] = q.L_q;
  j["M"] = q.M;
  j["K_q"] = q.K();
  j["support"] = q.support;
  j["v"] = sparse_map(q.v);
  return j.dump(2);
}

std::string corpus_to_json(const DocumentCorpus& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["L_doc"] = c.L_doc;
  j["zeta"] = sparse_map(c.zeta);
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& row : c.v) docs.push_back(sparse_map(row));
  j["documents"] = docs;
  return j.dump(2);
}

}  // namespace retsim
