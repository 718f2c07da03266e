#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retsim/rng.hpp"

namespace retsim {

struct ZipfVocabulary {
  int N = 0;
  double alpha = 1.0;
  int l_s = 0;                // ranks [0, l_s) are stop words
  std::vector<double> probs;  // non-increasing, sums to 1
  std::vector<double> cdf;    // inclusive prefix sums; cdf[N-1] == 1

  bool is_stopword(int i) const { return i < l_s; }
};

// pi_i = (i+1)^-alpha / sum_j (j+1)^-alpha over ranks 0..N-1.
std::vector<double> zipf_probabilities(int N, double alpha);

ZipfVocabulary make_vocabulary(int N, double alpha, int l_s = 0);

// One categorical draw: a rank index distributed per vocab.probs.
int sample_rank(const ZipfVocabulary& vocab, CounterRng& rng);

// Multinomial counts from `length` independent draws.
std::vector<int> sample_counts(const ZipfVocabulary& vocab, int length,
                               CounterRng& rng);
std::vector<int> sample_counts(const ZipfVocabulary& vocab, int length,
                               std::uint64_t seed);

struct QueryRepresentation {
  std::vector<int> counts;
  int L_q = 0;
  std::vector<double> tf;    // counts / L_q
  std::vector<double> v;     // stop-word-masked tf
  std::vector<int> support;  // ascending ranks with v != 0
  int M = 0;                 // non-stopword token count

  int K() const { return static_cast<int>(support.size()); }
};

// Throws EmptySupportError when every token is a stop word (M = 0).
// `stopwords` holds masked ranks (0-based, any order, duplicates allowed).
QueryRepresentation build_query(const std::vector<int>& counts,
                                const std::vector<int>& stopwords);
// Prefix convenience: masks ranks [0, l_s).
QueryRepresentation build_query(const std::vector<int>& counts, int l_s);

struct DocumentCorpus {
  int n = 0;
  int L_doc = 0;
  std::vector<std::vector<double>> v;  // per-document tf rows
  std::vector<int> presence;           // n_i: documents containing term i
  std::vector<double> zeta;            // log((n+1)/(n_i+1))
};

std::vector<double> idf_weights(const std::vector<int>& presence, int n);

// n documents sampled from the vocabulary distribution; idf comes from the
// realized term presence, not the generative model.
DocumentCorpus generate_corpus(const ZipfVocabulary& vocab, int n, int L_doc,
                               std::uint64_t seed);

// Debug snapshots; sparse vectors serialize as rank -> value maps.
std::string query_to_json(const QueryRepresentation& q);
std::string corpus_to_json(const DocumentCorpus& c);

}  // namespace retsim
