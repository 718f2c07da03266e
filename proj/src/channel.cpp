#include "retsim/channel.hpp"

#include <stdexcept>

namespace retsim {

std::vector<std::uint8_t> sample_indicators(const std::vector<double>& p,
                                            CounterRng& rng) {
  std::vector<std::uint8_t> e(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0 && p[i] <= 1.0))
      throw std::invalid_argument("sample_indicators: probability outside [0,1]");
    e[i] = rng.bernoulli(p[i]) ? 1 : 0;
  }
  return e;
}

std::vector<std::uint8_t> sample_indicators(const std::vector<double>& p,
                                            std::uint64_t seed) {
  CounterRng rng(seed, streams::kErasure);
  return sample_indicators(p, rng);
}

std::vector<std::uint8_t> sample_indicators_copy_level(
    const std::vector<int>& r, double epsilon, CounterRng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("sample_indicators_copy_level: bad epsilon");
  std::vector<std::uint8_t> e(r.size(), 0);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 0)
      throw std::invalid_argument("sample_indicators_copy_level: negative r");
    for (int c = 0; c < r[i]; ++c) {
      // copy survives with probability 1 - epsilon
      if (!rng.bernoulli(epsilon)) {
        e[i] = 1;
        // remaining copies still consume draws so the outcome of later
        // coordinates does not depend on this one
      }
    }
  }
  return e;
}

std::vector<double> reconstruct_query(const std::vector<double>& v_q,
                                      const std::vector<std::uint8_t>& e) {
  if (v_q.size() != e.size())
    throw std::invalid_argument("reconstruct_query: length mismatch");
  std::vector<double> out(v_q.size());
  for (std::size_t i = 0; i < v_q.size(); ++i) out[i] = e[i] ? v_q[i] : 0.0;
  return out;
}

std::vector<int> erase_token_sequence(const std::vector<int>& tokens,
                                      const std::vector<int>& r, double epsilon,
                                      CounterRng& rng) {
  if (tokens.size() != r.size())
    throw std::invalid_argument("erase_token_sequence: length mismatch");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("erase_token_sequence: bad epsilon");
  std::vector<int> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (r[i] < 0)
      throw std::invalid_argument("erase_token_sequence: negative r");
    double gone = 1.0;
    for (int c = 0; c < r[i]; ++c) gone *= epsilon;
    if (rng.uniform() < 1.0 - gone) kept.push_back(tokens[i]);
  }
  return kept;
}

}  // namespace retsim
