#pragma once

#include <cstdint>
#include <vector>

#include "retsim/rng.hpp"

namespace retsim {

// Independent Bernoulli(p_i) survival indicators at the coordinate level.
std::vector<std::uint8_t> sample_indicators(const std::vector<double>& p,
                                            CounterRng& rng);
std::vector<std::uint8_t> sample_indicators(const std::vector<double>& p,
                                            std::uint64_t seed);

// Validation mode: simulates every one of the r_i copies through the erasure
// channel; coordinate i survives when at least one copy does. Distributed
// identically to the aggregated mode with p_i = 1 - epsilon^{r_i}.
std::vector<std::uint8_t> sample_indicators_copy_level(
    const std::vector<int>& r, double epsilon, CounterRng& rng);

// v_q elementwise-multiplied by the indicators.
std::vector<double> reconstruct_query(const std::vector<double>& v_q,
                                      const std::vector<std::uint8_t>& e);

// Token i of the sequence survives with probability 1 - epsilon^{r_i};
// survivors keep their original order. Tokens with r_i = 0 always drop.
std::vector<int> erase_token_sequence(const std::vector<int>& tokens,
                                      const std::vector<int>& r, double epsilon,
                                      CounterRng& rng);

}  // namespace retsim
