#ifndef DCMT_RNG_HPP
#define DCMT_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace dcmt {

using Rng = std::mt19937_64;

/// Engine seeded from a list of integers (run seed, episode, stream tag, ...).
Rng make_rng(std::initializer_list<std::uint64_t> words);

/// Distribution objects are created per draw so no hidden state survives
/// between calls; engine state alone determines every future draw.
double uniform01(Rng& rng);
std::int64_t poisson(Rng& rng, double mean);
bool bernoulli(Rng& rng, double p);
std::size_t uniform_index(Rng& rng, std::size_t n);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

}  // namespace dcmt

#endif  // DCMT_RNG_HPP
