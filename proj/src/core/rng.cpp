#include "dcmt/rng.hpp"

#include <sstream>
#include <vector>

#include "dcmt/errors.hpp"

namespace dcmt {

Rng make_rng(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> seeds;
  for (std::uint64_t w : words) {
    seeds.push_back(static_cast<std::uint32_t>(w & 0xffffffffu));
    seeds.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq seq(seeds.begin(), seeds.end());
  return Rng(seq);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::int64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ContractError("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& text) {
  std::istringstream is(text);
  Rng rng;
  is >> rng;
  if (!is) throw FileError("corrupt random engine state");
  return rng;
}

}  // namespace dcmt
