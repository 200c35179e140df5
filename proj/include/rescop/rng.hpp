#pragma once

#include <cstdint>
#include <random>

#include "rescop/special.hpp"

namespace rescop {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic random stream.  Substreams derived from (seed, index) are
// statistically independent, so parallel replications can each own one and
// results stay identical no matter how work is scheduled across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static RngStream substream(std::uint64_t seed, std::uint64_t index) {
    return RngStream(splitmix64(seed) + 0x9e3779b97f4a7c15ull * (index + 1));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Strictly inside (0, 1); 53-bit resolution, never returns an endpoint.
  double uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return special::normal_quantile(uniform_open01()); }

  double exponential() { return -std::log1p(-uniform_open01()); }

  double gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
  }

  long poisson(double mean) {
    std::poisson_distribution<long> dist(mean);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rescop
