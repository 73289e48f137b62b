#pragma once

#include <cstdint>

#include "omit/special.hpp"

namespace omit {

/// Counter-based deterministic random stream. A stream is identified by a
/// 64-bit key; draws are pure functions of (key, counter), so results do
/// not depend on evaluation order or thread schedule. Substreams are
/// derived by hashing ids into the key.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : key_(mix(0x9e3779b97f4a7c15ULL, seed)) {}

  RandomStream sub(std::uint64_t id) const { return RandomStream(key_, id); }

  std::uint64_t raw(std::uint64_t counter) const { return mix(key_, counter); }

  /// Uniform draw in the open interval (0,1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(raw(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw via inverse-cdf transform.
  double normal(std::uint64_t counter) const {
    return std_normal_quantile(uniform(counter));
  }

  bool bernoulli(double p, std::uint64_t counter) const {
    return uniform(counter) < p;
  }

  std::uint64_t key() const { return key_; }

 private:
  RandomStream(std::uint64_t parent_key, std::uint64_t id) : key_(mix(parent_key, id)) {}

  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64 finalizer applied to the combined state.
    std::uint64_t x = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t key_;
};

}  // namespace omit
