#pragma once

#include <cstdint>
#include <random>

namespace mcml {

/// Seeded 64-bit Mersenne twister. Variates are built from raw engine
/// output only, so sequences are bit-identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Child stream for replication `index`; see derive_seed.
  RngStream split(std::uint64_t index) const { return RngStream(derive_seed(seed_, index)); }

  /// Seed of child `index`: two SplitMix64 finalizer rounds over the master
  /// seed and the index. Depends only on (master, index), never on
  /// scheduling.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mcml
