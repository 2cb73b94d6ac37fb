#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gelato {

// Derives an independent child seed from a root seed and a fixed label, so
// every component draws from its own stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index);

// splitmix64 finalizer; also used to hash (seed, pair) into dropout masks.
std::uint64_t mix64(std::uint64_t x);

// Seeded generator. All draws are implemented on raw 64-bit output so the
// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal (Marsaglia polar method).
  double normal();

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gelato
