#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace affdbn {

/// Reproducible generator used for every stochastic step in the toolkit.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random>, because the standard distributions are implementation-defined
/// and would break cross-platform bit reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the polar Box-Muller method.
  double normal();

  /// Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates, walking from the back.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent sub-stream seed from a run seed and a tag.
/// FNV-1a over the tag, mixed with the seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace affdbn
