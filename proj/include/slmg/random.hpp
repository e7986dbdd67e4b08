#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace slmg {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives a child seed from a root seed and a path of stream tags.
/// derive_seed(root, {a, b}) == derive_seed(derive_seed(root, {a}), {b}).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded random stream with portable output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distribution transforms below are implemented here rather
/// than taken from <random>, whose distributions are implementation-defined,
/// so every draw is reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) without modulo bias. n must be > 0.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller (one draw consumes two uniforms).
  double normal();

  /// log of a Gamma(shape, 1) variate. Working in log space keeps tiny
  /// shapes (where the variate underflows to 0) usable for Dirichlet draws.
  double log_gamma_variate(double shape);

  /// Draws an index with probability proportional to weights (sum > 0).
  std::size_t categorical(std::span<const double> weights);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Draws k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace slmg
