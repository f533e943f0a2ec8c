#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace beta3irt {

/// Derive an independent stream seed from a base seed and a stream tag
/// (splitmix64 finalizer). Used to give repetitions, scan points and noise
/// injections their own reproducible streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Deterministic random source. All transforms are implemented here (rather
/// than through std:: distributions) so that a given seed yields the same
/// stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
  double normal();

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape);

  /// Beta(a, b) as a gamma ratio. Degenerate underflow (both gammas zero)
  /// falls back to a Bernoulli draw on the Beta mean, matching the limit.
  double beta(double a, double b);

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n,
                                                        std::uint32_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace beta3irt
