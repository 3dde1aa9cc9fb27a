#pragma once

#include <cstdint>
#include <vector>

namespace mediator {

/// Deterministic random source. All randomness in the library flows through
/// this class so that results are reproducible bit-for-bit across platforms;
/// the standard <random> distributions are implementation-defined and are
/// deliberately not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Raw 64-bit draw (splitmix64).
  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent stream derived from this one's seed and a label; used to
  /// give folds/steps their own reproducible sources regardless of
  /// evaluation order.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t label);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mediator
