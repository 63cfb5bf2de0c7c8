#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace caradj {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Identifies an independent random stream. Keys are derived hierarchically,
/// e.g. (seed) -> (replication r) -> ("assign"), so a stream depends only on
/// its path and never on the order in which streams are consumed.
class StreamKey {
 public:
  constexpr StreamKey() = default;
  constexpr explicit StreamKey(std::uint64_t seed) : value_(detail::mix64(seed ^ 0xA0761D6478BD642FULL)) {}

  constexpr StreamKey child(std::uint64_t index) const noexcept {
    return from_raw(detail::mix64(value_ + detail::kGolden * (index + 1)) ^ 0xE7037ED1A0B428DBULL);
  }
  constexpr StreamKey child(std::string_view tag) const noexcept {
    return from_raw(detail::mix64(value_ ^ detail::fnv1a(tag)));
  }

  constexpr std::uint64_t value() const noexcept { return value_; }

 private:
  static constexpr StreamKey from_raw(std::uint64_t v) noexcept {
    StreamKey k;
    k.value_ = v;
    return k;
  }
  std::uint64_t value_ = 0;
};

/// Counter-based generator: the i-th output is a pure function of (key, i).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(StreamKey key, std::uint64_t counter = 0) : key_(key.value()), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return detail::mix64(key_ + detail::kGolden * (++counter_)); }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_low() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Bias is below 2^-53 relative for n < 2^32.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Box-Muller, one output per pair of uniforms.
  double normal() noexcept {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Marsaglia-Tsang; shapes below one use the U^(1/shape) boost.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double u = uniform_open_low();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open_low();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) noexcept {
    const double ga = gamma(a);
    const double gb = gamma(b);
    return ga / (ga + gb);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace caradj
