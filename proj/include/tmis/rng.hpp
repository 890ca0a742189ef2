#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace tmis {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a sequence of integers into one 64-bit stream key. Order matters:
/// derive_key({a, b}) and derive_key({b, a}) are unrelated keys.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept;

/// FNV-1a, used to turn names (estimator tags) into key components.
std::uint64_t hash_name(std::string_view name) noexcept;

/// Counter-based generator: draw i of the stream with key k is
/// mix64(k + (i + 1) * golden_gamma), i.e. SplitMix64 evaluated at an
/// explicit counter. A stream is fully determined by its key, so substreams
/// handed to different workers give the same numbers under any schedule.
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  /// Independent child stream, keyed by (this key, index).
  CounterRng substream(std::uint64_t index) const noexcept {
    return CounterRng(derive_key({key_, index}));
  }

  result_type operator()() noexcept { return mix64(key_ + (++counter_) * golden_gamma); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tmis
