#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace p2pfl {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random bit generator.
///
/// A stream is named by a tuple of integers (for the simulator:
/// master seed, trial, node, round); the n-th output of the stream is a pure
/// function of (key, n). Two streams with the same key produce the same
/// sequence no matter which thread draws from them or in what order other
/// streams are consumed. Satisfies UniformRandomBitGenerator, so it plugs
/// into the <random> distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}
  CounterRng(std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t k = 0x243f6a8885a308d3ULL;
    for (std::uint64_t part : path) k = mix64(k ^ mix64(part));
    key_ = k;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return mix64(key_ ^ mix64(counter_++));
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace p2pfl
