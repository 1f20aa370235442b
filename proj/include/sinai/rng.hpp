#pragma once

#include <cstdint>
#include <limits>

namespace sinai {

/// Stream identifiers. Every random quantity in the toolkit is addressed by
/// (master_seed, stream, substream, counter) so that no draw depends on the
/// order in which unrelated work happens.
enum class Stream : std::uint64_t {
  environment = 1,
  initial_field = 2,
  dynamics = 3,
  poisson_field = 4,
  trial_seed = 5,
  start_sites = 6,
  bootstrap = 7,
};

/// Stafford's "Mix13" 64-bit finalizer (the SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a 64-bit stream key from a seed, stream id and substream index.
constexpr std::uint64_t derive_key(std::uint64_t seed, Stream stream,
                                   std::uint64_t substream = 0) noexcept {
  std::uint64_t k = mix64(seed + 0x9e3779b97f4a7c15ULL);
  k = mix64(k ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
  return mix64(k ^ (substream * 0xaef17502108ef2d9ULL + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the n-th output is a pure function of the key
/// and n. Satisfies UniformRandomBitGenerator so it plugs into <random> and
/// Boost.Random distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng() noexcept = default;
  constexpr CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) noexcept
      : key_(derive_key(seed, stream, substream)) {}

  static constexpr CounterRng from_key(std::uint64_t key) noexcept {
    CounterRng r;
    r.key_ = key;
    return r;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return at(counter_++); }

  /// Random access into the stream; does not move the internal counter.
  constexpr result_type at(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() noexcept { return to_unit(operator()()); }

  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace sinai
