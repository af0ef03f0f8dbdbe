#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace activedpo {

// Deterministic random stream keyed by (seed, tag, indices...).
//
// Every random decision in a run draws from a stream derived this way, so a
// stream's contents depend only on its key and never on how many draws other
// components made before it. Resuming a run therefore only needs the
// iteration counter, not serialized engine state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::string_view tag,
            std::initializer_list<std::uint64_t> indices = {});

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; no cached second variate.
  double normal();
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  // A child stream keyed by this stream's key plus `index`. Does not advance
  // this stream.
  RngStream child(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

 private:
  explicit RngStream(std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

inline RngStream rng_stream(std::uint64_t seed, std::string_view stream_tag) {
  return RngStream(seed, stream_tag);
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// 64-bit FNV-1a over raw bytes, chained through `basis`.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace activedpo
