#include "activedpo/rng.hpp"

#include <cmath>
#include <numbers>

#include "activedpo/errors.hpp"

namespace activedpo {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ fnv1a64(tag.data(), tag.size()));
  for (std::uint64_t index : indices) {
    key = mix64(key ^ mix64(index + 0x632be59bd9b4e019ULL));
  }
  return key;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view tag,
                     std::initializer_list<std::uint64_t> indices)
    : RngStream(derive_key(seed, tag, indices)) {}

RngStream::RngStream(std::uint64_t key) : key_(key), engine_(key) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("uniform_int needs a positive range");
  // Rejection sampling on the top of the range removes modulo bias.
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t draw = engine_();
  while (draw > limit) draw = engine_();
  return draw % n;
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(mix64(key_ ^ mix64(index + 0x2545f4914f6cdd1dULL)));
}

}  // namespace activedpo
