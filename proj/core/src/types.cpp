#include "activedpo/types.hpp"

#include <cstdio>

#include "activedpo/errors.hpp"
#include "activedpo/rng.hpp"

namespace activedpo {

std::string_view to_string(Side side) { return side == Side::A ? "A" : "B"; }

std::string_view to_string(LabelSource source) {
  return source == LabelSource::Simulated ? "simulated" : "human";
}

std::optional<Side> parse_side(std::string_view text) {
  if (text == "A" || text == "a") return Side::A;
  if (text == "B" || text == "b") return Side::B;
  return std::nullopt;
}

std::optional<LabelSource> parse_label_source(std::string_view text) {
  if (text == "simulated") return LabelSource::Simulated;
  if (text == "human") return LabelSource::Human;
  return std::nullopt;
}

LabeledPair resolve(const Triplet& triplet, const PreferenceRecord& record) {
  if (triplet.id != record.triplet_id) {
    throw InvalidArgument("record " + std::to_string(record.triplet_id) +
                          " does not belong to triplet " + std::to_string(triplet.id));
  }
  if (record.winner == Side::A) {
    return {&triplet.prompt, &triplet.response_a, &triplet.response_b};
  }
  return {&triplet.prompt, &triplet.response_b, &triplet.response_a};
}

std::uint64_t content_hash(const Triplet& triplet) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const TokenSeq* seq : {&triplet.prompt, &triplet.response_a, &triplet.response_b}) {
    const auto length = static_cast<std::uint64_t>(seq->size());
    h = fnv1a64(&length, sizeof(length), h);
    h = fnv1a64(seq->data(), seq->size() * sizeof(Token), h);
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace activedpo
