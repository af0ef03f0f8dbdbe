#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace activedpo {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;
using TripletId = std::uint64_t;

// A prompt and an ordered pair of candidate responses.
struct Triplet {
  TripletId id = 0;
  TokenSeq prompt;
  TokenSeq response_a;
  TokenSeq response_b;
  int origin_iteration = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

enum class Side : std::uint8_t { A, B };
enum class LabelSource : std::uint8_t { Simulated, Human };

std::string_view to_string(Side side);
std::string_view to_string(LabelSource source);
std::optional<Side> parse_side(std::string_view text);
std::optional<LabelSource> parse_label_source(std::string_view text);

struct PreferenceRecord {
  TripletId triplet_id = 0;
  Side winner = Side::A;
  LabelSource source = LabelSource::Simulated;
  int labeled_at_iteration = 0;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

// Winner/loser view of a labeled triplet.
struct LabeledPair {
  const TokenSeq* prompt;
  const TokenSeq* winner;
  const TokenSeq* loser;
};

LabeledPair resolve(const Triplet& triplet, const PreferenceRecord& record);

// Per-iteration evaluation row.
struct Metrics {
  int iteration = 0;
  double mean_true_reward = 0.0;
  double win_rate = 0.5;
  std::string selector;
  std::int64_t labels_used = 0;
  double wall_time = 0.0;

  // Training summary for this iteration (zero at iteration 0).
  double train_initial_loss = 0.0;
  double train_final_loss = 0.0;
  double param_distance = 0.0;
  std::int64_t pool_size = 0;
  std::int64_t pool_dropped = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Content hash of a triplet's token sequences (id and iteration excluded).
std::uint64_t content_hash(const Triplet& triplet);
std::string hex64(std::uint64_t value);

}  // namespace activedpo
