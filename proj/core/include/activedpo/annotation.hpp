#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "activedpo/config.hpp"
#include "activedpo/types.hpp"

namespace activedpo {

class Runner;

// Token -> display string table, so annotators read pseudo-words instead of
// integer ids.
class GlyphMap {
 public:
  // Default table of consonant-vowel syllables, unique for any vocabulary.
  GlyphMap() = default;
  explicit GlyphMap(std::vector<std::string> glyphs);
  // Accepts either a JSON array of strings or an object {"<token>": "glyph"}
  // covering tokens 0..n-1.
  static GlyphMap from_json(const nlohmann::json& json);
  static GlyphMap load(const std::string& path);

  std::string glyph(Token token) const;
  std::string render(const TokenSeq& seq) const;
  // Throws InvalidArgument when an explicit table is shorter than the vocab.
  void check_covers(int vocab_size) const;

 private:
  std::vector<std::string> glyphs_;
};

enum class SessionState { AwaitingLabels, Training, Idle };
std::string_view to_string(SessionState state);

struct BatchItem {
  Triplet triplet;
  int rank = 0;
  double score = 0.0;
  std::string prompt_text;
  std::string response_a_text;
  std::string response_b_text;
};

struct SessionStatus {
  bool active = false;
  std::string session_id;
  std::string config_hash;
  SessionState state = SessionState::Idle;
  // The iteration being labeled (or trained), or the last one once idle.
  int iteration = 0;
  int iterations = 0;
  int batch_size = 0;
  // Accepted labels over the whole run, including the current batch.
  std::int64_t labels_collected = 0;
  // Labels still missing from the current batch.
  int remaining = 0;
  std::optional<Metrics> latest;
  std::string last_error;
};

struct SubmitResult {
  bool accepted = false;
  // "duplicate" or "unknown" when rejected.
  std::string reason;
  int remaining = 0;
  // The label completed the batch and training has been scheduled.
  bool training_started = false;
  int iteration = 0;
};

nlohmann::json to_json(const BatchItem& item);
nlohmann::json to_json(const SessionStatus& status);
nlohmann::json to_json(const SubmitResult& result);

// Human-in-the-loop front of a Runner.
//
// Every mutation, training included, runs on one writer thread in arrival
// order. After each mutation the writer publishes an
// immutable snapshot; status() and next_batch() read only the latest
// snapshot, so readers never block on training.
class AnnotationService {
 public:
  explicit AnnotationService(GlyphMap glyphs = {});
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Starts a session. A non-empty run_dir is resumed when it already holds a
  // run and created otherwise. Throws StateError while another session is
  // still collecting labels or training.
  SessionStatus start(const RunConfig& config, const std::string& run_dir = "");
  SessionStatus start_from_file(const std::string& config_path, const std::string& run_dir = "");

  SessionStatus status() const;
  // Unlabeled items of the current batch in rank order. Throws StateError
  // unless labels are being collected.
  std::vector<BatchItem> next_batch() const;
  SubmitResult submit_label(TripletId triplet_id, Side winner);

  // Every label accepted in this session, in acceptance order.
  std::vector<PreferenceRecord> accepted_labels() const;

  // Blocks until all queued work, including a scheduled training round, has
  // finished.
  void wait_until_settled();

  const GlyphMap& glyphs() const { return glyphs_; }

  // Called on the writer thread right before each training round, while the
  // session reports state training. Lets callers observe or pace that state.
  void set_before_training(std::function<void()> hook);

 private:
  struct Snapshot {
    SessionStatus status;
    std::vector<BatchItem> remaining;
    std::vector<PreferenceRecord> accepted;
  };

  template <typename F>
  auto post(F task) -> std::future<decltype(task())>;
  void writer_loop(std::stop_token stop);
  void publish();
  void train_round();
  void open_next_batch();
  void reject_while_training(const char* what) const;
  std::shared_ptr<const Snapshot> snapshot() const;
  SessionStatus do_start(const RunConfig& config, const std::string& run_dir);

  GlyphMap glyphs_;

  // Writer-owned state.
  std::unique_ptr<Runner> runner_;
  std::string session_id_;
  std::vector<BatchItem> batch_;
  std::vector<PreferenceRecord> received_;
  std::vector<PreferenceRecord> accepted_;
  SessionState state_ = SessionState::Idle;
  std::string last_error_;
  int sessions_started_ = 0;
  std::function<void()> before_training_;

  mutable std::shared_mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;

  std::mutex queue_mutex_;
  std::condition_variable_any queue_cv_;
  std::deque<std::function<void()>> queue_;
  bool busy_ = false;
  std::condition_variable_any settled_cv_;
  std::jthread writer_;
};

}  // namespace activedpo
