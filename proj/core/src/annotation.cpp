#include "activedpo/annotation.hpp"

#include <algorithm>
#include <filesystem>

#include "activedpo/errors.hpp"
#include "activedpo/harness.hpp"
#include "activedpo/io.hpp"
#include "activedpo/serialize.hpp"

namespace activedpo {

using nlohmann::json;

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string default_glyph(Token token) {
  const std::size_t per_round = kConsonants.size() * kVowels.size();
  std::string g;
  g += kConsonants[token % kConsonants.size()];
  g += kVowels[(token / kConsonants.size()) % kVowels.size()];
  if (token >= per_round) g += std::to_string(token / per_round);
  return g;
}

}  // namespace

GlyphMap::GlyphMap(std::vector<std::string> glyphs) : glyphs_(std::move(glyphs)) {}

GlyphMap GlyphMap::from_json(const json& j) {
  std::vector<std::string> glyphs;
  if (j.is_array()) {
    for (const auto& g : j) {
      if (!g.is_string()) throw FormatError("glyph map entries must be strings");
      glyphs.push_back(g.get<std::string>());
    }
  } else if (j.is_object()) {
    glyphs.resize(j.size());
    for (const auto& [key, value] : j.items()) {
      std::size_t pos = 0;
      unsigned long token = 0;
      try {
        token = std::stoul(key, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != key.size() || token >= glyphs.size())
        throw FormatError("glyph map keys must be the tokens 0.." + std::to_string(glyphs.size() - 1));
      if (!value.is_string()) throw FormatError("glyph map entries must be strings");
      glyphs[token] = value.get<std::string>();
    }
  } else {
    throw FormatError("glyph map must be a JSON array or object");
  }
  return GlyphMap(std::move(glyphs));
}

GlyphMap GlyphMap::load(const std::string& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError("glyph map '" + path + "': " + e.what());
  }
}

std::string GlyphMap::glyph(Token token) const {
  if (glyphs_.empty()) return default_glyph(token);
  if (token >= glyphs_.size()) throw InvalidArgument("token " + std::to_string(token) + " has no glyph");
  return glyphs_[token];
}

std::string GlyphMap::render(const TokenSeq& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += glyph(seq[i]);
  }
  return out;
}

void GlyphMap::check_covers(int vocab_size) const {
  if (!glyphs_.empty() && static_cast<int>(glyphs_.size()) < vocab_size)
    throw InvalidArgument("glyph map has " + std::to_string(glyphs_.size()) + " entries for vocabulary " +
                          std::to_string(vocab_size));
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::AwaitingLabels: return "awaiting_labels";
    case SessionState::Training: return "training";
    case SessionState::Idle: return "idle";
  }
  return "unknown";
}

json to_json(const BatchItem& item) {
  return {{"triplet_id", item.triplet.id},
          {"rank", item.rank},
          {"score", item.score},
          {"prompt", {{"tokens", item.triplet.prompt}, {"text", item.prompt_text}}},
          {"response_a", {{"tokens", item.triplet.response_a}, {"text", item.response_a_text}}},
          {"response_b", {{"tokens", item.triplet.response_b}, {"text", item.response_b_text}}}};
}

json to_json(const SessionStatus& s) {
  return {{"active", s.active},
          {"session_id", s.session_id},
          {"config_hash", s.config_hash},
          {"state", to_string(s.state)},
          {"iteration", s.iteration},
          {"iterations", s.iterations},
          {"batch_size", s.batch_size},
          {"labels_collected", s.labels_collected},
          {"remaining", s.remaining},
          {"metrics", s.latest ? metrics_row(*s.latest) : json(nullptr)},
          {"last_error", s.last_error.empty() ? json(nullptr) : json(s.last_error)}};
}

json to_json(const SubmitResult& r) {
  json j = {{"accepted", r.accepted},
            {"remaining", r.remaining},
            {"training_started", r.training_started},
            {"iteration", r.iteration}};
  if (!r.accepted) j["reason"] = r.reason;
  return j;
}

AnnotationService::AnnotationService(GlyphMap glyphs)
    : glyphs_(std::move(glyphs)), snapshot_(std::make_shared<Snapshot>()) {
  writer_ = std::jthread([this](std::stop_token stop) { writer_loop(stop); });
}

AnnotationService::~AnnotationService() {
  writer_.request_stop();
  queue_cv_.notify_all();
}

template <typename F>
auto AnnotationService::post(F task) -> std::future<decltype(task())> {
  using R = decltype(task());
  auto packaged = std::make_shared<std::packaged_task<R()>>(std::move(task));
  auto future = packaged->get_future();
  {
    std::lock_guard lock(queue_mutex_);
    queue_.emplace_back([packaged] { (*packaged)(); });
  }
  queue_cv_.notify_one();
  return future;
}

void AnnotationService::writer_loop(std::stop_token stop) {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, stop, [this] { return !queue_.empty(); });
      if (queue_.empty()) return;  // stop requested
      task = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    task();
    {
      std::lock_guard lock(queue_mutex_);
      busy_ = false;
    }
    settled_cv_.notify_all();
  }
}

void AnnotationService::wait_until_settled() {
  std::unique_lock lock(queue_mutex_);
  settled_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

std::shared_ptr<const AnnotationService::Snapshot> AnnotationService::snapshot() const {
  std::shared_lock lock(snapshot_mutex_);
  return snapshot_;
}

void AnnotationService::publish() {
  auto snap = std::make_shared<Snapshot>();
  SessionStatus& s = snap->status;
  s.state = state_;
  s.last_error = last_error_;
  if (runner_) {
    s.active = true;
    s.session_id = session_id_;
    s.config_hash = runner_->config_hash();
    s.iterations = runner_->config().selection.iterations;
    s.batch_size = runner_->config().selection.batch_size;
    s.iteration = state_ == SessionState::Idle ? runner_->iteration() : runner_->iteration() + 1;
    s.labels_collected = static_cast<std::int64_t>(runner_->labels().size() + received_.size());
    s.latest = runner_->history().back();
    for (const auto& item : batch_) {
      const bool done = std::any_of(received_.begin(), received_.end(),
                                    [&](const PreferenceRecord& r) { return r.triplet_id == item.triplet.id; });
      if (!done) snap->remaining.push_back(item);
    }
    s.remaining = state_ == SessionState::AwaitingLabels ? static_cast<int>(snap->remaining.size()) : 0;
  }
  snap->accepted = accepted_;
  std::unique_lock lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

SessionStatus AnnotationService::do_start(const RunConfig& config, const std::string& run_dir) {
  if (state_ != SessionState::Idle)
    throw StateError("a session is already " + std::string(to_string(state_)), std::string(to_string(state_)));
  config.validate();
  glyphs_.check_covers(config.model.vocab_size);
  std::unique_ptr<Runner> runner;
  if (run_dir.empty()) {
    runner = std::make_unique<Runner>(config);
  } else if (std::filesystem::exists(std::filesystem::path(run_dir) / "state.json")) {
    runner = Runner::resume(run_dir);
    if (runner->config_hash() != config_hash(config))
      throw ConfigError("run directory '" + run_dir + "' holds a run with a different configuration");
  } else {
    runner = Runner::create(config, run_dir);
  }
  runner_ = std::move(runner);
  received_.clear();
  accepted_.clear();
  batch_.clear();
  last_error_.clear();
  session_id_ = "session-" + std::to_string(++sessions_started_) + "-" + runner_->config_hash().substr(0, 8);
  open_next_batch();
  publish();
  return snapshot()->status;
}

void AnnotationService::open_next_batch() {
  batch_.clear();
  state_ = SessionState::Idle;
  if (runner_->finished()) return;
  const IterationPlan& plan = runner_->begin_iteration();
  for (const auto& selected : plan.items) {
    const Triplet& t = selected.triplet;
    batch_.push_back({t, selected.rank, selected.score, glyphs_.render(t.prompt), glyphs_.render(t.response_a),
                      glyphs_.render(t.response_b)});
  }
  state_ = SessionState::AwaitingLabels;
}

void AnnotationService::reject_while_training(const char* what) const {
  // Training holds the writer, so waiting in its queue would stall the caller
  // for a whole round. The snapshot already says the answer.
  if (snapshot()->status.state == SessionState::Training)
    throw StateError(std::string(what) + " while the session is training", "training");
}

SessionStatus AnnotationService::start(const RunConfig& config, const std::string& run_dir) {
  reject_while_training("cannot start a session");
  return post([this, config, run_dir] { return do_start(config, run_dir); }).get();
}

SessionStatus AnnotationService::start_from_file(const std::string& config_path, const std::string& run_dir) {
  return start(load_config(config_path), run_dir);
}

SessionStatus AnnotationService::status() const { return snapshot()->status; }

std::vector<BatchItem> AnnotationService::next_batch() const {
  const auto snap = snapshot();
  if (snap->status.state != SessionState::AwaitingLabels) {
    const std::string state(to_string(snap->status.state));
    throw StateError("no batch is open while the session is " + state, state);
  }
  return snap->remaining;
}

std::vector<PreferenceRecord> AnnotationService::accepted_labels() const { return snapshot()->accepted; }

SubmitResult AnnotationService::submit_label(TripletId triplet_id, Side winner) {
  reject_while_training("labels are not accepted");
  return post([this, triplet_id, winner] {
           if (state_ != SessionState::AwaitingLabels) {
             const std::string state(to_string(state_));
             throw StateError("labels are not accepted while the session is " + state, state);
           }
           SubmitResult result;
           result.iteration = runner_->iteration() + 1;
           const auto remaining = [this] { return static_cast<int>(batch_.size() - received_.size()); };
           const bool pending = std::any_of(batch_.begin(), batch_.end(),
                                            [&](const BatchItem& b) { return b.triplet.id == triplet_id; });
           const bool seen = std::any_of(received_.begin(), received_.end(),
                                         [&](const PreferenceRecord& r) { return r.triplet_id == triplet_id; });
           if (!pending || seen) {
             result.reason = pending ? "duplicate" : "unknown";
             result.remaining = remaining();
             return result;
           }
           const PreferenceRecord record{triplet_id, winner, LabelSource::Human, result.iteration};
           received_.push_back(record);
           accepted_.push_back(record);
           result.accepted = true;
           result.remaining = remaining();
           if (result.remaining == 0) {
             state_ = SessionState::Training;
             result.training_started = true;
             // Queued behind this task, so training still runs on the writer.
             std::lock_guard lock(queue_mutex_);
             queue_.emplace_back([this] { train_round(); });
           }
           publish();
           return result;
         })
      .get();
}

void AnnotationService::set_before_training(std::function<void()> hook) {
  post([this, hook = std::move(hook)]() mutable { before_training_ = std::move(hook); }).get();
}

void AnnotationService::train_round() {
  try {
    if (before_training_) before_training_();
    runner_->complete_iteration(received_);
    received_.clear();
    open_next_batch();
  } catch (const std::exception& e) {
    // The runner rolled back the failed round. The session stops here; a
    // persisted run can be picked up again with start().
    state_ = SessionState::Idle;
    last_error_ = e.what();
  }
  publish();
}

}  // namespace activedpo
