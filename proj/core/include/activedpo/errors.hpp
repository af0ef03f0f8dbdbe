#pragma once

#include <stdexcept>
#include <string>

namespace activedpo {

// Base of every error raised by the library. kind() is a stable, machine
// readable tag used by the CLI and the annotation service error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension_error", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format_error", message) {}
};

// Raised when the candidate pool cannot supply a full batch.
class PoolExhausted : public Error {
 public:
  explicit PoolExhausted(const std::string& message) : Error("pool_exhausted", message) {}
};

// Non-finite loss or gradient during training. dump() holds a JSON snapshot
// of the optimizer state at the failing step.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, std::string dump)
      : Error("training_diverged", message), dump_(std::move(dump)) {}

  const std::string& dump() const noexcept { return dump_; }

 private:
  std::string dump_;
};

// Annotation session operation attempted in the wrong state.
class StateError : public Error {
 public:
  StateError(const std::string& message, std::string state)
      : Error("state_error", message), state_(std::move(state)) {}

  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

}  // namespace activedpo
