#pragma once

#include <stdexcept>
#include <string>

namespace w2s {

// Caller passed something invalid (empty corpus, bad variant, malformed file).
// Never retried.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// A model id could not be resolved by the backend.
class ResolutionError : public std::runtime_error {
 public:
  explicit ResolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transient transport failure talking to a remote backend. Carries the number
// of attempts made before giving up (1 when thrown from inside a single call).
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& msg, int attempts)
      : std::runtime_error(msg), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 1;
};

// A fine-tune job failed server-side; message carries job diagnostics.
class JobError : public std::runtime_error {
 public:
  explicit JobError(const std::string& msg) : std::runtime_error(msg) {}
};

// A persisted artifact no longer matches its recorded digest.
class CorruptionError : public std::runtime_error {
 public:
  explicit CorruptionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage could not produce its output (e.g. every question failed).
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace w2s
