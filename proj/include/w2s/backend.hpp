#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "w2s/errors.hpp"

namespace w2s {

// Role a model plays in the pipeline. Mostly used for bookkeeping and for
// script lookup on the mock backend; the wire protocol only carries ids.
enum class Role { Teacher, Student, Summarizer, Intermediate };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct LineageEntry {
  std::string tag;        // fine-tune tag, e.g. "teacher" or "student-stage1"
  std::string parent_id;  // id of the base model the fine-tune started from

  bool operator==(const LineageEntry&) const = default;
};

// Opaque handle to a model version. Fine-tune outputs append a LineageEntry
// for their base, so the full ancestry is recoverable from the ref alone.
struct ModelRef {
  std::string id;
  Role role = Role::Teacher;
  std::vector<LineageEntry> lineage;

  bool operator==(const ModelRef&) const = default;
};

struct SamplingParams {
  int n_samples = 100;
  double temperature = 1.0;
  int max_length = 512;
  std::uint64_t seed = 0;

  // Single deterministic completion; used for zero-shot, refinement and eval.
  static SamplingParams greedy(int max_length, std::uint64_t seed) {
    return SamplingParams{1, 0.0, max_length, seed};
  }

  // Throws UsageError when n_samples < 1, temperature < 0 or max_length < 1.
  void validate() const;
};

// Fixed-length real vector. Zero vectors are rejected at construction so
// cosine similarity is always defined.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// Throws UsageError on dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct TrainingPair {
  std::string prompt;
  std::string target;

  bool operator==(const TrainingPair&) const = default;
};

// Uniform interface to generation, embedding and supervised fine-tuning.
//
// Implementations must be safe for concurrent calls from multiple workers;
// callers fan out generate/embed per question, while finetune is invoked as
// a single exclusive job per stage.
class Backend {
 public:
  virtual ~Backend() = default;

  // Returns exactly params.n_samples completions. Order is stable for a fixed
  // seed on deterministic backends.
  // Throws ResolutionError for an unknown model, UsageError for an empty
  // prompt or invalid params, TransportError for transport failures.
  virtual std::vector<std::string> generate(const ModelRef& model,
                                            const std::string& prompt,
                                            const SamplingParams& params) = 0;

  // Embeds each text; output[i] corresponds to texts[i]. All vectors from one
  // backend instance share the same dimension.
  // Throws UsageError when texts is empty or contains an empty text.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;

  // Fine-tunes `base` on `corpus` and returns a new ModelRef whose lineage
  // extends the base's with (tag, base.id). Never mutates the base record.
  // Throws UsageError on an empty corpus, JobError on job failure.
  virtual ModelRef finetune(const ModelRef& base, const std::vector<TrainingPair>& corpus,
                            const std::string& tag) = 0;

  // Whether the backend can serve requests for this model id.
  virtual bool can_resolve(const std::string& model_id) = 0;

  // Returns the backend's record for the id. Throws ResolutionError.
  virtual ModelRef resolve(const std::string& model_id) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_base_ms = 100;  // sleep backoff_base_ms * 2^k after attempt k
};

// Runs op() up to policy.max_attempts times, retrying only TransportError
// with exponential backoff. The error finally thrown carries the total
// attempt count. Usage and resolution errors pass through untouched.
template <typename F>
auto retry_transport(const RetryPolicy& policy, F&& op) -> decltype(op()) {
  int backoff_ms = policy.backoff_base_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return op();
    } catch (const TransportError& e) {
      if (attempt >= policy.max_attempts) {
        throw TransportError(std::string(e.what()), attempt);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
  }
}

}  // namespace w2s
