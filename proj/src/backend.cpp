#include "w2s/backend.hpp"

#include <cmath>

#include "w2s/errors.hpp"

namespace w2s {

std::string to_string(Role role) {
  switch (role) {
    case Role::Teacher: return "teacher";
    case Role::Student: return "student";
    case Role::Summarizer: return "summarizer";
    case Role::Intermediate: return "intermediate";
  }
  throw UsageError("unknown role value");
}

Role role_from_string(const std::string& s) {
  if (s == "teacher") return Role::Teacher;
  if (s == "student") return Role::Student;
  if (s == "summarizer") return Role::Summarizer;
  if (s == "intermediate") return Role::Intermediate;
  throw UsageError("unknown role: " + s);
}

void SamplingParams::validate() const {
  if (n_samples < 1) throw UsageError("n_samples must be >= 1");
  if (temperature < 0.0) throw UsageError("temperature must be >= 0");
  if (max_length < 1) throw UsageError("max_length must be >= 1");
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw UsageError("embedding vector must be non-empty");
  if (norm() <= 0.0) throw UsageError("zero embedding vector rejected");
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw UsageError("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
  return dot / (a.norm() * b.norm());
}

}  // namespace w2s
