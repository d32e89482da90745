#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"

namespace w2s {

// One scripted response list. `selector` names either a model id or a role
// ("teacher", "student", ...); `key` is matched against the incoming prompt,
// first for equality and then as a substring.
struct MockScriptEntry {
  std::string selector;
  std::string key;
  std::vector<std::string> completions;

  bool operator==(const MockScriptEntry&) const = default;
};

// Lookup table driving MockBackend. Serializable so test fixtures can live
// on disk next to the run manifests that use them.
struct MockScript {
  std::vector<MockScriptEntry> entries;
  std::size_t embed_dim = 16;
  std::string fallback = "UNSCRIPTED";

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Deterministic in-memory backend. Generation is a pure lookup into the
// script; embeddings are unit vectors hashed from the text; fine-tuning
// mints a lineage-tagged ModelRef and keeps the corpus verbatim for audit.
//
// Entry selection for generate(model, prompt), most preferred first:
//   1. exact key match, selector == model.id
//   2. exact key match, selector == role name
//   3. longest substring key, id selector winning ties, then script order
//   4. the script-level fallback completion
// Completion i of an n-sample request is completions[i % completions.size()],
// so short scripts stay usable for large n.
class MockBackend : public Backend {
 public:
  MockBackend() = default;
  explicit MockBackend(MockScript script);
  // Movable so factories and test fixtures can hand back a configured
  // backend; the mutex guards state, not identity.
  MockBackend(MockBackend&& other) noexcept;

  // Makes an id resolvable. Re-registering the same id overwrites the record.
  void register_model(const ModelRef& model);

  std::vector<std::string> generate(const ModelRef& model, const std::string& prompt,
                                    const SamplingParams& params) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  ModelRef finetune(const ModelRef& base, const std::vector<TrainingPair>& corpus,
                    const std::string& tag) override;
  bool can_resolve(const std::string& model_id) override;
  ModelRef resolve(const std::string& model_id) override;

  struct GenerateCall {
    std::string model_id;
    std::string prompt;
    int n_samples = 0;
  };

  // Every generate() in call order; lets tests assert which models spoke.
  std::vector<GenerateCall> generate_log() const;

  // Corpus submitted when `model_id` was fine-tuned. Throws ResolutionError
  // for ids that did not come out of finetune().
  std::vector<TrainingPair> stored_corpus(const std::string& model_id) const;

 private:
  const MockScriptEntry* match_entry(const ModelRef& model, const std::string& prompt) const;

  mutable std::mutex mutex_;
  MockScript script_;
  std::map<std::string, ModelRef> models_;
  std::map<std::string, std::vector<TrainingPair>> corpora_;
  std::vector<GenerateCall> log_;
};

// The embedding MockBackend assigns to `text`: a unit vector of `dim`
// components seeded from a stable hash of the text. Exposed so tests can
// recompute vectors without a backend instance.
EmbeddingVector mock_embedding(const std::string& text, std::size_t dim);

}  // namespace w2s
