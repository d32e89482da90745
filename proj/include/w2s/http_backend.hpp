#pragma once

#include <memory>
#include <string>

#include "w2s/backend.hpp"
#include "w2s/config.hpp"

namespace w2s {

// Backend over three HTTP services (generation, embedding, fine-tuning),
// possibly the same host. Request/response bodies are JSON mirrors of the
// operation signatures:
//   POST <generation_url>/generate  {model, prompt, n_samples, temperature,
//                                    max_length, seed} → {completions: [...]}
//   GET  <generation_url>/models/<id>                  → {model record} | 404
//   POST <embedding_url>/embed      {texts: [...]}     → {vectors: [[...]]}
//   POST <finetune_url>/finetune    {base, corpus, tag} → {model: {...}}
//
// The bearer token comes from the environment variable named in the config;
// requests carry no other credentials. Connection failures and 5xx map to
// TransportError and are retried with exponential backoff; 404 on a model
// becomes ResolutionError; other 4xx become UsageError.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::vector<std::string> generate(const ModelRef& model, const std::string& prompt,
                                    const SamplingParams& params) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  ModelRef finetune(const ModelRef& base, const std::vector<TrainingPair>& corpus,
                    const std::string& tag) override;
  bool can_resolve(const std::string& model_id) override;
  ModelRef resolve(const std::string& model_id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace w2s
