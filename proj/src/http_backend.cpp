#include "w2s/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "w2s/errors.hpp"
#include "w2s/model_json.hpp"

namespace w2s {

struct HttpBackend::Impl {
  HttpBackendConfig config;
  std::string token;

  explicit Impl(HttpBackendConfig cfg) : config(std::move(cfg)) {
    if (!config.auth_token_env.empty()) {
      const char* value = std::getenv(config.auth_token_env.c_str());
      if (value == nullptr) {
        throw UsageError("auth token environment variable not set: " + config.auth_token_env);
      }
      token = value;
    }
  }

  RetryPolicy retry_policy() const {
    return RetryPolicy{config.retry_attempts, config.backoff_base_ms};
  }

  httplib::Headers headers() const {
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    return h;
  }

  // One round trip. Maps transport-level and 5xx failures to TransportError
  // (the retry layer's signal); 404 to ResolutionError; other 4xx to
  // UsageError carrying the server's message.
  nlohmann::json round_trip(const std::string& base_url, const std::string& path,
                            const std::optional<nlohmann::json>& body) {
    httplib::Client client(base_url);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);

    httplib::Result result =
        body ? client.Post(path, headers(), body->dump(), "application/json")
             : client.Get(path, headers());
    if (!result) {
      throw TransportError(base_url + path + ": " + httplib::to_string(result.error()), 1);
    }
    if (result->status == 404) {
      throw ResolutionError(base_url + path + ": not found: " + result->body);
    }
    if (result->status >= 500) {
      throw TransportError(base_url + path + ": HTTP " + std::to_string(result->status) + ": " +
                               result->body,
                           1);
    }
    if (result->status >= 400) {
      throw UsageError(base_url + path + ": HTTP " + std::to_string(result->status) + ": " +
                       result->body);
    }
    try {
      return nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw TransportError(base_url + path + ": malformed response body: " + e.what(), 1);
    }
  }

  nlohmann::json call(const std::string& base_url, const std::string& path,
                      const std::optional<nlohmann::json>& body) {
    return retry_transport(retry_policy(), [&] { return round_trip(base_url, path, body); });
  }
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

std::vector<std::string> HttpBackend::generate(const ModelRef& model, const std::string& prompt,
                                               const SamplingParams& params) {
  params.validate();
  if (prompt.empty()) throw UsageError("generate called with an empty prompt");

  const nlohmann::json body{{"model", model.id},
                            {"prompt", prompt},
                            {"n_samples", params.n_samples},
                            {"temperature", params.temperature},
                            {"max_length", params.max_length},
                            {"seed", params.seed}};
  const nlohmann::json reply = impl_->call(impl_->config.generation_url, "/generate", body);
  std::vector<std::string> completions;
  try {
    completions = reply.at("completions").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("generate: malformed reply: ") + e.what(), 1);
  }
  if (completions.size() != static_cast<std::size_t>(params.n_samples)) {
    throw TransportError("generate: expected " + std::to_string(params.n_samples) +
                             " completions, got " + std::to_string(completions.size()),
                         1);
  }
  return completions;
}

std::vector<EmbeddingVector> HttpBackend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw UsageError("embed called with no texts");
  for (const auto& text : texts) {
    if (text.empty()) throw UsageError("embed called with an empty text");
  }

  const nlohmann::json body{{"texts", texts}};
  const nlohmann::json reply = impl_->call(impl_->config.embedding_url, "/embed", body);
  std::vector<EmbeddingVector> vectors;
  try {
    for (const auto& v : reply.at("vectors")) {
      vectors.emplace_back(v.get<std::vector<double>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("embed: malformed reply: ") + e.what(), 1);
  }
  if (vectors.size() != texts.size()) {
    throw TransportError("embed: expected " + std::to_string(texts.size()) + " vectors, got " +
                             std::to_string(vectors.size()),
                         1);
  }
  return vectors;
}

ModelRef HttpBackend::finetune(const ModelRef& base, const std::vector<TrainingPair>& corpus,
                               const std::string& tag) {
  if (corpus.empty()) throw UsageError("finetune called with an empty corpus");
  if (tag.empty()) throw UsageError("finetune called with an empty tag");

  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pair : corpus) {
    pairs.push_back({{"prompt", pair.prompt}, {"target", pair.target}});
  }
  const nlohmann::json body{{"base", to_json(base)}, {"corpus", pairs}, {"tag", tag}};
  const nlohmann::json reply = impl_->call(impl_->config.finetune_url, "/finetune", body);
  if (reply.contains("error")) {
    throw JobError("finetune job failed: " + reply.at("error").get<std::string>());
  }
  try {
    return model_ref_from_json(reply.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("finetune: malformed reply: ") + e.what(), 1);
  }
}

bool HttpBackend::can_resolve(const std::string& model_id) {
  try {
    resolve(model_id);
    return true;
  } catch (const ResolutionError&) {
    return false;
  }
}

ModelRef HttpBackend::resolve(const std::string& model_id) {
  const nlohmann::json reply =
      impl_->call(impl_->config.generation_url, "/models/" + model_id, std::nullopt);
  try {
    return model_ref_from_json(reply);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("resolve: malformed reply: ") + e.what(), 1);
  }
}

}  // namespace w2s
