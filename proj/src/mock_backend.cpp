#include "w2s/mock_backend.hpp"

#include <algorithm>
#include <cmath>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

MockScript MockScript::from_json(const nlohmann::json& j) {
  MockScript script;
  if (!j.is_object()) throw UsageError("mock script must be a JSON object");
  if (j.contains("embed_dim")) script.embed_dim = j.at("embed_dim").get<std::size_t>();
  if (script.embed_dim == 0) throw UsageError("mock script embed_dim must be >= 1");
  if (j.contains("fallback")) script.fallback = j.at("fallback").get<std::string>();
  for (const auto& e : j.value("entries", nlohmann::json::array())) {
    MockScriptEntry entry;
    entry.selector = e.at("selector").get<std::string>();
    entry.key = e.at("key").get<std::string>();
    entry.completions = e.at("completions").get<std::vector<std::string>>();
    if (entry.selector.empty()) throw UsageError("mock script entry with empty selector");
    if (entry.completions.empty()) {
      throw UsageError("mock script entry with no completions: selector=" + entry.selector);
    }
    script.entries.push_back(std::move(entry));
  }
  return script;
}

MockScript MockScript::load_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("mock script " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json MockScript::to_json() const {
  nlohmann::json out_entries = nlohmann::json::array();
  for (const auto& e : entries) {
    out_entries.push_back(
        {{"selector", e.selector}, {"key", e.key}, {"completions", e.completions}});
  }
  return {{"embed_dim", embed_dim}, {"fallback", fallback}, {"entries", out_entries}};
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

MockBackend::MockBackend(MockBackend&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  script_ = std::move(other.script_);
  models_ = std::move(other.models_);
  corpora_ = std::move(other.corpora_);
  log_ = std::move(other.log_);
}

void MockBackend::register_model(const ModelRef& model) {
  std::lock_guard lock(mutex_);
  if (model.id.empty()) throw UsageError("cannot register a model with an empty id");
  models_[model.id] = model;
}

const MockScriptEntry* MockBackend::match_entry(const ModelRef& model,
                                                const std::string& prompt) const {
  const std::string role_name = to_string(model.role);
  // Pass 1: exact prompt match, id selectors before role selectors.
  for (bool want_id : {true, false}) {
    for (const auto& entry : script_.entries) {
      const bool is_id = entry.selector == model.id;
      const bool is_role = entry.selector == role_name;
      if ((want_id && is_id && entry.key == prompt) ||
          (!want_id && is_role && entry.key == prompt)) {
        return &entry;
      }
    }
  }
  // Pass 2: longest substring key wins; ties prefer id selectors, then the
  // earlier script entry.
  const MockScriptEntry* best = nullptr;
  bool best_is_id = false;
  for (const auto& entry : script_.entries) {
    const bool is_id = entry.selector == model.id;
    const bool is_role = entry.selector == role_name;
    if (!is_id && !is_role) continue;
    if (entry.key.empty() || prompt.find(entry.key) == std::string::npos) continue;
    if (best == nullptr || entry.key.size() > best->key.size() ||
        (entry.key.size() == best->key.size() && is_id && !best_is_id)) {
      best = &entry;
      best_is_id = is_id;
    }
  }
  return best;
}

std::vector<std::string> MockBackend::generate(const ModelRef& model, const std::string& prompt,
                                               const SamplingParams& params) {
  params.validate();
  if (prompt.empty()) throw UsageError("generate called with an empty prompt");

  std::lock_guard lock(mutex_);
  auto it = models_.find(model.id);
  if (it == models_.end()) throw ResolutionError("unknown model: " + model.id);
  log_.push_back({model.id, prompt, params.n_samples});

  const MockScriptEntry* entry = match_entry(it->second, prompt);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(params.n_samples));
  for (int i = 0; i < params.n_samples; ++i) {
    if (entry == nullptr) {
      out.push_back(script_.fallback);
    } else {
      out.push_back(entry->completions[static_cast<std::size_t>(i) % entry->completions.size()]);
    }
  }
  return out;
}

EmbeddingVector mock_embedding(const std::string& text, std::size_t dim) {
  std::uint64_t state = fnv1a64(text);
  std::vector<double> values(dim);
  for (auto& v : values) v = 2.0 * to_unit_double(splitmix64(state)) - 1.0;
  // Hash streams are never all-zero in practice, but normalize defensively
  // so every embedding is exactly unit length.
  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    values[0] = 1.0;
    norm = 1.0;
  }
  for (auto& v : values) v /= norm;
  return EmbeddingVector(std::move(values));
}

std::vector<EmbeddingVector> MockBackend::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw UsageError("embed called with no texts");
  std::size_t dim;
  {
    std::lock_guard lock(mutex_);
    dim = script_.embed_dim;
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    if (text.empty()) throw UsageError("embed called with an empty text");
    out.push_back(mock_embedding(text, dim));
  }
  return out;
}

ModelRef MockBackend::finetune(const ModelRef& base, const std::vector<TrainingPair>& corpus,
                               const std::string& tag) {
  if (corpus.empty()) throw UsageError("finetune called with an empty corpus");
  if (tag.empty()) throw UsageError("finetune called with an empty tag");

  std::lock_guard lock(mutex_);
  auto it = models_.find(base.id);
  if (it == models_.end()) throw ResolutionError("unknown base model: " + base.id);

  std::string id = base.id + "+" + tag;
  for (int suffix = 2; models_.count(id) != 0; ++suffix) {
    id = base.id + "+" + tag + "#" + std::to_string(suffix);
  }

  ModelRef tuned;
  tuned.id = id;
  tuned.role = base.role;
  tuned.lineage = base.lineage;
  tuned.lineage.push_back({tag, base.id});

  models_[id] = tuned;
  corpora_[id] = corpus;
  return tuned;
}

bool MockBackend::can_resolve(const std::string& model_id) {
  std::lock_guard lock(mutex_);
  return models_.count(model_id) != 0;
}

ModelRef MockBackend::resolve(const std::string& model_id) {
  std::lock_guard lock(mutex_);
  auto it = models_.find(model_id);
  if (it == models_.end()) throw ResolutionError("unknown model: " + model_id);
  return it->second;
}

std::vector<MockBackend::GenerateCall> MockBackend::generate_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<TrainingPair> MockBackend::stored_corpus(const std::string& model_id) const {
  std::lock_guard lock(mutex_);
  auto it = corpora_.find(model_id);
  if (it == corpora_.end()) {
    throw ResolutionError("no stored corpus for model: " + model_id);
  }
  return it->second;
}

}  // namespace w2s
