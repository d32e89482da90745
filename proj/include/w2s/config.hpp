#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"
#include "w2s/corpus.hpp"
#include "w2s/proactive.hpp"
#include "w2s/teacher.hpp"
#include "w2s/uncertainty.hpp"

namespace w2s {

struct MockBackendConfig {
  std::filesystem::path script_file;  // optional; empty → unscripted mock
  std::size_t embed_dim = 16;
  std::optional<std::string> fallback;
};

struct HttpBackendConfig {
  std::string generation_url;
  std::string embedding_url;
  std::string finetune_url;
  std::string auth_token_env;  // name of the env var holding the bearer token
  int retry_attempts = 3;
  int backoff_base_ms = 100;
};

struct BackendConfig {
  std::string kind = "mock";  // "mock" or "http"
  MockBackendConfig mock;
  HttpBackendConfig http;
};

struct ModelEntry {
  std::string id;
  Role role = Role::Teacher;
};

struct DatasetConfig {
  Dataset name = Dataset::synthetic;
  std::filesystem::path train_file;
  std::filesystem::path eval_file;  // optional; empty → evaluate needs --eval-file
};

// One weak teacher to prepare before any stage runs.
struct TeacherPrepSpec {
  std::string base;  // id of a configured model
  CorpusFormat format = CorpusFormat::q_cot_a;
  int candidates_per_question = 4;
};

// Declarative description of one weak-to-strong stage. Teacher refs are
// either "<base>+teacher" (a prepared teacher) or "@<stage_id>" (the student
// a previous stage produced).
struct StageConfig {
  std::string id;
  std::vector<std::string> teachers;
  std::string student;  // id of a configured model
  Variant variant = Variant::alice;
  bool uncertainty = true;
};

// The run manifest: everything a run needs, loaded from one JSON file.
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::string run_id;
  std::uint64_t seed = 0;
  BackendConfig backend;
  std::vector<ModelEntry> models;
  std::string summarizer;  // id of a configured model; may be empty if unused
  DatasetConfig dataset;
  double split_ratio = 0.5;
  SamplingParams sampling;  // seed field is ignored; the run seed governs
  ClusteringConfig clustering;
  std::vector<TeacherPrepSpec> teacher_prep;
  std::vector<StageConfig> stages;
  double failure_cap = 0.05;
  int workers = 1;
  std::filesystem::path templates_dir = "templates";

  static RunConfig load_file(const std::filesystem::path& path);
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::json to_json() const;

  // Structural checks: unique stage ids, variant/teacher-count coherence,
  // resolvable teacher refs, models present. Throws UsageError.
  void validate() const;

  const StageConfig& stage(const std::string& stage_id) const;
  // 1-based position of the stage in the configured order (names the
  // "student-stageK" fine-tune tag).
  int stage_number(const std::string& stage_id) const;
  const ModelEntry& model(const std::string& id) const;
  const TeacherPrepSpec& prep_for(const std::string& base_id) const;
};

// "@stage1" → "stage1"; empty optional for plain model ids.
std::optional<std::string> stage_ref(const std::string& teacher_ref);

// "<base>+teacher" → "<base>"; empty optional for other shapes.
std::optional<std::string> prepared_teacher_base(const std::string& teacher_ref);

}  // namespace w2s
