#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "w2s/backend.hpp"
#include "w2s/config.hpp"
#include "w2s/corpus.hpp"
#include "w2s/evalharness.hpp"
#include "w2s/proactive.hpp"
#include "w2s/store.hpp"
#include "w2s/templates.hpp"
#include "w2s/uncertainty.hpp"

namespace w2s {

// Thrown by value when a requested halt point completes. Deliberately not a
// std::exception so per-question error handling can never swallow it.
struct HaltRequested {
  std::string step;
};

// Builds the configured backend. Exposed for tests; the Runner owns one.
std::unique_ptr<Backend> make_backend(const RunConfig& config);

// Executes a run against its store: every ensure_* step is idempotent —
// completed steps are digest-verified and their artifacts reloaded instead
// of recomputed, which is also exactly how resumption works.
//
// Step names, in dependency order:
//   split
//   teacher/<base>/corpus, teacher/<base>/finetune     (per teacher_prep)
//   stage/<id>/demos, stage/<id>/supervision,
//   stage/<id>/corpus, stage/<id>/finetune             (per stage)
class Runner {
 public:
  Runner(RunConfig config, const std::filesystem::path& run_dir);

  // Reopens a run directory from its stored manifest.
  static Runner resume(const std::filesystem::path& run_dir);

  const RunConfig& config() const { return config_; }
  RunStore& store() { return *store_; }
  Backend& backend() { return *backend_; }
  const TemplateSet& templates() const { return templates_; }

  // Throw HaltRequested right after the named step first completes.
  void set_halt_after(std::string step) { halt_after_ = std::move(step); }

  SplitResult ensure_split();
  // Runs teacher prep (candidate sampling, corpus, fine-tune) for one base.
  ModelRef ensure_teacher(const std::string& base_id);
  void prepare_all_teachers();

  // Demos per teacher ref, in the stage's teacher order.
  std::vector<std::vector<TeacherDemo>> ensure_demos(const std::string& stage_id);
  std::vector<SupervisionRecord> ensure_supervision(const std::string& stage_id);
  std::vector<TrainingPair> ensure_stage_corpus(const std::string& stage_id);
  ModelRef ensure_stage_finetune(const std::string& stage_id);

  // Full stage: demos → supervision → corpus → student fine-tune.
  ModelRef run_stage(const std::string& stage_id);

  // All configured stages in order. Stage k ≥ 2 must list "@<stage k-1>"
  // among its teachers (UsageError before anything executes).
  ModelRef run_cascade();

  // The ModelRef a teacher ref denotes, from config or store records.
  // Does not touch the backend; may trigger teacher prep for "+teacher" refs.
  ModelRef resolve_teacher_ref(const std::string& ref);

  // Makes the id servable by the backend: configured models resolve
  // directly; fine-tuned models are rebuilt by replaying their persisted
  // corpus onto their (recursively materialized) base. Replay must
  // reproduce the recorded id exactly.
  ModelRef materialize_model(const std::string& model_id);

  // Scores a model ("@stage" refs allowed) on an eval file.
  EvalReport evaluate_model(const std::string& model_ref, const std::string& label,
                            const std::vector<LabeledExample>& eval_set);

 private:
  std::vector<std::pair<std::string, std::string>> stage_prereq_models(
      const StageConfig& stage);  // (teacher dir name, model id) per teacher
  const RunStore::StepRecord& finish_step(
      const std::string& step, const std::vector<std::pair<std::string, std::string>>& files,
      std::optional<ModelRef> model = std::nullopt);

  RunConfig config_;
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<RunStore> store_;
  TemplateSet templates_;
  std::optional<std::string> halt_after_;
  std::optional<SplitResult> split_cache_;
};

// Path-safe artifact directory component for a model id ('+' → '_', etc).
std::string sanitize_component(const std::string& id);

}  // namespace w2s
