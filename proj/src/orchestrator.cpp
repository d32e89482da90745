#include "w2s/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "w2s/errors.hpp"
#include "w2s/http_backend.hpp"
#include "w2s/mock_backend.hpp"
#include "w2s/model_json.hpp"
#include "w2s/teacher.hpp"
#include "w2s/util.hpp"

namespace w2s {

std::string sanitize_component(const std::string& id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend.kind == "http") {
    return std::make_unique<HttpBackend>(config.backend.http);
  }

  MockScript script;
  if (!config.backend.mock.script_file.empty()) {
    script = MockScript::load_file(config.backend.mock.script_file);
  } else {
    script.embed_dim = config.backend.mock.embed_dim;
    if (config.backend.mock.fallback) script.fallback = *config.backend.mock.fallback;
  }
  auto mock = std::make_unique<MockBackend>(std::move(script));
  for (const auto& entry : config.models) {
    mock->register_model(ModelRef{entry.id, entry.role, {}});
  }
  return mock;
}

Runner::Runner(RunConfig config, const std::filesystem::path& run_dir)
    : config_(std::move(config)) {
  config_.validate();
  backend_ = make_backend(config_);
  store_ = std::make_unique<RunStore>(run_dir, config_.to_json());
  templates_ = TemplateSet::load(config_.templates_dir);
}

Runner Runner::resume(const std::filesystem::path& run_dir) {
  RunStore store = RunStore::open(run_dir);
  // Manifest paths were resolved at original load time, so no base dir.
  RunConfig config = RunConfig::from_json(store.manifest(), {});
  return Runner(std::move(config), run_dir);
}

const RunStore::StepRecord& Runner::finish_step(
    const std::string& step, const std::vector<std::pair<std::string, std::string>>& files,
    std::optional<ModelRef> model) {
  const auto& record = store_->complete_step(step, files, std::move(model));
  if (halt_after_ && *halt_after_ == step) throw HaltRequested{step};
  return record;
}

// ---------------------------------------------------------------------------
// split

SplitResult Runner::ensure_split() {
  if (split_cache_) return *split_cache_;

  SplitResult split;
  if (store_->has_step("split")) {
    store_->verify_step("split");
    for (const auto& j : parse_jsonl(store_->read_artifact("split/teacher_half.jsonl"))) {
      split.teacher_half.push_back(labeled_example_from_json(j));
    }
    for (const auto& j : parse_jsonl(store_->read_artifact("split/w2s_questions.jsonl"))) {
      split.w2s_half.push_back(question_only_from_json(j));
    }
    const nlohmann::json sealed =
        nlohmann::json::parse(store_->read_artifact("split/sealed_gold.json"));
    for (const auto& [qid, gold] : sealed.items()) {
      split.sealed_gold.emplace(qid, gold.get<std::string>());
    }
  } else {
    const auto examples = load_dataset(config_.dataset.name, config_.dataset.train_file);
    split = split_halves(examples, config_.split_ratio);

    std::vector<nlohmann::json> teacher_lines;
    for (const auto& example : split.teacher_half) teacher_lines.push_back(to_json(example));
    std::vector<nlohmann::json> w2s_lines;
    for (const auto& question : split.w2s_half) w2s_lines.push_back(to_json(question));
    nlohmann::json sealed = nlohmann::json::object();
    for (const auto& [qid, gold] : split.sealed_gold) sealed[qid] = gold;

    finish_step("split", {{"split/teacher_half.jsonl", to_jsonl(teacher_lines)},
                          {"split/w2s_questions.jsonl", to_jsonl(w2s_lines)},
                          {"split/sealed_gold.json", canonical_dump(sealed) + "\n"}});
  }
  split_cache_ = std::move(split);
  return *split_cache_;
}

// ---------------------------------------------------------------------------
// teacher preparation

ModelRef Runner::ensure_teacher(const std::string& base_id) {
  const TeacherPrepSpec& prep = config_.prep_for(base_id);
  const std::string dir = "teacher/" + sanitize_component(base_id);
  const std::string corpus_step = dir + "/corpus";
  const std::string finetune_step = dir + "/finetune";

  if (store_->has_step(finetune_step)) {
    store_->verify_step(corpus_step);
    store_->verify_step(finetune_step);
    return *store_->record(finetune_step).model;
  }

  const SplitResult split = ensure_split();

  std::vector<TrainingPair> corpus;
  if (store_->has_step(corpus_step)) {
    store_->verify_step(corpus_step);
    for (const auto& j : parse_jsonl(store_->read_artifact(dir + "/corpus.jsonl"))) {
      corpus.push_back({j.at("prompt").get<std::string>(), j.at("target").get<std::string>()});
    }
  } else {
    const ModelRef base = materialize_model(base_id);

    // Rejection-sample chains only where the dataset carries no annotation.
    const auto per_example = parallel_map(
        split.teacher_half.size(), config_.workers,
        [&](std::size_t i) -> std::vector<CotCandidate> {
          const LabeledExample& example = split.teacher_half[i];
          if (example.gold_cot) return {};
          SamplingParams params;
          params.n_samples = prep.candidates_per_question;
          params.temperature = config_.sampling.temperature;
          params.max_length = config_.sampling.max_length;
          params.seed = config_.seed ^ fnv1a64("teacher:" + base_id + ":" + example.qid);
          return generate_cot_candidates(*backend_, base, example, params);
        });

    std::map<std::string, std::vector<CotCandidate>> candidates_by_qid;
    std::vector<nlohmann::json> candidate_lines;
    for (std::size_t i = 0; i < per_example.size(); ++i) {
      for (const auto& candidate : per_example[i]) candidate_lines.push_back(to_json(candidate));
      if (!per_example[i].empty()) {
        candidates_by_qid.emplace(split.teacher_half[i].qid, per_example[i]);
      }
    }

    const TeacherCorpus built = build_teacher_corpus(split, candidates_by_qid, prep.format);
    if (built.pairs.empty()) {
      throw PipelineError("teacher corpus for '" + base_id +
                          "' is empty: every example was dropped");
    }
    if (!built.dropped_qids.empty()) {
      log_warn("teacher prep for '" + base_id + "' dropped " +
               std::to_string(built.dropped_qids.size()) + " example(s) with no usable chain");
    }

    std::vector<nlohmann::json> corpus_lines;
    for (const auto& pair : built.pairs) {
      corpus_lines.push_back({{"prompt", pair.prompt}, {"target", pair.target}});
    }
    const nlohmann::json meta{{"format", to_string(prep.format)},
                              {"used_qids", built.used_qids},
                              {"dropped_qids", built.dropped_qids}};

    finish_step(corpus_step, {{dir + "/candidates.jsonl", to_jsonl(candidate_lines)},
                              {dir + "/corpus.jsonl", to_jsonl(corpus_lines)},
                              {dir + "/meta.json", canonical_dump(meta) + "\n"}});
    corpus = built.pairs;
  }

  const ModelRef base = materialize_model(base_id);
  const ModelRef tuned = train_teacher(*backend_, base, corpus);
  finish_step(finetune_step,
              {{dir + "/model.json", canonical_dump(to_json(tuned)) + "\n"}}, tuned);
  return tuned;
}

void Runner::prepare_all_teachers() {
  for (const auto& prep : config_.teacher_prep) ensure_teacher(prep.base);
}

// ---------------------------------------------------------------------------
// teacher refs and model materialization

ModelRef Runner::resolve_teacher_ref(const std::string& ref) {
  if (const auto sid = stage_ref(ref)) {
    config_.stage(*sid);  // rejects unknown stage ids early
    const std::string step = "stage/" + *sid + "/finetune";
    if (!store_->has_step(step)) {
      throw UsageError("teacher ref '" + ref + "' needs stage '" + *sid +
                       "' to have produced its student (run it or resume the cascade)");
    }
    store_->verify_step(step);
    return *store_->record(step).model;
  }
  if (const auto base = prepared_teacher_base(ref)) {
    return ensure_teacher(*base);
  }
  throw UsageError("teacher ref '" + ref + "' must be '<base>+teacher' or '@<stage_id>'");
}

ModelRef Runner::materialize_model(const std::string& model_id) {
  if (backend_->can_resolve(model_id)) return backend_->resolve(model_id);

  const RunStore::StepRecord* record = store_->find_model(model_id);
  if (record == nullptr) {
    throw ResolutionError("model '" + model_id +
                          "' is neither served by the backend nor recorded in the run store");
  }

  const std::string suffix = "/finetune";
  if (record->step.size() <= suffix.size() ||
      record->step.compare(record->step.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw CorruptionError("model '" + model_id + "' recorded by unexpected step '" +
                          record->step + "'");
  }
  const std::string corpus_step =
      record->step.substr(0, record->step.size() - suffix.size()) + "/corpus";
  store_->verify_step(corpus_step);
  store_->verify_step(record->step);

  const RunStore::StepRecord& corpus_record = store_->record(corpus_step);
  std::string corpus_path;
  for (const auto& path : corpus_record.files) {
    const std::string name = "corpus.jsonl";
    if (path.size() >= name.size() &&
        path.compare(path.size() - name.size(), name.size(), name) == 0) {
      corpus_path = path;
    }
  }
  if (corpus_path.empty()) {
    throw CorruptionError("step '" + corpus_step + "' records no corpus file");
  }
  std::vector<TrainingPair> corpus;
  for (const auto& j : parse_jsonl(store_->read_artifact(corpus_path))) {
    corpus.push_back({j.at("prompt").get<std::string>(), j.at("target").get<std::string>()});
  }

  const ModelRef& target = *record->model;
  if (target.lineage.empty()) {
    throw CorruptionError("fine-tuned model '" + model_id + "' carries no lineage");
  }
  const ModelRef base = materialize_model(target.lineage.back().parent_id);
  const ModelRef tuned = backend_->finetune(base, corpus, target.lineage.back().tag);
  if (tuned.id != target.id) {
    throw PipelineError("replaying the fine-tune for '" + model_id + "' produced '" + tuned.id +
                        "'; the run store no longer matches the backend");
  }
  return tuned;
}

// ---------------------------------------------------------------------------
// stage: demos

namespace {

// Buffers everything elicit produces so it can be persisted as one step.
class CollectingSink : public ElicitSink {
 public:
  void on_samples(const std::string&, const std::vector<SampledResponse>& samples) override {
    for (const auto& s : samples) {
      samples_.push_back({{"qid", s.qid}, {"index", s.index}, {"text", s.text}});
    }
  }
  void on_clusters(const std::string& qid,
                   const std::vector<ResponseCluster>& clusters) override {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& cluster : clusters) {
      list.push_back({{"reference", cluster.reference_index},
                      {"members", cluster.member_indices},
                      {"representative", cluster.representative_index}});
    }
    clusters_.push_back({{"qid", qid}, {"clusters", list}});
  }
  void on_demo(const TeacherDemo& demo) override { demos_.push_back(to_json(demo)); }
  void on_failure(const std::string& qid, const std::string& error) override {
    failures_.push_back({{"qid", qid}, {"error", error}});
  }

  std::vector<nlohmann::json> samples_;
  std::vector<nlohmann::json> clusters_;
  std::vector<nlohmann::json> demos_;
  std::vector<nlohmann::json> failures_;
};

}  // namespace

std::vector<std::pair<std::string, std::string>> Runner::stage_prereq_models(
    const StageConfig& stage) {
  std::vector<std::pair<std::string, std::string>> teachers;
  for (std::size_t k = 0; k < stage.teachers.size(); ++k) {
    const ModelRef teacher = resolve_teacher_ref(stage.teachers[k]);
    teachers.emplace_back("t" + std::to_string(k) + "_" + sanitize_component(teacher.id),
                          teacher.id);
  }
  return teachers;
}

std::vector<std::vector<TeacherDemo>> Runner::ensure_demos(const std::string& stage_id) {
  const StageConfig& stage = config_.stage(stage_id);
  const std::string step = "stage/" + stage_id + "/demos";
  const auto teachers = stage_prereq_models(stage);  // runs teacher prep if needed

  std::vector<std::vector<TeacherDemo>> demos_per_teacher;
  if (store_->has_step(step)) {
    store_->verify_step(step);
    for (const auto& [dir, id] : teachers) {
      std::vector<TeacherDemo> demos;
      for (const auto& j :
           parse_jsonl(store_->read_artifact("stage/" + stage_id + "/" + dir + "/demos.jsonl"))) {
        demos.push_back(teacher_demo_from_json(j));
      }
      demos_per_teacher.push_back(std::move(demos));
    }
    return demos_per_teacher;
  }

  const SplitResult split = ensure_split();
  if (split.w2s_half.empty()) {
    throw PipelineError("stage " + stage_id + ": the weak-to-strong half is empty");
  }

  ModelRef summarizer;
  if (stage.uncertainty) summarizer = materialize_model(config_.summarizer);

  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& [dir, teacher_id] : teachers) {
    const ModelRef teacher = materialize_model(teacher_id);

    ElicitOptions options;
    options.sampling = config_.sampling;
    options.sampling.seed = config_.seed ^ fnv1a64("elicit:" + teacher.id);
    if (stage.variant == Variant::original_w2s) {
      // The baseline takes the teacher's single greedy demonstration; there
      // is no uncertainty to probe.
      options.sampling.n_samples = 1;
      options.sampling.temperature = 0.0;
    }
    options.clustering = config_.clustering;
    options.clustering.rng_seed = options.sampling.seed;
    options.failure_cap = config_.failure_cap;
    options.workers = config_.workers;
    options.use_summarizer = stage.uncertainty;

    CollectingSink sink;
    ElicitResult result =
        elicit(*backend_, teacher, summarizer, split.w2s_half, templates_, options, &sink);

    const std::string prefix = "stage/" + stage_id + "/" + dir + "/";
    files.emplace_back(prefix + "samples.jsonl", to_jsonl(sink.samples_));
    files.emplace_back(prefix + "clusters.jsonl", to_jsonl(sink.clusters_));
    files.emplace_back(prefix + "demos.jsonl", to_jsonl(sink.demos_));
    files.emplace_back(prefix + "failures.jsonl", to_jsonl(sink.failures_));
    demos_per_teacher.push_back(std::move(result.demos));
  }

  finish_step(step, files);
  return demos_per_teacher;
}

// ---------------------------------------------------------------------------
// stage: supervision

std::vector<SupervisionRecord> Runner::ensure_supervision(const std::string& stage_id) {
  const StageConfig& stage = config_.stage(stage_id);
  const std::string step = "stage/" + stage_id + "/supervision";

  if (store_->has_step(step)) {
    store_->verify_step(step);
    std::vector<SupervisionRecord> records;
    for (const auto& j :
         parse_jsonl(store_->read_artifact("stage/" + stage_id + "/supervision.jsonl"))) {
      records.push_back(supervision_record_from_json(j));
    }
    return records;
  }

  const auto demos_per_teacher = ensure_demos(stage_id);
  const auto teachers = stage_prereq_models(stage);
  const SplitResult split = ensure_split();

  std::vector<std::map<std::string, TeacherDemo>> demo_maps;
  for (const auto& demos : demos_per_teacher) {
    std::map<std::string, TeacherDemo> map;
    for (const auto& demo : demos) map.emplace(demo.qid, demo);
    demo_maps.push_back(std::move(map));
  }

  const ModelRef student = materialize_model(stage.student);

  struct Outcome {
    SupervisionRecord record;
    std::string prompt;  // empty when no refinement prompt was built
  };

  const auto outcomes = parallel_map(
      split.w2s_half.size(), config_.workers, [&](std::size_t i) -> Outcome {
        const QuestionOnly& q = split.w2s_half[i];
        Outcome outcome;
        SupervisionRecord& record = outcome.record;
        record.qid = q.qid;
        record.question = q.question;
        record.variant = stage.variant;

        for (std::size_t k = 0; k < teachers.size(); ++k) {
          const auto it = demo_maps[k].find(q.qid);
          if (it == demo_maps[k].end()) {
            record.failed = true;
            record.error = "teacher '" + teachers[k].second + "' produced no demo";
            return outcome;
          }
          record.teacher_inputs.push_back(
              {teachers[k].second, it->second.final_response, it->second.uncertainty});
        }

        if (stage.variant == Variant::original_w2s) {
          // Baseline: the teacher demonstration is adopted unchanged.
          record.student_final = record.teacher_inputs.front().final_response;
          return outcome;
        }

        try {
          record.student_initial = student_zero_shot(
              *backend_, student, q.question, config_.seed ^ fnv1a64("zs:" + q.qid));
          const FilledPrompt prompt =
              build_refinement_prompt(templates_, q.question, record.student_initial,
                                      record.teacher_inputs, stage.variant);
          record.student_final = refine_response(*backend_, student, prompt.text,
                                                 config_.seed ^ fnv1a64("refine:" + q.qid));
          outcome.prompt = prompt.text;
        } catch (const std::exception& e) {
          record.failed = true;
          record.error = e.what();
        }
        return outcome;
      });

  std::vector<SupervisionRecord> records;
  std::vector<nlohmann::json> record_lines;
  std::vector<nlohmann::json> prompt_lines;
  std::vector<nlohmann::json> failure_lines;
  std::size_t failed = 0;
  for (const auto& outcome : outcomes) {
    records.push_back(outcome.record);
    record_lines.push_back(to_json(outcome.record));
    if (!outcome.prompt.empty()) {
      prompt_lines.push_back({{"qid", outcome.record.qid}, {"prompt", outcome.prompt}});
    }
    if (outcome.record.failed) {
      ++failed;
      failure_lines.push_back({{"qid", outcome.record.qid}, {"error", outcome.record.error}});
    }
  }

  const double fraction =
      static_cast<double>(failed) / static_cast<double>(split.w2s_half.size());
  if (fraction > config_.failure_cap) {
    throw PipelineError("stage " + stage_id + ": " + std::to_string(failed) + " of " +
                        std::to_string(split.w2s_half.size()) +
                        " questions failed supervision (cap " +
                        std::to_string(config_.failure_cap) + ")");
  }

  const std::string prefix = "stage/" + stage_id + "/";
  finish_step(step, {{prefix + "supervision.jsonl", to_jsonl(record_lines)},
                     {prefix + "refine_prompts.jsonl", to_jsonl(prompt_lines)},
                     {prefix + "failures.jsonl", to_jsonl(failure_lines)}});
  return records;
}

// ---------------------------------------------------------------------------
// stage: corpus and fine-tune

std::vector<TrainingPair> Runner::ensure_stage_corpus(const std::string& stage_id) {
  const std::string step = "stage/" + stage_id + "/corpus";
  const std::string path = "stage/" + stage_id + "/corpus.jsonl";

  if (store_->has_step(step)) {
    store_->verify_step(step);
    std::vector<TrainingPair> corpus;
    for (const auto& j : parse_jsonl(store_->read_artifact(path))) {
      corpus.push_back({j.at("prompt").get<std::string>(), j.at("target").get<std::string>()});
    }
    return corpus;
  }

  const auto records = ensure_supervision(stage_id);
  const auto corpus = build_supervision_corpus(records);

  std::vector<nlohmann::json> lines;
  for (const auto& pair : corpus) {
    lines.push_back({{"prompt", pair.prompt}, {"target", pair.target}});
  }
  finish_step(step, {{path, to_jsonl(lines)}});
  return corpus;
}

ModelRef Runner::ensure_stage_finetune(const std::string& stage_id) {
  const StageConfig& stage = config_.stage(stage_id);
  const std::string step = "stage/" + stage_id + "/finetune";

  if (store_->has_step(step)) {
    store_->verify_step(step);
    return *store_->record(step).model;
  }

  const auto corpus = ensure_stage_corpus(stage_id);
  const ModelRef base = materialize_model(stage.student);
  const ModelRef tuned =
      train_student(*backend_, base, corpus, config_.stage_number(stage_id));
  finish_step(step, {{"stage/" + stage_id + "/model.json", canonical_dump(to_json(tuned)) + "\n"}},
              tuned);
  return tuned;
}

ModelRef Runner::run_stage(const std::string& stage_id) { return ensure_stage_finetune(stage_id); }

ModelRef Runner::run_cascade() {
  if (config_.stages.empty()) throw UsageError("config defines no stages");

  // Chaining precondition, checked before anything executes.
  for (std::size_t i = 1; i < config_.stages.size(); ++i) {
    const std::string expected = "@" + config_.stages[i - 1].id;
    const auto& teachers = config_.stages[i].teachers;
    if (std::find(teachers.begin(), teachers.end(), expected) == teachers.end()) {
      throw UsageError("cascade broken: stage '" + config_.stages[i].id +
                       "' does not list previous stage's student '" + expected +
                       "' among its teachers");
    }
  }

  ModelRef last;
  for (const auto& stage : config_.stages) last = run_stage(stage.id);
  return last;
}

// ---------------------------------------------------------------------------
// evaluation entry

EvalReport Runner::evaluate_model(const std::string& model_ref, const std::string& label,
                                  const std::vector<LabeledExample>& eval_set) {
  std::string id = model_ref;
  if (const auto sid = stage_ref(model_ref)) {
    const std::string step = "stage/" + *sid + "/finetune";
    if (!store_->has_step(step)) {
      throw UsageError("cannot evaluate '" + model_ref + "': stage '" + *sid + "' has not run");
    }
    id = store_->record(step).model->id;
  }
  const ModelRef model = materialize_model(id);
  return evaluate(*backend_, model, eval_set, label, config_.seed, config_.workers);
}

}  // namespace w2s
