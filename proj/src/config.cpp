#include "w2s/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

namespace {

// Paths are stored absolute so a resumed run does not depend on the
// working directory the original invocation happened to use.
std::filesystem::path resolve_path(const std::filesystem::path& base_dir,
                                   const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  return std::filesystem::absolute(base_dir / path).lexically_normal();
}

}  // namespace

std::optional<std::string> stage_ref(const std::string& teacher_ref) {
  if (teacher_ref.size() > 1 && teacher_ref.front() == '@') return teacher_ref.substr(1);
  return std::nullopt;
}

std::optional<std::string> prepared_teacher_base(const std::string& teacher_ref) {
  const std::string suffix = "+teacher";
  if (teacher_ref.size() > suffix.size() &&
      teacher_ref.compare(teacher_ref.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return teacher_ref.substr(0, teacher_ref.size() - suffix.size());
  }
  return std::nullopt;
}

RunConfig RunConfig::load_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig config;
  try {
    config.run_id = j.at("run_id").get<std::string>();
    config.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      config.backend.kind = b.value("kind", std::string("mock"));
      if (config.backend.kind == "mock") {
        if (b.contains("script_file")) {
          config.backend.mock.script_file =
              resolve_path(base_dir, b.at("script_file").get<std::string>());
        }
        config.backend.mock.embed_dim = b.value("embed_dim", std::size_t{16});
        if (b.contains("fallback")) {
          config.backend.mock.fallback = b.at("fallback").get<std::string>();
        }
      } else if (config.backend.kind == "http") {
        config.backend.http.generation_url = b.at("generation_url").get<std::string>();
        config.backend.http.embedding_url = b.at("embedding_url").get<std::string>();
        config.backend.http.finetune_url = b.at("finetune_url").get<std::string>();
        config.backend.http.auth_token_env = b.value("auth_token_env", std::string());
        config.backend.http.retry_attempts = b.value("retry_attempts", 3);
        config.backend.http.backoff_base_ms = b.value("backoff_base_ms", 100);
      } else {
        throw UsageError("backend.kind must be 'mock' or 'http', got '" + config.backend.kind +
                         "'");
      }
    }

    for (const auto& m : j.value("models", nlohmann::json::array())) {
      config.models.push_back(
          {m.at("id").get<std::string>(), role_from_string(m.at("role").get<std::string>())});
    }
    config.summarizer = j.value("summarizer", std::string());

    const auto& d = j.at("dataset");
    config.dataset.name = dataset_from_string(d.at("name").get<std::string>());
    config.dataset.train_file = resolve_path(base_dir, d.at("train_file").get<std::string>());
    if (d.contains("eval_file")) {
      config.dataset.eval_file = resolve_path(base_dir, d.at("eval_file").get<std::string>());
    }

    config.split_ratio = j.value("split_ratio", 0.5);

    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      config.sampling.n_samples = s.value("n_samples", 100);
      config.sampling.temperature = s.value("temperature", 1.0);
      config.sampling.max_length = s.value("max_length", 512);
    }

    if (j.contains("clustering")) {
      const auto& c = j.at("clustering");
      config.clustering.threshold_T = c.value("threshold_T", 0.85);
      config.clustering.group_below_threshold = c.value("group_below_threshold", false);
    }

    for (const auto& p : j.value("teacher_prep", nlohmann::json::array())) {
      TeacherPrepSpec prep;
      prep.base = p.at("base").get<std::string>();
      prep.format = corpus_format_from_string(p.value("format", std::string("q_cot_a")));
      prep.candidates_per_question = p.value("candidates_per_question", 4);
      config.teacher_prep.push_back(std::move(prep));
    }

    for (const auto& s : j.value("stages", nlohmann::json::array())) {
      StageConfig stage;
      stage.id = s.at("id").get<std::string>();
      stage.teachers = s.at("teachers").get<std::vector<std::string>>();
      stage.student = s.at("student").get<std::string>();
      stage.variant = variant_from_string(s.value("variant", std::string("alice")));
      stage.uncertainty = s.value("uncertainty", stage.variant == Variant::alice ||
                                                     stage.variant == Variant::multi_teacher);
      config.stages.push_back(std::move(stage));
    }

    config.failure_cap = j.value("failure_cap", 0.05);
    config.workers = j.value("workers", 1);
    config.templates_dir =
        resolve_path(base_dir, j.value("templates_dir", std::string("templates")));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  config.validate();
  return config;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["seed"] = seed;

  nlohmann::json b{{"kind", backend.kind}};
  if (backend.kind == "mock") {
    if (!backend.mock.script_file.empty()) b["script_file"] = backend.mock.script_file.string();
    b["embed_dim"] = backend.mock.embed_dim;
    if (backend.mock.fallback) b["fallback"] = *backend.mock.fallback;
  } else {
    b["generation_url"] = backend.http.generation_url;
    b["embedding_url"] = backend.http.embedding_url;
    b["finetune_url"] = backend.http.finetune_url;
    b["auth_token_env"] = backend.http.auth_token_env;
    b["retry_attempts"] = backend.http.retry_attempts;
    b["backoff_base_ms"] = backend.http.backoff_base_ms;
  }
  j["backend"] = b;

  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : this->models) {
    models.push_back({{"id", m.id}, {"role", to_string(m.role)}});
  }
  j["models"] = models;
  if (!summarizer.empty()) j["summarizer"] = summarizer;

  nlohmann::json d{{"name", to_string(dataset.name)},
                   {"train_file", dataset.train_file.string()}};
  if (!dataset.eval_file.empty()) d["eval_file"] = dataset.eval_file.string();
  j["dataset"] = d;

  j["split_ratio"] = split_ratio;
  j["sampling"] = {{"n_samples", sampling.n_samples},
                   {"temperature", sampling.temperature},
                   {"max_length", sampling.max_length}};
  j["clustering"] = {{"threshold_T", clustering.threshold_T},
                     {"group_below_threshold", clustering.group_below_threshold}};

  nlohmann::json prep = nlohmann::json::array();
  for (const auto& p : teacher_prep) {
    prep.push_back({{"base", p.base},
                    {"format", to_string(p.format)},
                    {"candidates_per_question", p.candidates_per_question}});
  }
  j["teacher_prep"] = prep;

  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"id", s.id},
                           {"teachers", s.teachers},
                           {"student", s.student},
                           {"variant", to_string(s.variant)},
                           {"uncertainty", s.uncertainty}});
  }
  j["stages"] = stages_json;

  j["failure_cap"] = failure_cap;
  j["workers"] = workers;
  j["templates_dir"] = templates_dir.string();
  return j;
}

void RunConfig::validate() const {
  if (run_id.empty()) throw UsageError("run_id must be non-empty");
  for (char c : run_id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      throw UsageError("run_id may contain only letters, digits, '-' and '_'");
    }
  }
  sampling.validate();
  if (!(clustering.threshold_T > 0.0) || clustering.threshold_T > 1.0) {
    throw UsageError("clustering.threshold_T must be in (0, 1]");
  }
  if (!(split_ratio > 0.0) || split_ratio > 1.0) {
    throw UsageError("split_ratio must be in (0, 1]");
  }
  if (failure_cap < 0.0 || failure_cap > 1.0) throw UsageError("failure_cap must be in [0, 1]");
  if (workers < 1) throw UsageError("workers must be >= 1");
  if (dataset.train_file.empty()) throw UsageError("dataset.train_file must be set");

  std::set<std::string> model_ids;
  for (const auto& m : models) {
    if (m.id.empty()) throw UsageError("model entry with empty id");
    if (m.id.find('+') != std::string::npos || m.id.front() == '@') {
      throw UsageError("model id '" + m.id + "' uses characters reserved for derived refs");
    }
    if (!model_ids.insert(m.id).second) throw UsageError("duplicate model id: " + m.id);
  }
  if (!summarizer.empty() && model_ids.count(summarizer) == 0) {
    throw UsageError("summarizer '" + summarizer + "' is not a configured model");
  }

  std::set<std::string> prep_bases;
  for (const auto& p : teacher_prep) {
    if (model_ids.count(p.base) == 0) {
      throw UsageError("teacher_prep base '" + p.base + "' is not a configured model");
    }
    if (!prep_bases.insert(p.base).second) {
      throw UsageError("duplicate teacher_prep entry for base '" + p.base + "'");
    }
    if (p.candidates_per_question < 1) {
      throw UsageError("candidates_per_question must be >= 1");
    }
  }

  std::set<std::string> stage_ids;
  for (const auto& s : stages) {
    if (s.id.empty()) throw UsageError("stage with empty id");
    for (char c : s.id) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
        throw UsageError("stage id '" + s.id + "' may contain only letters, digits, '-', '_'");
      }
    }
    if (!stage_ids.insert(s.id).second) throw UsageError("duplicate stage id: " + s.id);

    if (s.teachers.empty()) throw UsageError("stage " + s.id + " lists no teachers");
    const bool multi = s.variant == Variant::multi_teacher;
    if (multi && s.teachers.size() < 2) {
      throw UsageError("stage " + s.id + ": multi_teacher requires at least two teachers");
    }
    if (!multi && s.teachers.size() != 1) {
      throw UsageError("stage " + s.id + ": variant " + to_string(s.variant) +
                       " requires exactly one teacher");
    }
    const bool needs_uncertainty =
        s.variant == Variant::alice || s.variant == Variant::multi_teacher;
    if (needs_uncertainty && !s.uncertainty) {
      throw UsageError("stage " + s.id + ": variant " + to_string(s.variant) +
                       " requires uncertainty elicitation");
    }
    if (!needs_uncertainty && s.uncertainty) {
      throw UsageError("stage " + s.id + ": variant " + to_string(s.variant) +
                       " must not enable uncertainty");
    }
    if (needs_uncertainty && summarizer.empty()) {
      throw UsageError("stage " + s.id + " needs a summarizer model");
    }

    if (model_ids.count(s.student) == 0) {
      throw UsageError("stage " + s.id + ": student '" + s.student +
                       "' is not a configured model");
    }

    for (const auto& ref : s.teachers) {
      if (const auto sid = stage_ref(ref)) {
        // Chaining may only point backwards.
        const auto it = std::find_if(stages.begin(), stages.end(),
                                     [&](const StageConfig& other) { return other.id == *sid; });
        if (it == stages.end()) {
          throw UsageError("stage " + s.id + ": teacher ref '" + ref +
                           "' names an unknown stage");
        }
        const auto self = std::find_if(stages.begin(), stages.end(),
                                       [&](const StageConfig& other) { return other.id == s.id; });
        if (it >= self) {
          throw UsageError("stage " + s.id + ": teacher ref '" + ref +
                           "' must name an earlier stage");
        }
      } else if (const auto base = prepared_teacher_base(ref)) {
        if (prep_bases.count(*base) == 0) {
          throw UsageError("stage " + s.id + ": teacher ref '" + ref +
                           "' has no teacher_prep entry for base '" + *base + "'");
        }
      } else {
        throw UsageError("stage " + s.id + ": teacher ref '" + ref +
                         "' must be '<base>+teacher' or '@<stage_id>'");
      }
    }
  }
}

const StageConfig& RunConfig::stage(const std::string& stage_id) const {
  for (const auto& s : stages) {
    if (s.id == stage_id) return s;
  }
  throw UsageError("unknown stage: " + stage_id);
}

int RunConfig::stage_number(const std::string& stage_id) const {
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].id == stage_id) return static_cast<int>(i) + 1;
  }
  throw UsageError("unknown stage: " + stage_id);
}

const ModelEntry& RunConfig::model(const std::string& id) const {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw UsageError("unknown model: " + id);
}

const TeacherPrepSpec& RunConfig::prep_for(const std::string& base_id) const {
  for (const auto& p : teacher_prep) {
    if (p.base == base_id) return p;
  }
  throw UsageError("no teacher_prep entry for base: " + base_id);
}

}  // namespace w2s
