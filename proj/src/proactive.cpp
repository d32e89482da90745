#include "w2s/proactive.hpp"

#include <algorithm>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::alice: return "alice";
    case Variant::no_uncertainty: return "no_uncertainty";
    case Variant::multi_teacher: return "multi_teacher";
    case Variant::original_w2s: return "original_w2s";
  }
  throw UsageError("unknown variant value");
}

Variant variant_from_string(const std::string& s) {
  if (s == "alice") return Variant::alice;
  if (s == "no_uncertainty") return Variant::no_uncertainty;
  if (s == "multi_teacher") return Variant::multi_teacher;
  if (s == "original_w2s") return Variant::original_w2s;
  throw UsageError("unknown variant: " + s);
}

nlohmann::json to_json(const TeacherInput& input) {
  return {{"teacher_id", input.teacher_id},
          {"final_response", input.final_response},
          {"uncertainty", input.uncertainty}};
}

TeacherInput teacher_input_from_json(const nlohmann::json& j) {
  TeacherInput input;
  input.teacher_id = j.at("teacher_id").get<std::string>();
  input.final_response = j.at("final_response").get<std::string>();
  input.uncertainty = j.at("uncertainty").get<std::string>();
  return input;
}

nlohmann::json to_json(const SupervisionRecord& record) {
  nlohmann::json teachers = nlohmann::json::array();
  for (const auto& t : record.teacher_inputs) teachers.push_back(to_json(t));
  nlohmann::json j{{"qid", record.qid},
                   {"question", record.question},
                   {"student_initial", record.student_initial},
                   {"teacher_inputs", teachers},
                   {"student_final", record.student_final},
                   {"variant", to_string(record.variant)},
                   {"failed", record.failed}};
  if (record.failed) j["error"] = record.error;
  return j;
}

SupervisionRecord supervision_record_from_json(const nlohmann::json& j) {
  SupervisionRecord record;
  record.qid = j.at("qid").get<std::string>();
  record.question = j.at("question").get<std::string>();
  record.student_initial = j.at("student_initial").get<std::string>();
  for (const auto& t : j.at("teacher_inputs")) {
    record.teacher_inputs.push_back(teacher_input_from_json(t));
  }
  record.student_final = j.at("student_final").get<std::string>();
  record.variant = variant_from_string(j.at("variant").get<std::string>());
  record.failed = j.value("failed", false);
  record.error = j.value("error", "");
  return record;
}

std::string student_zero_shot(Backend& backend, const ModelRef& student,
                              const std::string& question, std::uint64_t seed) {
  if (question.empty()) throw UsageError("student_zero_shot called with an empty question");
  const auto params = SamplingParams::greedy(/*max_length=*/512, seed);
  return backend.generate(student, question, params).front();
}

FilledPrompt build_refinement_prompt(const TemplateSet& templates, const std::string& question,
                                     const std::string& student_initial,
                                     const std::vector<TeacherInput>& teacher_inputs,
                                     Variant variant) {
  if (teacher_inputs.empty()) {
    throw UsageError("build_refinement_prompt called with no teacher inputs");
  }
  if (variant == Variant::original_w2s) {
    throw UsageError("original_w2s performs no refinement; no prompt to build");
  }
  if (student_initial.empty()) {
    throw UsageError("variant " + to_string(variant) + " requires the student's initial answer");
  }

  switch (variant) {
    case Variant::alice: {
      if (teacher_inputs.size() != 1) {
        throw UsageError("alice expects exactly one teacher input, got " +
                         std::to_string(teacher_inputs.size()));
      }
      const TeacherInput& t = teacher_inputs.front();
      return fill_template(templates.refinement,
                           {question, student_initial, t.final_response, t.uncertainty});
    }
    case Variant::no_uncertainty: {
      if (teacher_inputs.size() != 1) {
        throw UsageError("no_uncertainty expects exactly one teacher input, got " +
                         std::to_string(teacher_inputs.size()));
      }
      return fill_template(templates.refinement_no_uncertainty,
                           {question, student_initial, teacher_inputs.front().final_response});
    }
    case Variant::multi_teacher: {
      if (teacher_inputs.size() < 2) {
        throw UsageError("multi_teacher expects at least two teacher inputs, got " +
                         std::to_string(teacher_inputs.size()));
      }
      std::string blocks;
      for (std::size_t k = 0; k < teacher_inputs.size(); ++k) {
        const std::string label = std::to_string(k + 1);
        const FilledPrompt block =
            fill_template(templates.refinement_teacher_block,
                          {label, teacher_inputs[k].final_response, label,
                           teacher_inputs[k].uncertainty});
        if (k != 0) blocks += "\n";
        blocks += block.text;
      }
      return fill_template(templates.refinement_multi_teacher,
                           {question, student_initial, blocks});
    }
    case Variant::original_w2s: break;  // unreachable, handled above
  }
  throw UsageError("unknown variant value");
}

std::string refine_response(Backend& backend, const ModelRef& student, const std::string& prompt,
                            std::uint64_t seed) {
  const auto params = SamplingParams::greedy(/*max_length=*/512, seed);
  std::string completion = backend.generate(student, prompt, params).front();
  if (trim(completion).empty()) {
    throw PipelineError("refinement produced an empty completion");
  }
  return completion;
}

std::vector<TrainingPair> build_supervision_corpus(
    const std::vector<SupervisionRecord>& records) {
  if (records.empty()) throw UsageError("build_supervision_corpus called with no records");

  std::vector<const SupervisionRecord*> ordered;
  for (const auto& record : records) {
    if (!record.failed) ordered.push_back(&record);
  }
  if (ordered.empty()) {
    throw PipelineError("every supervision record failed; no corpus to build");
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const SupervisionRecord* a, const SupervisionRecord* b) { return a->qid < b->qid; });

  std::vector<TrainingPair> corpus;
  corpus.reserve(ordered.size());
  for (const SupervisionRecord* record : ordered) {
    corpus.push_back({record->question, record->student_final});
  }
  return corpus;
}

ModelRef train_student(Backend& backend, const ModelRef& base,
                       const std::vector<TrainingPair>& corpus, int stage_number) {
  if (corpus.empty()) throw UsageError("supervision corpus is empty; nothing to fine-tune on");
  if (stage_number < 1) throw UsageError("stage_number must be >= 1");
  return backend.finetune(base, corpus, "student-stage" + std::to_string(stage_number));
}

}  // namespace w2s
