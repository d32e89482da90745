#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"
#include "w2s/templates.hpp"
#include "w2s/uncertainty.hpp"

namespace w2s {

// How a stage turns teacher demos into student supervision.
//   alice          — refinement over one teacher's answer + uncertainty
//   no_uncertainty — refinement over the answer alone
//   multi_teacher  — refinement over several teachers' answers + uncertainties
//   original_w2s   — no refinement; teacher demos become targets directly
enum class Variant { alice, no_uncertainty, multi_teacher, original_w2s };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& s);

// One teacher's contribution to a refinement prompt.
struct TeacherInput {
  std::string teacher_id;
  std::string final_response;
  std::string uncertainty;  // free text or the "N/A" sentinel

  bool operator==(const TeacherInput&) const = default;
};

// Everything that happened to one question during a stage, persisted for
// audit. Failed records stay in the trace but never reach the corpus.
struct SupervisionRecord {
  std::string qid;
  std::string question;
  std::string student_initial;  // empty for original_w2s
  std::vector<TeacherInput> teacher_inputs;
  std::string student_final;
  Variant variant = Variant::alice;
  bool failed = false;
  std::string error;  // set when failed

  bool operator==(const SupervisionRecord&) const = default;
};

nlohmann::json to_json(const TeacherInput& input);
TeacherInput teacher_input_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SupervisionRecord& record);
SupervisionRecord supervision_record_from_json(const nlohmann::json& j);

// Single greedy completion for the bare question.
std::string student_zero_shot(Backend& backend, const ModelRef& student,
                              const std::string& question, std::uint64_t seed);

// Renders the variant's refinement prompt. multi_teacher repeats a labeled
// answer+uncertainty block per teacher ("Model 1", "Model 2", ...).
// Throws UsageError when the teacher count does not fit the variant, when
// student_initial is empty, or for original_w2s (which builds no prompt).
FilledPrompt build_refinement_prompt(const TemplateSet& templates, const std::string& question,
                                     const std::string& student_initial,
                                     const std::vector<TeacherInput>& teacher_inputs,
                                     Variant variant);

// Single greedy completion over a refinement prompt; the caller stores it
// verbatim as student_final. Throws PipelineError on an empty completion so
// the stage driver can record a per-question failure.
std::string refine_response(Backend& backend, const ModelRef& student, const std::string& prompt,
                            std::uint64_t seed);

// Fine-tune pairs (bare question → student_final), ordered by qid, failed
// records excluded. Throws UsageError on an empty record list and
// PipelineError when every record failed.
std::vector<TrainingPair> build_supervision_corpus(const std::vector<SupervisionRecord>& records);

// Fine-tunes the base student under the tag "student-stage<stage_number>".
// Throws UsageError on an empty corpus before touching the backend.
ModelRef train_student(Backend& backend, const ModelRef& base,
                       const std::vector<TrainingPair>& corpus, int stage_number);

}  // namespace w2s
