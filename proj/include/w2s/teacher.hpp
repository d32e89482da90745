#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"
#include "w2s/corpus.hpp"

namespace w2s {

enum class RejectReason { wrong_answer, no_answer };

std::string to_string(RejectReason reason);
RejectReason reject_reason_from_string(const std::string& s);

// One sampled reasoning chain with its grading verdict.
struct CotCandidate {
  std::string qid;
  std::string cot_text;
  std::string extracted_answer;
  bool accepted = false;
  std::optional<RejectReason> reject_reason;

  bool operator==(const CotCandidate&) const = default;
};

nlohmann::json to_json(const CotCandidate& candidate);
CotCandidate cot_candidate_from_json(const nlohmann::json& j);

// Teacher fine-tune target layout: bare answers or full chains.
enum class CorpusFormat { q_a, q_cot_a };

std::string to_string(CorpusFormat format);
CorpusFormat corpus_format_from_string(const std::string& s);

// The zero-shot instruction used to sample reasoning chains. The fixed
// "The answer is X." suffix requirement keeps extraction reliable.
std::string cot_elicitation_prompt(const std::string& question);

// `chain` guaranteed to end in a "The answer is <answer>." line; appends one
// only when the chain does not already terminate with it.
std::string with_final_answer_line(const std::string& chain, const std::string& answer);

// Samples params.n_samples chains for one labeled example and grades each
// against the gold answer. Backend errors are rethrown with the qid attached.
std::vector<CotCandidate> generate_cot_candidates(Backend& backend, const ModelRef& base_teacher,
                                                  const LabeledExample& example,
                                                  const SamplingParams& params);

struct TeacherCorpus {
  std::vector<TrainingPair> pairs;
  std::vector<std::string> used_qids;     // aligned with pairs
  std::vector<std::string> dropped_qids;  // no gold chain and no accepted candidate
};

// Folds the teacher half into fine-tune pairs, ordered by qid. Annotated
// chains are used directly; otherwise the first accepted candidate supplies
// the chain. Examples with neither are dropped in BOTH formats so q_a and
// q_cot_a corpora stay prompt-aligned.
// Throws PipelineError when `candidates_by_qid` mentions a w2s-half qid.
TeacherCorpus build_teacher_corpus(
    const SplitResult& split,
    const std::map<std::string, std::vector<CotCandidate>>& candidates_by_qid,
    CorpusFormat format);

// Fine-tunes `base` on the corpus under the tag "teacher".
// Throws UsageError on an empty corpus before touching the backend.
ModelRef train_teacher(Backend& backend, const ModelRef& base,
                       const std::vector<TrainingPair>& corpus);

}  // namespace w2s
