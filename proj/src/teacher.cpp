#include "w2s/teacher.hpp"

#include <algorithm>
#include <set>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::wrong_answer: return "wrong_answer";
    case RejectReason::no_answer: return "no_answer";
  }
  throw UsageError("unknown reject reason value");
}

RejectReason reject_reason_from_string(const std::string& s) {
  if (s == "wrong_answer") return RejectReason::wrong_answer;
  if (s == "no_answer") return RejectReason::no_answer;
  throw UsageError("unknown reject reason: " + s);
}

nlohmann::json to_json(const CotCandidate& candidate) {
  nlohmann::json j{{"qid", candidate.qid},
                   {"cot_text", candidate.cot_text},
                   {"extracted_answer", candidate.extracted_answer},
                   {"accepted", candidate.accepted}};
  if (candidate.reject_reason) j["reject_reason"] = to_string(*candidate.reject_reason);
  return j;
}

CotCandidate cot_candidate_from_json(const nlohmann::json& j) {
  CotCandidate candidate;
  candidate.qid = j.at("qid").get<std::string>();
  candidate.cot_text = j.at("cot_text").get<std::string>();
  candidate.extracted_answer = j.at("extracted_answer").get<std::string>();
  candidate.accepted = j.at("accepted").get<bool>();
  if (j.contains("reject_reason")) {
    candidate.reject_reason = reject_reason_from_string(j.at("reject_reason").get<std::string>());
  }
  return candidate;
}

std::string to_string(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::q_a: return "q_a";
    case CorpusFormat::q_cot_a: return "q_cot_a";
  }
  throw UsageError("unknown corpus format value");
}

CorpusFormat corpus_format_from_string(const std::string& s) {
  if (s == "q_a") return CorpusFormat::q_a;
  if (s == "q_cot_a") return CorpusFormat::q_cot_a;
  throw UsageError("unknown corpus format: " + s);
}

std::string cot_elicitation_prompt(const std::string& question) {
  return "Solve the following problem. Reason step by step, then state the result on a "
         "final line that reads \"The answer is X.\"\n\n" +
         question;
}

std::string with_final_answer_line(const std::string& chain, const std::string& answer) {
  const std::string line = "The answer is " + answer + ".";
  const std::string trimmed = trim(chain);
  if (trimmed.size() >= line.size() &&
      trimmed.compare(trimmed.size() - line.size(), line.size(), line) == 0) {
    return chain;
  }
  return chain + "\n" + line;
}

std::vector<CotCandidate> generate_cot_candidates(Backend& backend, const ModelRef& base_teacher,
                                                  const LabeledExample& example,
                                                  const SamplingParams& params) {
  std::vector<std::string> completions;
  const std::string prompt = cot_elicitation_prompt(example.question);
  try {
    completions = backend.generate(base_teacher, prompt, params);
  } catch (const TransportError& e) {
    throw TransportError("qid " + example.qid + ": " + e.what(), e.attempts());
  } catch (const ResolutionError& e) {
    throw ResolutionError("qid " + example.qid + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError("qid " + example.qid + ": " + e.what());
  } catch (const std::exception& e) {
    throw PipelineError("qid " + example.qid + ": " + e.what());
  }

  std::vector<CotCandidate> candidates;
  candidates.reserve(completions.size());
  for (const auto& text : completions) {
    CotCandidate candidate;
    candidate.qid = example.qid;
    candidate.cot_text = text;
    candidate.extracted_answer =
        text.empty() ? std::string(kNoAnswer) : extract_final_answer(text, example.dataset);
    candidate.accepted = !text.empty() && grade(text, example.gold_answer, example.dataset);
    if (!candidate.accepted) {
      candidate.reject_reason = candidate.extracted_answer == kNoAnswer
                                    ? RejectReason::no_answer
                                    : RejectReason::wrong_answer;
    }
    candidates.push_back(std::move(candidate));
  }
  return candidates;
}

TeacherCorpus build_teacher_corpus(
    const SplitResult& split,
    const std::map<std::string, std::vector<CotCandidate>>& candidates_by_qid,
    CorpusFormat format) {
  std::set<std::string> w2s_qids;
  for (const auto& q : split.w2s_half) w2s_qids.insert(q.qid);
  for (const auto& [qid, unused] : candidates_by_qid) {
    if (w2s_qids.count(qid) != 0) {
      throw PipelineError("information-flow violation: candidates supplied for w2s-half qid " +
                          qid);
    }
  }

  std::vector<const LabeledExample*> ordered;
  ordered.reserve(split.teacher_half.size());
  for (const auto& example : split.teacher_half) ordered.push_back(&example);
  std::sort(ordered.begin(), ordered.end(),
            [](const LabeledExample* a, const LabeledExample* b) { return a->qid < b->qid; });

  TeacherCorpus corpus;
  for (const LabeledExample* example : ordered) {
    // Prefer the dataset's own annotation; fall back to the first accepted
    // sampled chain.
    std::optional<std::string> chain;
    if (example->gold_cot) {
      chain = *example->gold_cot;
    } else if (auto it = candidates_by_qid.find(example->qid); it != candidates_by_qid.end()) {
      for (const auto& candidate : it->second) {
        if (candidate.accepted) {
          chain = candidate.cot_text;
          break;
        }
      }
    }
    if (!chain) {
      corpus.dropped_qids.push_back(example->qid);
      continue;
    }

    TrainingPair pair;
    pair.prompt = example->question;
    pair.target = format == CorpusFormat::q_a
                      ? example->gold_answer
                      : with_final_answer_line(*chain, example->gold_answer);
    corpus.pairs.push_back(std::move(pair));
    corpus.used_qids.push_back(example->qid);
  }
  return corpus;
}

ModelRef train_teacher(Backend& backend, const ModelRef& base,
                       const std::vector<TrainingPair>& corpus) {
  if (corpus.empty()) throw UsageError("teacher corpus is empty; nothing to fine-tune on");
  return backend.finetune(base, corpus, "teacher");
}

}  // namespace w2s
