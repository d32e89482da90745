#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace w2s {

enum class Dataset { gsm8k, hotpotqa, triviaqa, arc_challenge, synthetic };

std::string to_string(Dataset dataset);
Dataset dataset_from_string(const std::string& name);

// Sentinel returned by extract_final_answer when a numeric-answer response
// contains no number at all. Grades false against every gold answer.
inline constexpr std::string_view kNoAnswer = "NO_ANSWER";

struct LabeledExample {
  std::string qid;
  std::string question;
  std::string gold_answer;
  std::optional<std::string> gold_cot;
  Dataset dataset = Dataset::synthetic;

  bool operator==(const LabeledExample&) const = default;
};

// The shape questions take once they cross into the weak-to-strong phase:
// gold fields are deliberately absent so they cannot leak into prompts.
struct QuestionOnly {
  std::string qid;
  std::string question;
  Dataset dataset = Dataset::synthetic;

  bool operator==(const QuestionOnly&) const = default;
};

struct SplitResult {
  std::vector<LabeledExample> teacher_half;
  std::vector<QuestionOnly> w2s_half;
  // qid → gold answer for the w2s half, kept aside strictly for evaluation
  // audits (the taint scan uses it as its needle list).
  std::map<std::string, std::string> sealed_gold;
};

nlohmann::json to_json(const LabeledExample& example);
LabeledExample labeled_example_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuestionOnly& question);
QuestionOnly question_only_from_json(const nlohmann::json& j);

// Reads one record per line. Records may carry an explicit qid; otherwise
// qids derive from the record index. A record may supply `solution` instead
// of answer/cot, in which case the final answer is extracted from it.
// Throws UsageError naming the offending line on malformed input.
std::vector<LabeledExample> load_dataset(Dataset dataset, const std::filesystem::path& path);

// First ⌈n·teacher_ratio⌉ examples become the teacher half, the rest the
// w2s half, preserving input order. Ratio 0.5 is the standard protocol;
// other values exist for baseline runs that train on a specific slice.
// Throws UsageError on an empty list or a ratio outside (0, 1].
SplitResult split_halves(const std::vector<LabeledExample>& examples, double teacher_ratio = 0.5);

// gsm8k: last numeric token, commas stripped, trailing fractional zeros
// dropped ("72.0" → "72"); kNoAnswer when no number occurs.
// Other datasets: the trimmed response (grading is containment-based).
// Throws UsageError on an empty response.
std::string extract_final_answer(const std::string& response, Dataset dataset);

// gsm8k: numeric value equality of the extracted answers. Others:
// case-insensitive, whitespace-collapsed containment of gold in response;
// arc_challenge additionally accepts the gold option letter as a standalone
// uppercase token. Throws UsageError on an empty gold.
bool grade(const std::string& response, const std::string& gold, Dataset dataset);

}  // namespace w2s
