#include "w2s/corpus.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

std::string to_string(Dataset dataset) {
  switch (dataset) {
    case Dataset::gsm8k: return "gsm8k";
    case Dataset::hotpotqa: return "hotpotqa";
    case Dataset::triviaqa: return "triviaqa";
    case Dataset::arc_challenge: return "arc_challenge";
    case Dataset::synthetic: return "synthetic";
  }
  throw UsageError("unknown dataset value");
}

Dataset dataset_from_string(const std::string& name) {
  if (name == "gsm8k") return Dataset::gsm8k;
  if (name == "hotpotqa") return Dataset::hotpotqa;
  if (name == "triviaqa") return Dataset::triviaqa;
  if (name == "arc_challenge") return Dataset::arc_challenge;
  if (name == "synthetic") return Dataset::synthetic;
  throw UsageError("unknown dataset: " + name);
}

nlohmann::json to_json(const LabeledExample& example) {
  nlohmann::json j{{"qid", example.qid},
                   {"question", example.question},
                   {"answer", example.gold_answer},
                   {"dataset", to_string(example.dataset)}};
  if (example.gold_cot) j["cot"] = *example.gold_cot;
  return j;
}

LabeledExample labeled_example_from_json(const nlohmann::json& j) {
  LabeledExample example;
  example.qid = j.at("qid").get<std::string>();
  example.question = j.at("question").get<std::string>();
  example.gold_answer = j.at("answer").get<std::string>();
  example.dataset = dataset_from_string(j.at("dataset").get<std::string>());
  if (j.contains("cot")) example.gold_cot = j.at("cot").get<std::string>();
  return example;
}

nlohmann::json to_json(const QuestionOnly& question) {
  return {{"qid", question.qid},
          {"question", question.question},
          {"dataset", to_string(question.dataset)}};
}

QuestionOnly question_only_from_json(const nlohmann::json& j) {
  QuestionOnly question;
  question.qid = j.at("qid").get<std::string>();
  question.question = j.at("question").get<std::string>();
  question.dataset = dataset_from_string(j.at("dataset").get<std::string>());
  return question;
}

std::vector<LabeledExample> load_dataset(Dataset dataset, const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<LabeledExample> examples;
  std::map<std::string, std::size_t> seen_qids;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::string where = path.string() + ": line " + std::to_string(i + 1);
    if (trim(line).empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(where + ": " + e.what());
    }

    LabeledExample example;
    example.dataset = dataset;
    try {
      example.qid = j.value("qid", to_string(dataset) + "-" + std::to_string(i + 1));
      example.question = j.at("question").get<std::string>();
      if (j.contains("answer")) {
        example.gold_answer = j.at("answer").get<std::string>();
        if (j.contains("cot")) example.gold_cot = j.at("cot").get<std::string>();
      } else if (j.contains("solution")) {
        // GSM8K-style record: the solution text is the annotated chain and
        // carries the final answer at its end.
        const auto solution = j.at("solution").get<std::string>();
        example.gold_cot = solution;
        example.gold_answer = std::string(extract_final_answer(solution, dataset));
      } else {
        throw UsageError("record has neither 'answer' nor 'solution'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(where + ": " + e.what());
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    }

    if (example.gold_answer.empty() || example.gold_answer == kNoAnswer) {
      throw UsageError(where + ": record has no usable gold answer");
    }
    if (example.gold_cot && example.gold_cot->empty()) {
      throw UsageError(where + ": 'cot' present but empty");
    }
    if (!seen_qids.emplace(example.qid, i + 1).second) {
      throw UsageError(where + ": duplicate qid '" + example.qid + "' (first seen on line " +
                       std::to_string(seen_qids[example.qid]) + ")");
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

SplitResult split_halves(const std::vector<LabeledExample>& examples, double teacher_ratio) {
  if (examples.empty()) throw UsageError("split_halves called on an empty dataset");
  if (!(teacher_ratio > 0.0) || teacher_ratio > 1.0) {
    throw UsageError("teacher_ratio must be in (0, 1]");
  }

  const auto n = examples.size();
  const auto teacher_n = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * teacher_ratio));

  SplitResult split;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < teacher_n) {
      split.teacher_half.push_back(examples[i]);
    } else {
      split.w2s_half.push_back({examples[i].qid, examples[i].question, examples[i].dataset});
      split.sealed_gold.emplace(examples[i].qid, examples[i].gold_answer);
    }
  }
  if (split.w2s_half.empty()) {
    log_warn("split leaves the weak-to-strong phase empty (teacher half took all " +
             std::to_string(n) + " examples)");
  }
  return split;
}

namespace {

// Matches integers and decimals, allowing comma thousand-separators.
const std::regex& number_pattern() {
  static const std::regex re(R"([-+]?\d+(?:,\d{3})*(?:\.\d+)?)");
  return re;
}

// Strips separators and the redundant fractional tail: "1,350.00" → "1350".
std::string normalize_number(std::string token) {
  std::erase(token, ',');
  if (!token.empty() && token.front() == '+') token.erase(token.begin());
  if (token.find('.') != std::string::npos) {
    while (!token.empty() && token.back() == '0') token.pop_back();
    if (!token.empty() && token.back() == '.') token.pop_back();
  }
  return token;
}

}  // namespace

std::string extract_final_answer(const std::string& response, Dataset dataset) {
  if (response.empty()) throw UsageError("extract_final_answer called on an empty response");
  if (dataset != Dataset::gsm8k) return trim(response);

  std::string last;
  for (auto it = std::sregex_iterator(response.begin(), response.end(), number_pattern());
       it != std::sregex_iterator(); ++it) {
    last = it->str();
  }
  if (last.empty()) return std::string(kNoAnswer);
  return normalize_number(std::move(last));
}

namespace {

// True when `gold` leads with a multiple-choice letter: "B", "B.", "B)",
// "(B) ..." and so on.
std::optional<char> option_letter(const std::string& gold) {
  std::string t = trim(gold);
  if (!t.empty() && t.front() == '(') t.erase(t.begin());
  if (t.empty()) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(t.front())));
  if (c < 'A' || c > 'E') return std::nullopt;
  if (t.size() == 1) return c;
  const char next = t[1];
  if (next == '.' || next == ')' || next == ':' || next == ' ') return c;
  return std::nullopt;
}

// "B. the mitochondria" → "the mitochondria": the option text without its
// letter prefix. Empty when the gold is the bare letter.
std::string option_text(const std::string& gold) {
  std::string t = trim(gold);
  if (!t.empty() && t.front() == '(') t.erase(t.begin());
  t.erase(t.begin());  // the letter option_letter() validated
  while (!t.empty() && (t.front() == '.' || t.front() == ')' || t.front() == ':' ||
                        t.front() == ' ')) {
    t.erase(t.begin());
  }
  return t;
}

// Does `response` contain `letter` as an isolated uppercase token?
bool contains_standalone_letter(const std::string& response, char letter) {
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] != letter) continue;
    const bool left_ok =
        i == 0 || !std::isalnum(static_cast<unsigned char>(response[i - 1]));
    const bool right_ok = i + 1 == response.size() ||
                          !std::isalnum(static_cast<unsigned char>(response[i + 1]));
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

bool grade(const std::string& response, const std::string& gold, Dataset dataset) {
  if (gold.empty()) throw UsageError("grade called with an empty gold answer");
  if (response.empty()) return false;

  if (dataset == Dataset::gsm8k) {
    const std::string got = extract_final_answer(response, dataset);
    if (got == kNoAnswer) return false;
    const std::string want = extract_final_answer(gold, dataset);
    if (want == kNoAnswer) return false;
    char* got_end = nullptr;
    char* want_end = nullptr;
    const long double got_value = std::strtold(got.c_str(), &got_end);
    const long double want_value = std::strtold(want.c_str(), &want_end);
    if (got_end != got.c_str() + got.size() || want_end != want.c_str() + want.size()) {
      return got == want;
    }
    return got_value == want_value;
  }

  if (contains_normalized(response, gold)) return true;
  if (dataset == Dataset::arc_challenge) {
    if (const auto letter = option_letter(gold)) {
      const std::string text = option_text(gold);
      if (!text.empty() && contains_normalized(response, text)) return true;
      return contains_standalone_letter(response, *letter);
    }
  }
  return false;
}

}  // namespace w2s
