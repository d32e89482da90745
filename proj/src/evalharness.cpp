#include "w2s/evalharness.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

nlohmann::json to_json(const ItemVerdict& verdict) {
  nlohmann::json j{{"qid", verdict.qid},
                   {"response", verdict.response},
                   {"correct", verdict.correct}};
  if (!verdict.error.empty()) j["error"] = verdict.error;
  return j;
}

ItemVerdict item_verdict_from_json(const nlohmann::json& j) {
  ItemVerdict verdict;
  verdict.qid = j.at("qid").get<std::string>();
  verdict.response = j.at("response").get<std::string>();
  verdict.correct = j.at("correct").get<bool>();
  verdict.error = j.value("error", "");
  return verdict;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));
  return {{"model_id", report.model_id},
          {"variant_label", report.variant_label},
          {"dataset", to_string(report.dataset)},
          {"n_items", report.n_items},
          {"n_correct", report.n_correct},
          {"accuracy", report.accuracy},
          {"verdicts", verdicts}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.model_id = j.at("model_id").get<std::string>();
  report.variant_label = j.at("variant_label").get<std::string>();
  report.dataset = dataset_from_string(j.at("dataset").get<std::string>());
  report.n_items = j.at("n_items").get<int>();
  report.n_correct = j.at("n_correct").get<int>();
  report.accuracy = j.at("accuracy").get<double>();
  for (const auto& v : j.at("verdicts")) report.verdicts.push_back(item_verdict_from_json(v));
  return report;
}

EvalReport evaluate(Backend& backend, const ModelRef& model,
                    const std::vector<LabeledExample>& eval_set,
                    const std::string& variant_label, std::uint64_t seed, int workers) {
  if (eval_set.empty()) throw UsageError("evaluate called with an empty eval set");

  EvalReport report;
  report.model_id = model.id;
  report.variant_label = variant_label;
  report.dataset = eval_set.front().dataset;

  report.verdicts = parallel_map(eval_set.size(), workers, [&](std::size_t i) -> ItemVerdict {
    const LabeledExample& item = eval_set[i];
    ItemVerdict verdict;
    verdict.qid = item.qid;
    try {
      const auto params = SamplingParams::greedy(/*max_length=*/512, seed ^ fnv1a64("eval:" + item.qid));
      verdict.response = backend.generate(model, item.question, params).front();
      verdict.correct = grade(verdict.response, item.gold_answer, item.dataset);
    } catch (const std::exception& e) {
      verdict.correct = false;
      verdict.error = e.what();
    }
    return verdict;
  });

  report.n_items = static_cast<int>(report.verdicts.size());
  for (const auto& v : report.verdicts) report.n_correct += v.correct ? 1 : 0;
  report.accuracy = static_cast<double>(report.n_correct) / static_cast<double>(report.n_items);
  return report;
}

namespace {

// Canonical row order for the comparison grid; unknown labels go below.
const std::vector<std::string>& canonical_rows() {
  static const std::vector<std::string> rows{"weak", "original_w2s_q_a", "original_w2s_q_cot_a",
                                             "alice", "strong"};
  return rows;
}

int row_rank(const std::string& label) {
  const auto& rows = canonical_rows();
  const auto it = std::find(rows.begin(), rows.end(), label);
  return it == rows.end() ? static_cast<int>(rows.size()) : static_cast<int>(it - rows.begin());
}

}  // namespace

ComparisonTable ComparisonTable::build(std::vector<EvalReport> reports) {
  if (reports.empty()) throw UsageError("comparison table needs at least one report");
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& report : reports) {
    if (!cells.emplace(report.variant_label, to_string(report.dataset)).second) {
      throw UsageError("duplicate comparison cell: (" + report.variant_label + ", " +
                       to_string(report.dataset) + ")");
    }
  }
  ComparisonTable table;
  table.reports_ = std::move(reports);
  return table;
}

std::vector<std::string> ComparisonTable::row_labels() const {
  std::vector<std::string> labels;
  for (const auto& report : reports_) {
    if (std::find(labels.begin(), labels.end(), report.variant_label) == labels.end()) {
      labels.push_back(report.variant_label);
    }
  }
  std::stable_sort(labels.begin(), labels.end(),
                   [](const std::string& a, const std::string& b) {
                     return row_rank(a) < row_rank(b);
                   });
  return labels;
}

std::vector<Dataset> ComparisonTable::column_datasets() const {
  std::vector<Dataset> columns;
  for (Dataset d : {Dataset::gsm8k, Dataset::hotpotqa, Dataset::triviaqa, Dataset::arc_challenge,
                    Dataset::synthetic}) {
    for (const auto& report : reports_) {
      if (report.dataset == d) {
        columns.push_back(d);
        break;
      }
    }
  }
  return columns;
}

std::string ComparisonTable::render_text() const {
  const auto rows = row_labels();
  const auto columns = column_datasets();

  std::size_t label_width = std::string("variant").size();
  for (const auto& row : rows) label_width = std::max(label_width, row.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "variant";
  for (Dataset d : columns) out << "  " << std::setw(14) << to_string(d);
  out << "\n";

  for (const auto& row : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << row;
    for (Dataset d : columns) {
      std::string cell = "-";
      for (const auto& report : reports_) {
        if (report.variant_label == row && report.dataset == d) {
          std::ostringstream v;
          v << std::fixed << std::setprecision(4) << report.accuracy;
          cell = v.str();
          break;
        }
      }
      out << "  " << std::setw(14) << cell;
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json ComparisonTable::to_json() const {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& report : reports_) reports.push_back(w2s::to_json(report));
  return {{"reports", reports}};
}

ComparisonTable ComparisonTable::from_json(const nlohmann::json& j) {
  std::vector<EvalReport> reports;
  for (const auto& r : j.at("reports")) reports.push_back(eval_report_from_json(r));
  return build(std::move(reports));
}

}  // namespace w2s
