#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"
#include "w2s/corpus.hpp"

namespace w2s {

struct ItemVerdict {
  std::string qid;
  std::string response;
  bool correct = false;
  std::string error;  // set when the backend failed for this item

  bool operator==(const ItemVerdict&) const = default;
};

struct EvalReport {
  std::string model_id;
  std::string variant_label;  // row name in comparison tables, e.g. "alice"
  Dataset dataset = Dataset::synthetic;
  int n_items = 0;
  int n_correct = 0;
  double accuracy = 0.0;
  std::vector<ItemVerdict> verdicts;

  bool operator==(const EvalReport&) const = default;
};

nlohmann::json to_json(const ItemVerdict& verdict);
ItemVerdict item_verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Greedy generation per item, graded with the dataset's rule. Backend
// failures grade false and are flagged on the verdict rather than aborting.
// Throws UsageError on an empty eval set.
EvalReport evaluate(Backend& backend, const ModelRef& model,
                    const std::vector<LabeledExample>& eval_set,
                    const std::string& variant_label, std::uint64_t seed, int workers = 1);

// Variant-by-dataset accuracy grid. Rows follow the canonical order (weak,
// original W2SG Q-A, original W2SG Q-CoT-A, alice, strong) with unknown
// labels appended in first-seen order; columns follow the dataset enum.
// Missing cells render as absent and are never imputed.
class ComparisonTable {
 public:
  // Throws UsageError when two reports share (variant_label, dataset).
  static ComparisonTable build(std::vector<EvalReport> reports);

  const std::vector<EvalReport>& reports() const { return reports_; }
  std::vector<std::string> row_labels() const;
  std::vector<Dataset> column_datasets() const;

  std::string render_text() const;
  nlohmann::json to_json() const;
  static ComparisonTable from_json(const nlohmann::json& j);

 private:
  std::vector<EvalReport> reports_;
};

}  // namespace w2s
