#include <doctest/doctest.h>

#include <string>
#include <vector>

#include "w2s/errors.hpp"
#include "w2s/evalharness.hpp"
#include "w2s/mock_backend.hpp"

using namespace w2s;

namespace {

std::vector<LabeledExample> tiny_eval_set() {
  std::vector<LabeledExample> items;
  for (int i = 1; i <= 6; ++i) {
    LabeledExample item;
    item.qid = "e-" + std::to_string(i);
    item.question = "eval question " + std::to_string(i);
    item.gold_answer = std::to_string(i * 11);
    item.dataset = Dataset::synthetic;
    items.push_back(item);
  }
  return items;
}

// Scripted model: right on items 1-4, wrong on 5, off-by-one on 6.
MockBackend eval_backend() {
  MockScript script;
  for (int i = 1; i <= 4; ++i) {
    script.entries.push_back({"candidate", "eval question " + std::to_string(i),
                              {"the answer is " + std::to_string(i * 11)}});
  }
  script.entries.push_back({"candidate", "eval question 5", {"no idea"}});
  script.entries.push_back({"candidate", "eval question 6", {"the answer is 67"}});
  MockBackend backend(script);
  backend.register_model({"candidate", Role::Student, {}});
  return backend;
}

}  // namespace

TEST_CASE("evaluate grades each item and recomputes the tallies") {
  auto backend = eval_backend();
  const auto report =
      evaluate(backend, backend.resolve("candidate"), tiny_eval_set(), "alice", 99);

  CHECK(report.model_id == "candidate");
  CHECK(report.variant_label == "alice");
  CHECK(report.dataset == Dataset::synthetic);
  CHECK(report.n_items == 6);
  CHECK(report.n_correct == 4);
  CHECK(report.accuracy == doctest::Approx(4.0 / 6.0));

  REQUIRE(report.verdicts.size() == 6);
  CHECK(report.verdicts[0].qid == "e-1");
  CHECK(report.verdicts[0].response == "the answer is 11");
  CHECK(report.verdicts[0].correct);
  CHECK(report.verdicts[4].correct == false);
  CHECK(report.verdicts[5].correct == false);

  // Tallies must agree with the verdicts they summarize.
  int recount = 0;
  for (const auto& v : report.verdicts) recount += v.correct ? 1 : 0;
  CHECK(recount == report.n_correct);
}

TEST_CASE("a backend failure flags the verdict instead of aborting") {
  auto backend = eval_backend();
  auto items = tiny_eval_set();
  items[2].question = "";  // the mock rejects empty prompts

  const auto report = evaluate(backend, backend.resolve("candidate"), items, "alice", 99);
  CHECK(report.n_items == 6);
  CHECK(report.verdicts[2].correct == false);
  CHECK_FALSE(report.verdicts[2].error.empty());
  CHECK(report.verdicts[3].correct);  // later items still ran
  CHECK(report.n_correct == 3);
}

TEST_CASE("evaluate rejects an empty eval set") {
  auto backend = eval_backend();
  CHECK_THROWS_AS(evaluate(backend, backend.resolve("candidate"), {}, "alice", 99), UsageError);
}

TEST_CASE("evaluation is deterministic and worker-count independent") {
  auto backend_a = eval_backend();
  auto backend_b = eval_backend();
  const auto sequential =
      evaluate(backend_a, backend_a.resolve("candidate"), tiny_eval_set(), "alice", 99, 1);
  const auto parallel =
      evaluate(backend_b, backend_b.resolve("candidate"), tiny_eval_set(), "alice", 99, 4);
  CHECK(sequential == parallel);
}

TEST_CASE("eval reports round-trip through json") {
  auto backend = eval_backend();
  auto items = tiny_eval_set();
  items[2].question = "";  // exercise the optional error field too
  const auto report = evaluate(backend, backend.resolve("candidate"), items, "alice", 99);
  CHECK(eval_report_from_json(to_json(report)) == report);
  CHECK(to_json(report.verdicts[0]).contains("error") == false);
  CHECK(to_json(report.verdicts[2]).contains("error"));
}

namespace {

EvalReport stub_report(const std::string& label, Dataset dataset, double accuracy) {
  EvalReport report;
  report.model_id = "m-" + label;
  report.variant_label = label;
  report.dataset = dataset;
  report.n_items = 4;
  report.n_correct = static_cast<int>(accuracy * 4.0 + 0.5);
  report.accuracy = accuracy;
  return report;
}

}  // namespace

TEST_CASE("comparison table orders rows canonically and unknowns by first use") {
  const auto table = ComparisonTable::build({
      stub_report("strong", Dataset::gsm8k, 0.9),
      stub_report("ablation-b", Dataset::gsm8k, 0.4),
      stub_report("alice", Dataset::gsm8k, 0.7),
      stub_report("weak", Dataset::gsm8k, 0.3),
      stub_report("ablation-a", Dataset::gsm8k, 0.5),
      stub_report("original_w2s_q_a", Dataset::gsm8k, 0.45),
  });
  CHECK(table.row_labels() == std::vector<std::string>{"weak", "original_w2s_q_a", "alice",
                                                       "strong", "ablation-b", "ablation-a"});
}

TEST_CASE("comparison table columns follow the dataset order, present only") {
  const auto table = ComparisonTable::build({
      stub_report("weak", Dataset::synthetic, 0.3),
      stub_report("weak", Dataset::gsm8k, 0.2),
  });
  CHECK(table.column_datasets() == std::vector<Dataset>{Dataset::gsm8k, Dataset::synthetic});
}

TEST_CASE("duplicate (variant, dataset) cells are rejected") {
  CHECK_THROWS_WITH_AS(ComparisonTable::build({
                           stub_report("alice", Dataset::gsm8k, 0.7),
                           stub_report("alice", Dataset::gsm8k, 0.8),
                       }),
                       doctest::Contains("duplicate comparison cell"), UsageError);
  CHECK_THROWS_AS(ComparisonTable::build({}), UsageError);
}

TEST_CASE("render_text shows accuracies and dashes for missing cells") {
  const auto table = ComparisonTable::build({
      stub_report("weak", Dataset::gsm8k, 0.25),
      stub_report("alice", Dataset::synthetic, 0.75),
  });
  const std::string text = table.render_text();
  CHECK(text.find("variant") != std::string::npos);
  CHECK(text.find("weak") != std::string::npos);
  CHECK(text.find("0.2500") != std::string::npos);
  CHECK(text.find("0.7500") != std::string::npos);
  // Each row has one filled and one missing column.
  CHECK(text.find("-") != std::string::npos);
}

TEST_CASE("comparison table round-trips through json") {
  const auto table = ComparisonTable::build({
      stub_report("weak", Dataset::gsm8k, 0.25),
      stub_report("alice", Dataset::synthetic, 0.75),
  });
  const auto restored = ComparisonTable::from_json(table.to_json());
  CHECK(restored.reports() == table.reports());
  CHECK(restored.render_text() == table.render_text());
}
