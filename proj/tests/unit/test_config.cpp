#include <doctest/doctest.h>

#include <filesystem>
#include <string>

#include "w2s/config.hpp"
#include "w2s/errors.hpp"
#include "w2s/util.hpp"

using namespace w2s;

namespace {

// A minimal valid two-stage cascade manifest.
nlohmann::json base_config() {
  return nlohmann::json::parse(R"({
    "run_id": "test-run",
    "seed": 7,
    "models": [
      {"id": "weak", "role": "teacher"},
      {"id": "mid", "role": "student"},
      {"id": "strong", "role": "student"},
      {"id": "summ", "role": "summarizer"}
    ],
    "summarizer": "summ",
    "dataset": {"name": "synthetic", "train_file": "/tmp/train.jsonl"},
    "sampling": {"n_samples": 10, "temperature": 1.0, "max_length": 256},
    "clustering": {"threshold_T": 0.85},
    "teacher_prep": [{"base": "weak", "format": "q_cot_a", "candidates_per_question": 4}],
    "stages": [
      {"id": "stage1", "teachers": ["weak+teacher"], "student": "mid", "variant": "alice"},
      {"id": "stage2", "teachers": ["@stage1"], "student": "strong", "variant": "alice"}
    ],
    "templates_dir": "/tmp/templates"
  })");
}

RunConfig parse(const nlohmann::json& j) { return RunConfig::from_json(j, "/base"); }

}  // namespace

TEST_CASE("a well-formed manifest parses with defaults applied") {
  const RunConfig config = parse(base_config());
  CHECK(config.run_id == "test-run");
  CHECK(config.seed == 7);
  CHECK(config.backend.kind == "mock");
  CHECK(config.sampling.n_samples == 10);
  CHECK(config.clustering.threshold_T == 0.85);
  CHECK(config.split_ratio == 0.5);
  CHECK(config.failure_cap == 0.05);
  CHECK(config.workers == 1);
  REQUIRE(config.stages.size() == 2);
  CHECK(config.stages[0].uncertainty);  // alice defaults to uncertainty on
  CHECK(config.stage_number("stage2") == 2);
  CHECK(config.prep_for("weak").candidates_per_question == 4);
  CHECK(config.model("mid").role == Role::Student);
}

TEST_CASE("relative paths resolve against the config directory") {
  auto j = base_config();
  j["dataset"]["train_file"] = "data/train.jsonl";
  const RunConfig config = RunConfig::from_json(j, "/base/dir");
  CHECK(config.dataset.train_file == "/base/dir/data/train.jsonl");
  CHECK(config.dataset.eval_file.empty());
}

TEST_CASE("manifest round-trips through json exactly") {
  const RunConfig config = parse(base_config());
  const nlohmann::json dumped = config.to_json();
  const RunConfig reparsed = RunConfig::from_json(dumped, {});
  // The round-trip must be a fixed point: this is what makes resume's
  // manifest-equality check work.
  CHECK(reparsed.to_json() == dumped);
}

TEST_CASE("teacher ref helpers") {
  CHECK(stage_ref("@stage1") == "stage1");
  CHECK_FALSE(stage_ref("weak+teacher").has_value());
  CHECK_FALSE(stage_ref("@").has_value());
  CHECK(prepared_teacher_base("weak+teacher") == "weak");
  CHECK_FALSE(prepared_teacher_base("@stage1").has_value());
  CHECK_FALSE(prepared_teacher_base("+teacher").has_value());
}

TEST_CASE("validation rejects incoherent manifests") {
  const auto expect_usage_error = [](nlohmann::json j, const std::string& needle) {
    CAPTURE(needle);
    CHECK_THROWS_WITH_AS(parse(j), doctest::Contains(needle.c_str()), UsageError);
  };

  auto j = base_config();
  j["run_id"] = "bad run id";
  expect_usage_error(j, "run_id");

  j = base_config();
  j["models"][0]["id"] = "weak+teacher";  // reserved shape
  expect_usage_error(j, "reserved");

  j = base_config();
  j["models"][1]["id"] = "weak";
  expect_usage_error(j, "duplicate model id");

  j = base_config();
  j["summarizer"] = "ghost";
  expect_usage_error(j, "summarizer");

  j = base_config();
  j["teacher_prep"][0]["base"] = "ghost";
  expect_usage_error(j, "teacher_prep");

  j = base_config();
  j["stages"][0]["teachers"] = {"ghost+teacher"};
  expect_usage_error(j, "no teacher_prep entry");

  j = base_config();
  j["stages"][1]["teachers"] = {"@stage9"};
  expect_usage_error(j, "unknown stage");

  j = base_config();
  j["stages"][0]["teachers"] = {"@stage2"};  // forward reference
  expect_usage_error(j, "earlier stage");

  j = base_config();
  j["stages"][0]["teachers"] = {"weak"};  // bare id is not a teacher ref
  expect_usage_error(j, "must be");

  j = base_config();
  j["stages"][0]["variant"] = "multi_teacher";  // one teacher only
  expect_usage_error(j, "at least two");

  j = base_config();
  j["stages"][0]["variant"] = "no_uncertainty";  // keeps uncertainty default? no —
  j["stages"][0]["uncertainty"] = true;          // forcing it on must fail
  expect_usage_error(j, "must not enable uncertainty");

  j = base_config();
  j["stages"][0]["uncertainty"] = false;  // alice without uncertainty
  expect_usage_error(j, "requires uncertainty");

  j = base_config();
  j.erase("summarizer");
  expect_usage_error(j, "summarizer");  // alice stage needs one

  j = base_config();
  j["stages"][0]["id"] = "stage2";
  expect_usage_error(j, "duplicate stage id");

  j = base_config();
  j["clustering"]["threshold_T"] = 1.5;
  expect_usage_error(j, "threshold_T");

  j = base_config();
  j["split_ratio"] = 0.0;
  expect_usage_error(j, "split_ratio");

  j = base_config();
  j["workers"] = 0;
  expect_usage_error(j, "workers");

  j = base_config();
  j["backend"] = {{"kind", "carrier-pigeon"}};
  expect_usage_error(j, "backend.kind");
}

TEST_CASE("variant defaults choose uncertainty appropriately") {
  auto j = base_config();
  j["stages"][0]["variant"] = "no_uncertainty";
  RunConfig config = parse(j);
  CHECK_FALSE(config.stages[0].uncertainty);

  j = base_config();
  j["stages"][0]["variant"] = "original_w2s";
  config = parse(j);
  CHECK_FALSE(config.stages[0].uncertainty);
}

TEST_CASE("load_file resolves against the file's directory and validates") {
  const auto dir = std::filesystem::temp_directory_path() / "w2s_config_test";
  std::filesystem::remove_all(dir);
  auto j = base_config();
  j["dataset"]["train_file"] = "train.jsonl";
  write_file_atomic(dir / "run.json", j.dump());
  const RunConfig config = RunConfig::load_file(dir / "run.json");
  CHECK(config.dataset.train_file == dir / "train.jsonl");

  write_file_atomic(dir / "bad.json", "{nope");
  CHECK_THROWS_AS(RunConfig::load_file(dir / "bad.json"), UsageError);
  CHECK_THROWS_AS(RunConfig::load_file(dir / "missing.json"), UsageError);
  std::filesystem::remove_all(dir);
}
