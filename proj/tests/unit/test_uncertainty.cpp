#include <doctest/doctest.h>

#include <string>
#include <vector>

#include "w2s/errors.hpp"
#include "w2s/mock_backend.hpp"
#include "w2s/templates.hpp"
#include "w2s/uncertainty.hpp"

using namespace w2s;

namespace {

const TemplateSet& templates() {
  static const TemplateSet set = TemplateSet::load(W2S_TEMPLATES_DIR);
  return set;
}

MockBackend summary_backend(const std::string& reply) {
  MockScript script;
  script.entries = {{"summarizer", "", {reply}}};
  script.entries[0].key = "identify and summarize";  // substring of the template
  MockBackend backend(script);
  backend.register_model({"sum", Role::Summarizer, {}});
  backend.register_model({"teach", Role::Teacher, {}});
  return backend;
}

}  // namespace

TEST_CASE("summary prompt numbers representatives one per line") {
  const FilledPrompt prompt =
      build_summary_prompt(templates(), "What is 2+2?", {"it is 4", "it is 5", "maybe 4"});
  CHECK(prompt.text.find("What is 2+2?") != std::string::npos);
  CHECK(prompt.text.find("1. it is 4\n2. it is 5\n3. maybe 4") != std::string::npos);
  REQUIRE(prompt.spans.size() == 2);

  // Removing the substituted spans recovers the template's fixed text.
  CHECK(strip_spans(prompt) == template_fixed_text(templates().uncertainty_summary));

  CHECK_THROWS_AS(build_summary_prompt(templates(), "q", {}), UsageError);
}

TEST_CASE("summarizer output is stored verbatim") {
  auto backend = summary_backend("uncertain about step 2");
  const std::string got = summarize_uncertainty(backend, backend.resolve("sum"), "q",
                                                {"a", "b"}, templates(), 0);
  CHECK(got == "uncertain about step 2");
}

TEST_CASE("summarizer N/A trims to the sentinel") {
  auto backend = summary_backend("  N/A\n");
  const std::string got =
      summarize_uncertainty(backend, backend.resolve("sum"), "q", {"a"}, templates(), 0);
  CHECK(got == kUncertaintySentinel);
}

TEST_CASE("sample_responses indexes completions and rejects empties") {
  MockScript script;
  script.entries = {{"teacher", "the question", {"first", "second"}}};
  MockBackend backend(script);
  backend.register_model({"teach", Role::Teacher, {}});

  SamplingParams params;
  params.n_samples = 3;
  const auto samples =
      sample_responses(backend, backend.resolve("teach"), "q-1", "the question", params);
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].index == 0);
  CHECK(samples[0].text == "first");
  CHECK(samples[1].text == "second");
  CHECK(samples[2].text == "first");  // cycling
  CHECK_FALSE(samples[0].embedding.has_value());

  // Unknown model: the error carries the qid.
  CHECK_THROWS_WITH_AS(sample_responses(backend, {"ghost", Role::Teacher, {}}, "q-9",
                                        "the question", params),
                       doctest::Contains("q-9"), ResolutionError);

  MockScript empty_script;
  empty_script.entries = {{"teacher", "the question", {""}}};
  MockBackend empty_backend(empty_script);
  empty_backend.register_model({"teach", Role::Teacher, {}});
  CHECK_THROWS_AS(sample_responses(empty_backend, empty_backend.resolve("teach"), "q-1",
                                   "the question", params),
                  PipelineError);
}

TEST_CASE("attach_embeddings pairs vectors with samples in order") {
  MockBackend backend;
  backend.register_model({"teach", Role::Teacher, {}});
  std::vector<SampledResponse> samples = {{"q", 0, "alpha", std::nullopt},
                                          {"q", 1, "beta", std::nullopt}};
  const auto embedded = attach_embeddings(backend, samples);
  REQUIRE(embedded.size() == 2);
  CHECK(*embedded[0].embedding == mock_embedding("alpha", 16));
  CHECK(*embedded[1].embedding == mock_embedding("beta", 16));
  CHECK_THROWS_AS(attach_embeddings(backend, {}), UsageError);
}

namespace {

// Script where q-agree always answers identically, q-split answers [x,x,y],
// and q-dead yields empty completions (a per-question failure).
MockBackend elicit_backend() {
  MockScript script;
  script.embed_dim = 16;
  script.entries = {
      {"teacher", "question agree", {"always 4"}},
      {"teacher", "question split", {"answer 7", "answer 7", "something else entirely"}},
      {"teacher", "question dead", {""}},
      {"summarizer", "question agree", {"N/A"}},
      {"summarizer", "question split", {"answers disagree between 7 and something else"}},
  };
  MockBackend backend(script);
  backend.register_model({"teach", Role::Teacher, {}});
  backend.register_model({"sum", Role::Summarizer, {}});
  return backend;
}

std::vector<QuestionOnly> elicit_questions(bool with_dead) {
  std::vector<QuestionOnly> questions = {{"q-agree", "question agree", Dataset::synthetic},
                                         {"q-split", "question split", Dataset::synthetic}};
  if (with_dead) questions.push_back({"q-dead", "question dead", Dataset::synthetic});
  return questions;
}

ElicitOptions elicit_options(int n_samples) {
  ElicitOptions options;
  options.sampling.n_samples = n_samples;
  options.sampling.seed = 99;
  options.clustering.threshold_T = 0.85;
  options.clustering.rng_seed = 99;
  return options;
}

}  // namespace

TEST_CASE("elicit composes sampling, clustering and summarization per question") {
  auto backend = elicit_backend();
  const auto result = elicit(backend, backend.resolve("teach"), backend.resolve("sum"),
                             elicit_questions(false), templates(), elicit_options(6));

  REQUIRE(result.demos.size() == 2);
  REQUIRE(result.failures.empty());

  const TeacherDemo& agree = result.demos[0];
  CHECK(agree.qid == "q-agree");
  CHECK(agree.final_response == "always 4");
  CHECK(agree.uncertainty == kUncertaintySentinel);  // scripted "N/A" per the template
  CHECK(agree.cluster_sizes == std::vector<int>{6});

  const TeacherDemo& split = result.demos[1];
  CHECK(split.qid == "q-split");
  // [7,7,else,7,7,else]: the 7-cluster has 4 members and wins.
  CHECK(split.cluster_sizes == std::vector<int>{4, 2});
  CHECK(split.final_response == "answer 7");
  CHECK(split.uncertainty == "answers disagree between 7 and something else");

  // cluster_sizes always sum to n_samples.
  for (const auto& demo : result.demos) {
    int total = 0;
    for (const int size : demo.cluster_sizes) total += size;
    CHECK(total == 6);
  }
}

TEST_CASE("elicit is deterministic across reruns and worker counts") {
  auto backend1 = elicit_backend();
  auto backend2 = elicit_backend();
  auto options = elicit_options(6);
  const auto first = elicit(backend1, backend1.resolve("teach"), backend1.resolve("sum"),
                            elicit_questions(false), templates(), options);
  options.workers = 4;
  const auto second = elicit(backend2, backend2.resolve("teach"), backend2.resolve("sum"),
                             elicit_questions(false), templates(), options);
  CHECK(first.demos == second.demos);
}

TEST_CASE("per-question failures are tolerated up to the cap") {
  auto backend = elicit_backend();
  auto options = elicit_options(6);
  options.failure_cap = 0.5;  // 1 of 3 fails → under the cap

  const auto result = elicit(backend, backend.resolve("teach"), backend.resolve("sum"),
                             elicit_questions(true), templates(), options);
  REQUIRE(result.demos.size() == 2);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].first == "q-dead");
  CHECK(result.failures[0].second.find("empty completion") != std::string::npos);
}

TEST_CASE("exceeding the failure cap aborts the elicitation") {
  auto backend = elicit_backend();
  auto options = elicit_options(6);
  options.failure_cap = 0.05;  // 1 of 3 > 5%
  CHECK_THROWS_WITH_AS(elicit(backend, backend.resolve("teach"), backend.resolve("sum"),
                              elicit_questions(true), templates(), options),
                       doctest::Contains("q-dead"), PipelineError);
}

TEST_CASE("disabled summarizer stores the sentinel and never generates") {
  auto backend = elicit_backend();
  auto options = elicit_options(6);
  options.use_summarizer = false;

  const auto result = elicit(backend, backend.resolve("teach"), backend.resolve("sum"),
                             elicit_questions(false), templates(), options);
  for (const auto& demo : result.demos) CHECK(demo.uncertainty == kUncertaintySentinel);
  for (const auto& call : backend.generate_log()) CHECK(call.model_id != "sum");
}

TEST_CASE("elicit reports artifacts through the sink in input order") {
  struct RecordingSink : ElicitSink {
    std::vector<std::string> events;
    void on_samples(const std::string& qid, const std::vector<SampledResponse>&) override {
      events.push_back("samples:" + qid);
    }
    void on_clusters(const std::string& qid, const std::vector<ResponseCluster>&) override {
      events.push_back("clusters:" + qid);
    }
    void on_demo(const TeacherDemo& demo) override { events.push_back("demo:" + demo.qid); }
    void on_failure(const std::string& qid, const std::string&) override {
      events.push_back("failure:" + qid);
    }
  };

  auto backend = elicit_backend();
  auto options = elicit_options(6);
  options.failure_cap = 0.5;
  RecordingSink sink;
  elicit(backend, backend.resolve("teach"), backend.resolve("sum"), elicit_questions(true),
         templates(), options, &sink);
  CHECK(sink.events == std::vector<std::string>{
                           "samples:q-agree", "clusters:q-agree", "demo:q-agree",
                           "samples:q-split", "clusters:q-split", "demo:q-split",
                           "failure:q-dead"});
}

TEST_CASE("teacher demo json round-trips") {
  const TeacherDemo demo{"q-1", "final", "some uncertainty", {3, 2, 1}};
  CHECK(teacher_demo_from_json(to_json(demo)) == demo);
}
