#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"
#include "w2s/corpus.hpp"
#include "w2s/templates.hpp"

namespace w2s {

// Stored when either every sampled response agrees or the uncertainty step
// is disabled; substituted literally into refinement prompts.
inline constexpr std::string_view kUncertaintySentinel = "N/A";

struct SampledResponse {
  std::string qid;
  int index = 0;  // sample position within the question's batch
  std::string text;
  std::optional<EmbeddingVector> embedding;  // attached after embed()

  bool operator==(const SampledResponse&) const = default;
};

// A cluster over one question's samples. Indices refer to positions in the
// sample vector the cluster was built from.
struct ResponseCluster {
  int reference_index = 0;           // the iteration's seed sample
  std::vector<int> member_indices;   // ascending, includes reference_index
  int representative_index = 0;      // ∈ member_indices, drawn at random

  bool operator==(const ResponseCluster&) const = default;
};

struct ClusteringConfig {
  double threshold_T = 0.85;
  std::uint64_t rng_seed = 0;
  // Comparison mode that joins at similarity ≤ T instead of ≥ T. Off by
  // default; exists only to contrast the two grouping directions.
  bool group_below_threshold = false;
};

// What the teacher hands the student for one question: its consensus answer
// and a natural-language account of where its samples disagreed.
struct TeacherDemo {
  std::string qid;
  std::string final_response;
  std::string uncertainty;  // free text, or kUncertaintySentinel
  std::vector<int> cluster_sizes;

  bool operator==(const TeacherDemo&) const = default;
};

nlohmann::json to_json(const TeacherDemo& demo);
TeacherDemo teacher_demo_from_json(const nlohmann::json& j);

// Draws params.n_samples completions for the bare question and wraps them as
// indexed SampledResponses (embeddings not yet attached).
// Backend errors are rethrown with the qid attached.
std::vector<SampledResponse> sample_responses(Backend& backend, const ModelRef& teacher,
                                              const std::string& qid, const std::string& question,
                                              const SamplingParams& params);

// Embeds every sample text in one backend call and attaches the vectors.
std::vector<SampledResponse> attach_embeddings(Backend& backend,
                                               std::vector<SampledResponse> samples);

// Greedy reference-based grouping: the lowest-index ungrouped sample seeds a
// cluster; every ungrouped sample whose cosine similarity to that reference
// clears the threshold joins; repeat until all samples are grouped. Clusters
// come back ordered by reference index, each with a uniformly drawn
// representative (seeded, so reruns agree).
// Throws UsageError on an empty list, missing embeddings, a dimension
// mismatch, or a threshold outside (0, 1].
std::vector<ResponseCluster> cluster_responses(const std::vector<SampledResponse>& samples,
                                               const ClusteringConfig& config);

struct FinalPick {
  int representative_index = 0;    // sample index of the chosen response
  int cluster_position = 0;        // position of the winning cluster
  std::vector<int> cluster_sizes;  // in cluster order
};

// The largest cluster's representative; ties break to the lowest reference
// index. Throws UsageError on an empty cluster list.
FinalPick pick_final_response(const std::vector<ResponseCluster>& clusters);

// The summarizer prompt: question and "1. ..."-numbered representatives
// substituted into the summary template.
FilledPrompt build_summary_prompt(const TemplateSet& templates, const std::string& question,
                                  const std::vector<std::string>& representatives);

// Asks the summarizer to describe the inconsistency across representatives.
// A completion that trims to "N/A" comes back as kUncertaintySentinel;
// anything else is returned verbatim.
// Throws UsageError when representatives is empty.
std::string summarize_uncertainty(Backend& backend, const ModelRef& summarizer,
                                  const std::string& question,
                                  const std::vector<std::string>& representatives,
                                  const TemplateSet& templates, std::uint64_t seed);

// Receives every intermediate artifact as elicitation progresses. Callbacks
// arrive on the caller's thread, one question at a time, in input order.
class ElicitSink {
 public:
  virtual ~ElicitSink() = default;
  virtual void on_samples(const std::string& /*qid*/, const std::vector<SampledResponse>&) {}
  virtual void on_clusters(const std::string& /*qid*/, const std::vector<ResponseCluster>&) {}
  virtual void on_demo(const TeacherDemo&) {}
  virtual void on_failure(const std::string& /*qid*/, const std::string& /*error*/) {}
};

struct ElicitOptions {
  SamplingParams sampling;        // per-question seeds derive from sampling.seed and the qid
  ClusteringConfig clustering;
  double failure_cap = 0.05;      // tolerated failure fraction before the run aborts
  int workers = 1;
  bool use_summarizer = true;     // false stores the sentinel and never calls the summarizer
};

struct ElicitResult {
  std::vector<TeacherDemo> demos;  // successful questions, input order
  std::vector<std::pair<std::string, std::string>> failures;  // (qid, error)
};

// Full per-question pipeline: sample → embed → cluster → pick → summarize.
// Individual question failures are recorded and skipped; the run throws
// PipelineError once their fraction exceeds options.failure_cap.
ElicitResult elicit(Backend& backend, const ModelRef& teacher, const ModelRef& summarizer,
                    const std::vector<QuestionOnly>& questions, const TemplateSet& templates,
                    const ElicitOptions& options, ElicitSink* sink = nullptr);

}  // namespace w2s
