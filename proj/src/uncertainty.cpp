#include "w2s/uncertainty.hpp"

#include <algorithm>
#include <random>

#include "w2s/errors.hpp"
#include "w2s/util.hpp"

namespace w2s {

nlohmann::json to_json(const TeacherDemo& demo) {
  return {{"qid", demo.qid},
          {"final_response", demo.final_response},
          {"uncertainty", demo.uncertainty},
          {"cluster_sizes", demo.cluster_sizes}};
}

TeacherDemo teacher_demo_from_json(const nlohmann::json& j) {
  TeacherDemo demo;
  demo.qid = j.at("qid").get<std::string>();
  demo.final_response = j.at("final_response").get<std::string>();
  demo.uncertainty = j.at("uncertainty").get<std::string>();
  demo.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
  return demo;
}

namespace {

// Rethrows backend exceptions with the question id prepended, preserving
// the exception type where it matters for callers.
template <typename F>
auto with_qid(const std::string& qid, F&& op) -> decltype(op()) {
  try {
    return op();
  } catch (const TransportError& e) {
    throw TransportError("qid " + qid + ": " + e.what(), e.attempts());
  } catch (const ResolutionError& e) {
    throw ResolutionError("qid " + qid + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError("qid " + qid + ": " + e.what());
  } catch (const JobError& e) {
    throw JobError("qid " + qid + ": " + e.what());
  }
}

}  // namespace

std::vector<SampledResponse> sample_responses(Backend& backend, const ModelRef& teacher,
                                              const std::string& qid, const std::string& question,
                                              const SamplingParams& params) {
  const std::vector<std::string> completions =
      with_qid(qid, [&] { return backend.generate(teacher, question, params); });

  std::vector<SampledResponse> samples;
  samples.reserve(completions.size());
  for (std::size_t i = 0; i < completions.size(); ++i) {
    if (completions[i].empty()) {
      throw PipelineError("qid " + qid + ": backend returned an empty completion at index " +
                          std::to_string(i));
    }
    samples.push_back({qid, static_cast<int>(i), completions[i], std::nullopt});
  }
  return samples;
}

std::vector<SampledResponse> attach_embeddings(Backend& backend,
                                               std::vector<SampledResponse> samples) {
  if (samples.empty()) throw UsageError("attach_embeddings called with no samples");
  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const auto& s : samples) texts.push_back(s.text);

  const std::string& qid = samples.front().qid;
  std::vector<EmbeddingVector> vectors =
      with_qid(qid, [&] { return backend.embed(texts); });
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].embedding = std::move(vectors[i]);
  return samples;
}

std::vector<ResponseCluster> cluster_responses(const std::vector<SampledResponse>& samples,
                                               const ClusteringConfig& config) {
  if (samples.empty()) throw UsageError("cluster_responses called with no samples");
  if (!(config.threshold_T > 0.0) || config.threshold_T > 1.0) {
    throw UsageError("threshold_T must be in (0, 1]");
  }
  for (const auto& s : samples) {
    if (!s.embedding) {
      throw UsageError("sample " + std::to_string(s.index) + " carries no embedding");
    }
  }

  const std::size_t n = samples.size();
  std::vector<bool> grouped(n, false);
  std::vector<ResponseCluster> clusters;
  std::mt19937_64 rng(config.rng_seed);

  for (std::size_t ref = 0; ref < n; ++ref) {
    if (grouped[ref]) continue;
    ResponseCluster cluster;
    cluster.reference_index = static_cast<int>(ref);
    cluster.member_indices.push_back(static_cast<int>(ref));
    grouped[ref] = true;

    for (std::size_t i = ref + 1; i < n; ++i) {
      if (grouped[i]) continue;
      const double sim = cosine_similarity(*samples[ref].embedding, *samples[i].embedding);
      const bool joins = config.group_below_threshold ? sim <= config.threshold_T
                                                      : sim >= config.threshold_T;
      if (joins) {
        cluster.member_indices.push_back(static_cast<int>(i));
        grouped[i] = true;
      }
    }

    const std::size_t pick = bounded_draw(rng, cluster.member_indices.size());
    cluster.representative_index = cluster.member_indices[pick];
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

FinalPick pick_final_response(const std::vector<ResponseCluster>& clusters) {
  if (clusters.empty()) throw UsageError("pick_final_response called with no clusters");

  FinalPick pick;
  std::size_t best = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    pick.cluster_sizes.push_back(static_cast<int>(clusters[i].member_indices.size()));
    const bool larger =
        clusters[i].member_indices.size() > clusters[best].member_indices.size();
    const bool tie_wins =
        clusters[i].member_indices.size() == clusters[best].member_indices.size() &&
        clusters[i].reference_index < clusters[best].reference_index;
    if (i != 0 && (larger || tie_wins)) best = i;
  }
  pick.cluster_position = static_cast<int>(best);
  pick.representative_index = clusters[best].representative_index;
  return pick;
}

FilledPrompt build_summary_prompt(const TemplateSet& templates, const std::string& question,
                                  const std::vector<std::string>& representatives) {
  if (representatives.empty()) {
    throw UsageError("build_summary_prompt called with no representatives");
  }
  std::string numbered;
  for (std::size_t i = 0; i < representatives.size(); ++i) {
    if (i != 0) numbered += "\n";
    numbered += std::to_string(i + 1) + ". " + representatives[i];
  }
  return fill_template(templates.uncertainty_summary, {question, numbered});
}

std::string summarize_uncertainty(Backend& backend, const ModelRef& summarizer,
                                  const std::string& question,
                                  const std::vector<std::string>& representatives,
                                  const TemplateSet& templates, std::uint64_t seed) {
  const FilledPrompt prompt = build_summary_prompt(templates, question, representatives);
  const auto params = SamplingParams::greedy(/*max_length=*/512, seed);
  const std::vector<std::string> out = backend.generate(summarizer, prompt.text, params);
  if (trim(out.front()) == kUncertaintySentinel) return std::string(kUncertaintySentinel);
  return out.front();
}

namespace {

// Everything elicit computes for one question before any sink callback runs.
struct QuestionOutcome {
  std::vector<SampledResponse> samples;
  std::vector<ResponseCluster> clusters;
  std::optional<TeacherDemo> demo;
  std::string error;
};

}  // namespace

ElicitResult elicit(Backend& backend, const ModelRef& teacher, const ModelRef& summarizer,
                    const std::vector<QuestionOnly>& questions, const TemplateSet& templates,
                    const ElicitOptions& options, ElicitSink* sink) {
  if (questions.empty()) throw UsageError("elicit called with no questions");
  options.sampling.validate();
  if (options.failure_cap < 0.0 || options.failure_cap > 1.0) {
    throw UsageError("failure_cap must be in [0, 1]");
  }

  const auto outcomes = parallel_map(
      questions.size(), options.workers, [&](std::size_t qi) -> QuestionOutcome {
        const QuestionOnly& q = questions[qi];
        QuestionOutcome outcome;
        try {
          // Decorrelate per-question randomness while keeping the run seed
          // the single source of determinism.
          SamplingParams params = options.sampling;
          params.seed = options.sampling.seed ^ fnv1a64(q.qid);
          ClusteringConfig clustering = options.clustering;
          clustering.rng_seed = options.clustering.rng_seed ^ fnv1a64(q.qid);

          outcome.samples = attach_embeddings(
              backend, sample_responses(backend, teacher, q.qid, q.question, params));
          outcome.clusters = cluster_responses(outcome.samples, clustering);
          const FinalPick pick = pick_final_response(outcome.clusters);

          std::string uncertainty{kUncertaintySentinel};
          if (options.use_summarizer) {
            std::vector<std::string> representatives;
            for (const auto& cluster : outcome.clusters) {
              representatives.push_back(
                  outcome.samples[static_cast<std::size_t>(cluster.representative_index)].text);
            }
            uncertainty = summarize_uncertainty(backend, summarizer, q.question, representatives,
                                                templates, params.seed);
          }

          outcome.demo = TeacherDemo{
              q.qid,
              outcome.samples[static_cast<std::size_t>(pick.representative_index)].text,
              uncertainty, pick.cluster_sizes};
        } catch (const std::exception& e) {
          outcome.error = e.what();
        }
        return outcome;
      });

  ElicitResult result;
  for (std::size_t qi = 0; qi < questions.size(); ++qi) {
    const QuestionOutcome& outcome = outcomes[qi];
    if (!outcome.demo) {
      result.failures.emplace_back(questions[qi].qid, outcome.error);
      if (sink) sink->on_failure(questions[qi].qid, outcome.error);
      continue;
    }
    if (sink) {
      sink->on_samples(questions[qi].qid, outcome.samples);
      sink->on_clusters(questions[qi].qid, outcome.clusters);
      sink->on_demo(*outcome.demo);
    }
    result.demos.push_back(*outcome.demo);
  }

  const double failure_fraction =
      static_cast<double>(result.failures.size()) / static_cast<double>(questions.size());
  if (failure_fraction > options.failure_cap) {
    std::string detail;
    for (const auto& [qid, error] : result.failures) {
      detail += "\n  " + qid + ": " + error;
    }
    throw PipelineError("elicit failed on " + std::to_string(result.failures.size()) + " of " +
                        std::to_string(questions.size()) + " questions (cap " +
                        std::to_string(options.failure_cap) + "):" + detail);
  }
  return result;
}

}  // namespace w2s
