#include "w2s/audit.hpp"

#include <nlohmann/json.hpp>

#include "w2s/errors.hpp"

namespace w2s {

namespace {

// Artifacts that must stay free of sealed gold answers. Everything a model
// was shown (prompts), everything a model is trained on (corpora), and the
// full supervision trace.
bool scan_worthy(const std::string& path) {
  const bool corpus = path.find("corpus.jsonl") != std::string::npos;
  const bool prompts = path.find("refine_prompts.jsonl") != std::string::npos;
  const bool supervision = path.find("supervision.jsonl") != std::string::npos;
  return corpus || prompts || supervision;
}

}  // namespace

std::vector<TaintHit> taint_scan(const RunStore& store) {
  if (!store.has_step("split")) {
    throw UsageError("taint scan needs a completed split step");
  }
  store.verify_step("split");
  const nlohmann::json sealed =
      nlohmann::json::parse(store.read_artifact("split/sealed_gold.json"));

  std::vector<TaintHit> hits;
  for (const auto& record : store.records()) {
    for (const auto& path : record.files) {
      if (!scan_worthy(path)) continue;
      const std::string content = store.read_artifact(path);
      for (const auto& [qid, gold] : sealed.items()) {
        const std::string needle = gold.get<std::string>();
        if (content.find(needle) != std::string::npos) {
          hits.push_back({path, qid, needle});
        }
      }
    }
  }
  return hits;
}

}  // namespace w2s
