#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"

namespace w2s {

// Canonical serialization used for everything the store digests: compact
// dumps with sorted keys, so hashes are platform- and run-independent.
std::string canonical_dump(const nlohmann::json& j);
// One canonical dump per line, trailing newline included.
std::string to_jsonl(const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> parse_jsonl(const std::string& content);

// Append-only, content-addressed store for one run. Every pipeline step
// lands as a set of artifact files plus a state record carrying their
// combined digest; a resumed run replays the records to decide what to skip
// and verifies digests before trusting any artifact.
//
// Layout under the root:
//   manifest.json — config snapshot (informational, not digested)
//   state.json    — ordered list of completed step records
//   <step files>  — artifacts at the relative paths complete_step was given
class RunStore {
 public:
  struct StepRecord {
    std::string step;
    std::string digest;
    std::vector<std::string> files;  // relative paths, recorded order
    std::optional<ModelRef> model;   // set for fine-tune steps
  };

  // Creates the root (if needed) and writes the manifest. Opening an
  // existing store with a different manifest is refused.
  RunStore(std::filesystem::path root, const nlohmann::json& manifest);

  // Opens an existing store, reading back its stored manifest.
  static RunStore open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const nlohmann::json& manifest() const { return manifest_; }

  bool has_step(const std::string& step) const;
  const StepRecord& record(const std::string& step) const;  // throws UsageError when absent
  const std::vector<StepRecord>& records() const { return state_; }

  // Recomputes the step's digest from its files on disk.
  // Throws CorruptionError naming the step on any mismatch or missing file.
  void verify_step(const std::string& step) const;

  // Writes every (relative path, content) pair atomically, records the step.
  // Throws UsageError when the step was already completed (one writer per
  // step) or a path is absolute.
  const StepRecord& complete_step(const std::string& step,
                                  const std::vector<std::pair<std::string, std::string>>& files,
                                  std::optional<ModelRef> model = std::nullopt);

  std::string read_artifact(const std::string& relative_path) const;

  // The record whose fine-tuned model has this id, if any.
  const StepRecord* find_model(const std::string& model_id) const;

 private:
  void load_state();
  void save_state() const;

  std::filesystem::path root_;
  nlohmann::json manifest_;
  std::vector<StepRecord> state_;
  std::map<std::string, std::size_t> index_;  // step → position in state_
};

}  // namespace w2s
