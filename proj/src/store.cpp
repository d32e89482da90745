#include "w2s/store.hpp"

#include <sstream>

#include "w2s/errors.hpp"
#include "w2s/model_json.hpp"
#include "w2s/sha256.hpp"
#include "w2s/util.hpp"

namespace w2s {

std::string canonical_dump(const nlohmann::json& j) {
  // nlohmann::json's default object representation already sorts keys;
  // compact dump keeps the bytes free of formatting choices.
  return j.dump();
}

std::string to_jsonl(const std::vector<nlohmann::json>& records) {
  std::string out;
  for (const auto& record : records) {
    out += canonical_dump(record);
    out += '\n';
  }
  return out;
}

std::vector<nlohmann::json> parse_jsonl(const std::string& content) {
  std::vector<nlohmann::json> records;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

namespace {

// Digest of one step: hash each file's path and content, then hash the
// concatenation. Paths are relative, so the digest is location-independent.
std::string step_digest(const std::string& step,
                        const std::vector<std::pair<std::string, std::string>>& files) {
  std::string combined = step;
  for (const auto& [path, content] : files) {
    combined += '\n';
    combined += sha256_hex(path + std::string(1, '\0') + content);
  }
  return sha256_hex(combined);
}

nlohmann::json record_to_json(const RunStore::StepRecord& record) {
  nlohmann::json j{{"step", record.step}, {"digest", record.digest}, {"files", record.files}};
  if (record.model) j["model"] = to_json(*record.model);
  return j;
}

RunStore::StepRecord record_from_json(const nlohmann::json& j) {
  RunStore::StepRecord record;
  record.step = j.at("step").get<std::string>();
  record.digest = j.at("digest").get<std::string>();
  record.files = j.at("files").get<std::vector<std::string>>();
  if (j.contains("model")) record.model = model_ref_from_json(j.at("model"));
  return record;
}

}  // namespace

RunStore::RunStore(std::filesystem::path root, const nlohmann::json& manifest)
    : root_(std::move(root)), manifest_(manifest) {
  std::filesystem::create_directories(root_);
  const auto manifest_path = root_ / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const nlohmann::json existing = nlohmann::json::parse(read_file(manifest_path));
    if (existing != manifest_) {
      throw UsageError("run directory " + root_.string() +
                       " already holds a different manifest; refusing to mix runs");
    }
  } else {
    write_file_atomic(manifest_path, canonical_dump(manifest_) + "\n");
  }
  load_state();
}

RunStore RunStore::open(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw UsageError("no manifest.json under " + root.string() + "; not a run directory");
  }
  nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));
  return RunStore(root, manifest);
}

void RunStore::load_state() {
  state_.clear();
  index_.clear();
  const auto state_path = root_ / "state.json";
  if (!std::filesystem::exists(state_path)) return;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(state_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptionError("state.json is unreadable: " + std::string(e.what()));
  }
  for (const auto& r : j) {
    StepRecord record = record_from_json(r);
    index_[record.step] = state_.size();
    state_.push_back(std::move(record));
  }
}

void RunStore::save_state() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& record : state_) j.push_back(record_to_json(record));
  write_file_atomic(root_ / "state.json", canonical_dump(j) + "\n");
}

bool RunStore::has_step(const std::string& step) const { return index_.count(step) != 0; }

const RunStore::StepRecord& RunStore::record(const std::string& step) const {
  const auto it = index_.find(step);
  if (it == index_.end()) throw UsageError("step not in store: " + step);
  return state_[it->second];
}

void RunStore::verify_step(const std::string& step) const {
  const StepRecord& rec = record(step);
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& path : rec.files) {
    const auto full = root_ / path;
    if (!std::filesystem::exists(full)) {
      throw CorruptionError("step " + step + ": artifact missing: " + path);
    }
    files.emplace_back(path, read_file(full));
  }
  const std::string digest = step_digest(step, files);
  if (digest != rec.digest) {
    throw CorruptionError("step " + step + ": artifact digest mismatch (expected " + rec.digest +
                          ", recomputed " + digest + ")");
  }
}

const RunStore::StepRecord& RunStore::complete_step(
    const std::string& step, const std::vector<std::pair<std::string, std::string>>& files,
    std::optional<ModelRef> model) {
  if (has_step(step)) throw UsageError("step already completed: " + step);
  for (const auto& [path, content] : files) {
    if (std::filesystem::path(path).is_absolute()) {
      throw UsageError("artifact paths must be relative, got: " + path);
    }
    write_file_atomic(root_ / path, content);
  }

  StepRecord record;
  record.step = step;
  record.digest = step_digest(step, files);
  for (const auto& [path, content] : files) record.files.push_back(path);
  record.model = std::move(model);

  index_[step] = state_.size();
  state_.push_back(std::move(record));
  save_state();
  return state_.back();
}

std::string RunStore::read_artifact(const std::string& relative_path) const {
  return read_file(root_ / relative_path);
}

const RunStore::StepRecord* RunStore::find_model(const std::string& model_id) const {
  for (const auto& record : state_) {
    if (record.model && record.model->id == model_id) return &record;
  }
  return nullptr;
}

}  // namespace w2s
