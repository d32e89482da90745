#pragma once

#include <nlohmann/json.hpp>

#include "w2s/backend.hpp"

namespace w2s {

// ModelRef serialization used by run manifests and the run store.

inline nlohmann::json to_json(const ModelRef& model) {
  nlohmann::json lineage = nlohmann::json::array();
  for (const auto& entry : model.lineage) {
    lineage.push_back({{"tag", entry.tag}, {"parent_id", entry.parent_id}});
  }
  return {{"id", model.id}, {"role", to_string(model.role)}, {"lineage", lineage}};
}

inline ModelRef model_ref_from_json(const nlohmann::json& j) {
  ModelRef model;
  model.id = j.at("id").get<std::string>();
  model.role = role_from_string(j.at("role").get<std::string>());
  for (const auto& entry : j.at("lineage")) {
    model.lineage.push_back(
        {entry.at("tag").get<std::string>(), entry.at("parent_id").get<std::string>()});
  }
  return model;
}

}  // namespace w2s
