#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sgrel/scene_graph.hpp"

namespace sgrel {

nlohmann::json scene_to_json(const SceneGraph& scene);
SceneGraph scene_from_json(const nlohmann::json& j);

// JSON Lines: one scene object per line.
void write_scenes_jsonl(const std::string& path, const std::vector<SceneGraph>& scenes);
std::vector<SceneGraph> read_scenes_jsonl(const std::string& path);

}  // namespace sgrel
