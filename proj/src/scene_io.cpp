#include "sgrel/scene_io.hpp"

#include <fstream>
#include <stdexcept>

namespace sgrel {

using nlohmann::json;

json scene_to_json(const SceneGraph& scene) {
    json j;
    j["image_size"] = {{"w", scene.image_size.w}, {"h", scene.image_size.h}};
    json ents = json::array();
    for (const auto& e : scene.entities) {
        json je;
        je["id"] = e.id;
        je["box"] = {e.box.x, e.box.y, e.box.w, e.box.h};
        je["class"] = e.entity_class;
        je["conf"] = e.det_confidence;
        if (!e.appearance.empty()) je["appearance"] = e.appearance;
        ents.push_back(std::move(je));
    }
    j["entities"] = std::move(ents);
    json pairs = json::array();
    for (const auto& p : scene.positive_pairs)
        pairs.push_back({p.subject_id, p.object_id, p.predicate});
    j["pairs"] = std::move(pairs);
    return j;
}

SceneGraph scene_from_json(const json& j) {
    SceneGraph s;
    s.image_size = ImageSize(j.at("image_size").at("w").get<double>(),
                             j.at("image_size").at("h").get<double>());
    for (const auto& je : j.at("entities")) {
        EntityInstance e;
        e.id = je.at("id").get<int>();
        const auto& b = je.at("box");
        e.box = Box(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                    b.at(3).get<double>());
        e.entity_class = je.at("class").get<int>();
        e.det_confidence = je.at("conf").get<double>();
        if (je.contains("appearance")) e.appearance = je.at("appearance").get<std::vector<double>>();
        s.entities.push_back(std::move(e));
    }
    for (const auto& jp : j.at("pairs")) {
        RelTriple t;
        t.subject_id = jp.at(0).get<int>();
        t.object_id = jp.at(1).get<int>();
        t.predicate = jp.at(2).get<int>();
        s.positive_pairs.push_back(t);
    }
    s.validate();
    return s;
}

void write_scenes_jsonl(const std::string& path, const std::vector<SceneGraph>& scenes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& s : scenes) out << scene_to_json(s).dump() << "\n";
}

std::vector<SceneGraph> read_scenes_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<SceneGraph> scenes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        scenes.push_back(scene_from_json(json::parse(line)));
    }
    return scenes;
}

}  // namespace sgrel
