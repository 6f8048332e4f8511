#include "sgrel/scene_graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

namespace sgrel {

PredicateVocabulary PredicateVocabulary::with_null_last(std::vector<std::string> real_names,
                                                        const std::string& null_name) {
    PredicateVocabulary v;
    v.names = std::move(real_names);
    v.names.push_back(null_name);
    v.null_index = static_cast<int>(v.names.size()) - 1;
    v.validate();
    return v;
}

PredicateVocabulary PredicateVocabulary::numbered(int n_real_predicates) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(n_real_predicates));
    for (int i = 0; i < n_real_predicates; ++i) names.push_back("pred_" + std::to_string(i));
    return with_null_last(std::move(names));
}

void PredicateVocabulary::validate() const {
    if (names.empty()) throw std::invalid_argument("PredicateVocabulary: empty");
    if (null_index < 0 || null_index >= size())
        throw std::invalid_argument("PredicateVocabulary: null_index out of range");
    std::set<std::string> uniq(names.begin(), names.end());
    if (uniq.size() != names.size())
        throw std::invalid_argument("PredicateVocabulary: duplicate names");
}

const EntityInstance* SceneGraph::find_entity(int id) const {
    for (const auto& e : entities)
        if (e.id == id) return &e;
    return nullptr;
}

const EntityInstance& SceneGraph::entity(int id) const {
    const EntityInstance* e = find_entity(id);
    if (!e) throw std::out_of_range("SceneGraph: unknown entity id " + std::to_string(id));
    return *e;
}

bool SceneGraph::has_appearance() const {
    if (entities.empty()) return false;
    for (const auto& e : entities)
        if (e.appearance.empty()) return false;
    return true;
}

void SceneGraph::validate() const {
    std::set<int> ids;
    std::size_t app_dim = entities.empty() ? 0 : entities.front().appearance.size();
    for (const auto& e : entities) {
        if (!ids.insert(e.id).second)
            throw std::invalid_argument("SceneGraph: duplicate entity id");
        if (e.entity_class < 0) throw std::invalid_argument("SceneGraph: negative entity class");
        if (!(e.det_confidence >= 0.0 && e.det_confidence <= 1.0))
            throw std::invalid_argument("SceneGraph: det_confidence outside [0,1]");
        if (e.appearance.size() != app_dim)
            throw std::invalid_argument("SceneGraph: inconsistent appearance dimensions");
    }
    std::set<std::tuple<int, int, int>> triples;
    for (const auto& p : positive_pairs) {
        if (p.subject_id == p.object_id)
            throw std::invalid_argument("SceneGraph: pair with subject == object");
        if (!ids.count(p.subject_id) || !ids.count(p.object_id))
            throw std::invalid_argument("SceneGraph: pair references unknown entity");
        if (!triples.insert({p.subject_id, p.object_id, p.predicate}).second)
            throw std::invalid_argument("SceneGraph: duplicate (s,o,pred) triple");
    }
}

void SceneGraph::validate(const PredicateVocabulary& vocab) const {
    validate();
    for (const auto& p : positive_pairs) {
        if (p.predicate < 0 || p.predicate >= vocab.size())
            throw std::invalid_argument("SceneGraph: predicate index out of range");
        if (p.predicate == vocab.null_index)
            throw std::invalid_argument("SceneGraph: annotated pair with null predicate");
    }
}

std::map<int, int> match_entities(const std::vector<EntityInstance>& detections,
                                  const std::vector<EntityInstance>& ground_truth,
                                  double iou_thresh) {
    struct Cand {
        double overlap;
        int det_id;
        int gt_id;
    };
    std::vector<Cand> cands;
    for (const auto& d : detections) {
        for (const auto& g : ground_truth) {
            if (d.entity_class != g.entity_class) continue;
            const double o = iou(d.box, g.box);
            if (o >= iou_thresh) cands.push_back({o, d.id, g.id});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.det_id != b.det_id) return a.det_id < b.det_id;
        return a.gt_id < b.gt_id;
    });
    std::map<int, int> out;
    std::set<int> used_gt;
    for (const auto& c : cands) {
        if (out.count(c.det_id) || used_gt.count(c.gt_id)) continue;
        out[c.det_id] = c.gt_id;
        used_gt.insert(c.gt_id);
    }
    return out;
}

}  // namespace sgrel
