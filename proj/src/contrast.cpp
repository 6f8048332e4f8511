#include "sgrel/contrast.hpp"

#include <algorithm>
#include <set>

namespace sgrel {

const std::vector<int> PairLabels::kEmpty{};

PairLabels PairLabels::build(const SceneGraph& scene, double iou_thresh) {
    PairLabels out;
    for (const auto& e : scene.entities) out.entity_ids_.push_back(e.id);
    std::sort(out.entity_ids_.begin(), out.entity_ids_.end());

    std::set<int> annotated;
    for (const auto& p : scene.positive_pairs) {
        annotated.insert(p.subject_id);
        annotated.insert(p.object_id);
        out.labels_[{p.subject_id, p.object_id}].push_back(p.predicate);
    }
    for (auto& [key, preds] : out.labels_) std::sort(preds.begin(), preds.end());

    // Unannotated entities overlapping an annotated same-class entity stand
    // for detector outputs of it and inherit its relationships.
    std::vector<EntityInstance> dets, gts;
    for (const auto& e : scene.entities)
        (annotated.count(e.id) ? gts : dets).push_back(e);
    const auto matched = match_entities(dets, gts, iou_thresh);

    auto resolve = [&](int id) {
        auto it = matched.find(id);
        return it == matched.end() ? id : it->second;
    };
    for (const auto& a : scene.entities) {
        for (const auto& b : scene.entities) {
            if (a.id == b.id) continue;
            if (out.labels_.count({a.id, b.id})) continue;
            const int ra = resolve(a.id), rb = resolve(b.id);
            if (ra == a.id && rb == b.id) continue;
            auto it = out.labels_.find({ra, rb});
            if (it != out.labels_.end()) out.labels_[{a.id, b.id}] = it->second;
        }
    }
    for (const auto& [key, preds] : out.labels_) {
        out.n_positive_ += static_cast<int>(preds.size());
        out.partners_as_subject_[key.first].push_back(key.second);
        out.partners_as_object_[key.second].push_back(key.first);
    }
    for (auto& [id, v] : out.partners_as_subject_) {
        std::sort(v.begin(), v.end());
        out.subject_anchors_.push_back(id);
    }
    for (auto& [id, v] : out.partners_as_object_) {
        std::sort(v.begin(), v.end());
        out.object_anchors_.push_back(id);
    }
    return out;
}

const std::vector<int>& PairLabels::predicates(int subject_id, int object_id) const {
    auto it = labels_.find({subject_id, object_id});
    return it == labels_.end() ? kEmpty : it->second;
}

const std::vector<int>& PairLabels::related_partners(int anchor_id, AnchorRole role) const {
    const auto& m = role == AnchorRole::subject ? partners_as_subject_ : partners_as_object_;
    auto it = m.find(anchor_id);
    return it == m.end() ? kEmpty : it->second;
}

const std::vector<int>& PairLabels::anchors(AnchorRole role) const {
    return role == AnchorRole::subject ? subject_anchors_ : object_anchors_;
}

std::vector<std::tuple<int, int, int>> PairLabels::positive_triples() const {
    std::vector<std::tuple<int, int, int>> out;
    out.reserve(static_cast<std::size_t>(n_positive_));
    for (const auto& [key, preds] : labels_)
        for (int p : preds) out.emplace_back(key.first, key.second, p);
    return out;
}

std::vector<int> PairLabels::all_partners(int anchor_id) const {
    std::vector<int> out;
    for (int id : entity_ids_)
        if (id != anchor_id) out.push_back(id);
    return out;
}

ContrastResult build_contrast_sets_agnostic(const SceneGraph& scene, const PairLabels& labels,
                                            int anchor_id, AnchorRole role) {
    (void)scene;
    ContrastResult r;
    r.sets.anchor_id = anchor_id;
    r.sets.anchor_role = role;
    r.sets.grouping = Grouping::none;
    for (int id : labels.all_partners(anchor_id)) {
        const auto [s, o] = anchor_pair(anchor_id, id, role);
        (labels.related(s, o) ? r.sets.positives : r.sets.negatives).push_back(id);
    }
    if (r.sets.positives.empty())
        r.error = ContrastError::no_positives;
    else if (r.sets.negatives.empty())
        r.error = ContrastError::empty_negatives;
    return r;
}

ContrastResult build_contrast_sets_entity_class(const SceneGraph& scene, const PairLabels& labels,
                                                int anchor_id, AnchorRole role, int entity_class) {
    ContrastResult r;
    r.sets.anchor_id = anchor_id;
    r.sets.anchor_role = role;
    r.sets.grouping = Grouping::entity_class;
    r.sets.group_key = entity_class;
    for (int id : labels.all_partners(anchor_id)) {
        if (scene.entity(id).entity_class != entity_class) continue;
        const auto [s, o] = anchor_pair(anchor_id, id, role);
        (labels.related(s, o) ? r.sets.positives : r.sets.negatives).push_back(id);
    }
    if (r.sets.positives.empty())
        r.error = ContrastError::no_positives;
    else if (r.sets.negatives.empty())
        r.error = ContrastError::empty_negatives;
    return r;
}

ContrastResult build_contrast_sets_predicate_class(const SceneGraph& scene, const PairLabels& labels,
                                                   int anchor_id, AnchorRole role, int predicate,
                                                   const ArgmaxFn& model_argmax) {
    (void)scene;
    ContrastResult r;
    r.sets.anchor_id = anchor_id;
    r.sets.anchor_role = role;
    r.sets.grouping = Grouping::predicate_class;
    r.sets.group_key = predicate;
    for (int id : labels.all_partners(anchor_id)) {
        const auto [s, o] = anchor_pair(anchor_id, id, role);
        const auto& preds = labels.predicates(s, o);
        if (!preds.empty()) {
            if (std::binary_search(preds.begin(), preds.end(), predicate))
                r.sets.positives.push_back(id);
        } else if (model_argmax(s, o) == predicate) {
            r.sets.negatives.push_back(id);
        }
    }
    if (r.sets.positives.empty())
        r.error = ContrastError::no_positives;
    else if (r.sets.negatives.empty())
        r.error = ContrastError::empty_negatives;
    return r;
}

}  // namespace sgrel
