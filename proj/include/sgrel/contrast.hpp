#pragma once

#include <functional>
#include <map>
#include <vector>

#include "sgrel/scene_graph.hpp"

namespace sgrel {

// Predicted predicate index (null class included) for an ordered entity pair.
// Read-only snapshot of the model at batch-construction time.
using ArgmaxFn = std::function<int(int subject_id, int object_id)>;

enum class AnchorRole { subject, object };
enum class Grouping { none, entity_class, predicate_class };
enum class ContrastError { none, no_positives, empty_negatives };

// Ground-truth relatedness lookup for every ordered pair of a scene.
// Entities that take part in no annotation are matched (same class,
// IoU >= iou_thresh, greedy) against annotated entities and inherit their
// relationships, the detection-as-extra-sample case.
class PairLabels {
public:
    static PairLabels build(const SceneGraph& scene, double iou_thresh = 0.5);

    // Ground-truth predicates for the ordered pair; empty means unrelated.
    const std::vector<int>& predicates(int subject_id, int object_id) const;
    bool related(int subject_id, int object_id) const { return !predicates(subject_id, object_id).empty(); }

    // Partner ids related to the anchor in the given role, ascending by id.
    const std::vector<int>& related_partners(int anchor_id, AnchorRole role) const;
    // All other entity ids, ascending.
    std::vector<int> all_partners(int anchor_id) const;
    // Entity ids with at least one related partner in the given role, ascending.
    const std::vector<int>& anchors(AnchorRole role) const;
    // All (subject, object, predicate) labels, inherited ones included, sorted.
    std::vector<std::tuple<int, int, int>> positive_triples() const;

    const std::vector<int>& entity_ids() const { return entity_ids_; }
    int n_positive_pairs() const { return n_positive_; }
    int n_related_pairs() const { return static_cast<int>(labels_.size()); }

private:
    std::map<std::pair<int, int>, std::vector<int>> labels_;
    std::map<int, std::vector<int>> partners_as_subject_;  // anchor -> related objects
    std::map<int, std::vector<int>> partners_as_object_;   // anchor -> related subjects
    std::vector<int> subject_anchors_, object_anchors_;
    std::vector<int> entity_ids_;
    int n_positive_ = 0;
    static const std::vector<int> kEmpty;
};

// Positive and negative partner sets for one anchor entity under one of the
// three grouping regimes.
struct ContrastSets {
    int anchor_id = -1;
    AnchorRole anchor_role = AnchorRole::subject;
    Grouping grouping = Grouping::none;
    int group_key = -1;
    std::vector<int> positives;  // partner entity ids
    std::vector<int> negatives;
};

struct ContrastResult {
    ContrastSets sets;
    ContrastError error = ContrastError::none;
    bool ok() const { return error == ContrastError::none; }
};

// Positives: all related partners. Negatives: all unrelated partners.
ContrastResult build_contrast_sets_agnostic(const SceneGraph& scene, const PairLabels& labels,
                                            int anchor_id, AnchorRole role);

// Both sets restricted to partners of the given entity class.
ContrastResult build_contrast_sets_entity_class(const SceneGraph& scene, const PairLabels& labels,
                                                int anchor_id, AnchorRole role, int entity_class);

// Positives: partners whose ground-truth predicate with the anchor is
// `predicate`. Negatives: unrelated partners the model currently mislabels
// as `predicate` via argmax.
ContrastResult build_contrast_sets_predicate_class(const SceneGraph& scene, const PairLabels& labels,
                                                   int anchor_id, AnchorRole role, int predicate,
                                                   const ArgmaxFn& model_argmax);

// The ordered pair an anchor/partner combination denotes under a role.
inline std::pair<int, int> anchor_pair(int anchor_id, int partner_id, AnchorRole role) {
    return role == AnchorRole::subject ? std::make_pair(anchor_id, partner_id)
                                       : std::make_pair(partner_id, anchor_id);
}

}  // namespace sgrel
