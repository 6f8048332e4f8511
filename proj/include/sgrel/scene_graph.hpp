#pragma once

#include <map>
#include <string>
#include <vector>

#include "sgrel/geometry.hpp"

namespace sgrel {

// A detected or annotated object instance inside one image.
struct EntityInstance {
    int id = 0;
    Box box;
    int entity_class = 0;
    double det_confidence = 1.0;
    std::vector<double> appearance;  // empty when the scene carries no appearance vectors
};

// One annotated <subject, predicate, object> relationship.
struct RelTriple {
    int subject_id = 0;
    int object_id = 0;
    int predicate = 0;

    bool operator==(const RelTriple&) const = default;
};

// Predicate label space. Includes the special no-relationship class, which
// sits at null_index (by convention the last slot).
struct PredicateVocabulary {
    std::vector<std::string> names;
    int null_index = 0;

    int size() const { return static_cast<int>(names.size()); }

    static PredicateVocabulary with_null_last(std::vector<std::string> real_names,
                                              const std::string& null_name = "no_rel");

    // n real predicate classes named pred_0..pred_{n-1} plus the null class.
    static PredicateVocabulary numbered(int n_real_predicates);

    void validate() const;  // throws std::invalid_argument

    bool operator==(const PredicateVocabulary&) const = default;
};

struct SceneGraph {
    ImageSize image_size;
    std::vector<EntityInstance> entities;
    std::vector<RelTriple> positive_pairs;

    const EntityInstance* find_entity(int id) const;
    const EntityInstance& entity(int id) const;  // throws if missing
    bool has_appearance() const;

    // Structural invariants: unique entity ids, pairs reference existing
    // entities, subject != object, no duplicate triple, confidences in [0,1].
    void validate() const;
    // Additionally checks predicate indices against the vocabulary (real
    // classes only; the null class may not appear in annotations).
    void validate(const PredicateVocabulary& vocab) const;
};

// Greedy same-class matching of detections to ground-truth entities by
// descending IoU; each side used at most once. Ties break toward the lower
// detection id, then lower ground-truth id. Unmatched detections are omitted.
std::map<int, int> match_entities(const std::vector<EntityInstance>& detections,
                                  const std::vector<EntityInstance>& ground_truth,
                                  double iou_thresh);

}  // namespace sgrel
