#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgrel/rng.hpp"
#include "sgrel/scene_graph.hpp"

namespace sgrel {

enum class ConfusionMode { entity_instance, proximal_pairs, mixed };

std::string to_string(ConfusionMode m);
ConfusionMode confusion_mode_from_string(const std::string& s);

// Scenario generator settings. Appearance vectors reserve their last five
// channels for relationship cues: four pairing-pattern channels and one
// partner-cue channel; cue_strength scales both, so 0 leaves appearance
// uninformative about the pairing and 1 makes it plainly separable.
struct GenConfig {
    int n_scenes = 500;
    int n_entity_classes = 6;
    int n_predicate_classes = 4;  // real classes; the null class is added on top
    ConfusionMode confusion_mode = ConfusionMode::mixed;
    int n_duplicate_instances = 3;  // duplicates per confusion scene; pair count per proximal scene
    double proximity_jitter = 20.0;  // pixels
    double cue_strength = 0.3;
    int d_app = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_scenes <= 0 || n_entity_classes <= 0 || n_predicate_classes <= 0)
            throw std::invalid_argument("GenConfig: counts must be positive");
        if (n_entity_classes < 2)
            throw std::invalid_argument("GenConfig: need at least 2 entity classes");
        if (n_duplicate_instances < 2)
            throw std::invalid_argument("GenConfig: need at least 2 duplicate instances");
        if (!(cue_strength >= 0.0 && cue_strength <= 1.0))
            throw std::invalid_argument("GenConfig: cue_strength must be in [0,1]");
        if (!(proximity_jitter >= 0.0))
            throw std::invalid_argument("GenConfig: proximity_jitter must be >= 0");
        if (d_app < 6) throw std::invalid_argument("GenConfig: d_app must be >= 6");
    }
};

enum class SceneKind { entity_confusion, proximal };

struct LabeledDataset {
    std::vector<SceneGraph> train, val, test;
    std::vector<SceneKind> train_kinds, val_kinds, test_kinds;
    PredicateVocabulary vocab;
    GenConfig config;
};

// One subject, n_duplicate_instances same-class candidates crowded around it,
// exactly one annotated pair. Duplicates share one appearance vector; the
// true partner additionally carries cue_strength on the cue channel.
SceneGraph gen_entity_confusion_scene(const GenConfig& cfg, Rng& rng);

// k subject/object pairs interleaved on a circle, matched by a uniformly
// random permutation under one shared predicate. Matched pairs share a hot
// pairing-pattern channel of magnitude cue_strength.
SceneGraph gen_proximal_ambiguity_scene(const GenConfig& cfg, Rng& rng);

// Seeded dataset with a 70/15/15 split; mixed mode alternates scene kinds.
LabeledDataset gen_dataset(const GenConfig& cfg);

// Unstructured random scene: random boxes, classes, appearance and edges.
// Used by the gradient-check harness and tests.
struct RandomSceneOpts {
    int min_entities = 4;
    int max_entities = 6;
    int n_entity_classes = 4;
    int n_predicate_classes = 3;  // real classes
    int d_app = 4;
    double edge_prob = 0.25;
};
SceneGraph random_scene(Rng& rng, const RandomSceneOpts& opts);

}  // namespace sgrel
