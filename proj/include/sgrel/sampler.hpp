#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "sgrel/contrast.hpp"
#include "sgrel/scene_graph.hpp"

namespace sgrel {

struct NoPositivesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplerConfig {
    int n_pairs_l0 = 512;    // total cross-entropy pairs per scene
    int n_pos_l0 = 128;      // positive quota within n_pairs_l0
    int n_pos_anchors = 128; // anchor quota per side for each margin loss
    int k_neg = 64;          // negative candidates per anchor, drawn before min/max
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (n_pairs_l0 <= 0 || n_pos_l0 <= 0 || n_pos_anchors <= 0 || k_neg <= 0)
            throw std::invalid_argument("SamplerConfig: counts must be positive");
        if (n_pos_l0 > n_pairs_l0)
            throw std::invalid_argument("SamplerConfig: n_pos_l0 > n_pairs_l0");
    }
};

// One margin term: an anchor with its sampled positive/negative partners,
// resolved to batch pair slots. For the class-agnostic loss each anchor has a
// single group; the class/predicate aware losses carry one group per class
// (resp. predicate) of the anchor's positives.
struct ContrastGroup {
    int anchor_id = -1;
    AnchorRole role = AnchorRole::subject;
    Grouping grouping = Grouping::none;
    int group_key = -1;
    std::vector<int> pos_slots;
    std::vector<int> neg_slots;
    std::vector<int> pos_partner_ids;  // aligned with pos_slots, for tie-breaking
    std::vector<int> neg_partner_ids;
};

struct SampledBatch {
    std::vector<std::pair<int, int>> pairs;  // unique (subject, object); forward slots
    std::vector<int> l0_slots;
    std::vector<int> l0_targets;             // predicate index, null class for negatives
    std::vector<ContrastGroup> l1_groups;
    std::vector<ContrastGroup> l2_groups;
    std::vector<ContrastGroup> l3_groups;

    int slot_of(int subject_id, int object_id) const {
        auto it = slot_index_.find({subject_id, object_id});
        return it == slot_index_.end() ? -1 : it->second;
    }
    int ensure_slot(int subject_id, int object_id);

private:
    std::map<std::pair<int, int>, int> slot_index_;
};

// Builds the per-image training batch: cross-entropy pairs (positive quota
// plus sampled unrelated pairs, targeted at null_predicate) and the per-loss
// contrast groups with at most k_neg negatives per anchor. Deterministic
// given cfg.rng_seed; throws NoPositivesError when the scene has no annotated
// pairs.
SampledBatch sample_batch(const SceneGraph& scene, const PairLabels& labels,
                          const SamplerConfig& cfg, const ArgmaxFn& model_argmax,
                          int null_predicate);

}  // namespace sgrel
