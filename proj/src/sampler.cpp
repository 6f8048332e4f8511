#include "sgrel/sampler.hpp"

#include <algorithm>
#include <set>

#include "sgrel/rng.hpp"

namespace sgrel {

int SampledBatch::ensure_slot(int subject_id, int object_id) {
    auto [it, inserted] = slot_index_.try_emplace({subject_id, object_id},
                                                  static_cast<int>(pairs.size()));
    if (inserted) pairs.emplace_back(subject_id, object_id);
    return it->second;
}

namespace {

// At most k unrelated partners of the anchor, ascending by id. Takes the full
// set when k covers it, otherwise samples without replacement; dense cases use
// a scan, sparse ones rejection draws so per-anchor work stays O(k).
std::vector<int> sample_anchor_negatives(const PairLabels& labels, int anchor_id, AnchorRole role,
                                         int k, Rng& rng) {
    const auto& ids = labels.entity_ids();
    const int n_others = static_cast<int>(ids.size()) - 1;
    const int n_related = static_cast<int>(labels.related_partners(anchor_id, role).size());
    const int n_unrelated = n_others - n_related;
    if (n_unrelated <= 0) return {};

    auto is_negative = [&](int id) {
        if (id == anchor_id) return false;
        const auto [s, o] = anchor_pair(anchor_id, id, role);
        return !labels.related(s, o);
    };

    if (k >= n_unrelated || 2 * k >= n_unrelated) {
        std::vector<int> all;
        all.reserve(static_cast<std::size_t>(n_unrelated));
        for (int id : ids)
            if (is_negative(id)) all.push_back(id);
        if (static_cast<int>(all.size()) <= k) return all;
        auto pick = rng.sample_without_replacement(static_cast<int>(all.size()), k);
        std::sort(pick.begin(), pick.end());
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i : pick) out.push_back(all[static_cast<std::size_t>(i)]);
        return out;
    }

    std::set<int> picked;
    while (static_cast<int>(picked.size()) < k) {
        const int id = ids[static_cast<std::size_t>(rng.bounded(ids.size()))];
        if (!is_negative(id)) continue;
        picked.insert(id);
    }
    return {picked.begin(), picked.end()};
}

std::vector<int> sample_anchor_subset(const std::vector<int>& anchors, int quota, Rng& rng) {
    if (static_cast<int>(anchors.size()) <= quota) return anchors;
    auto pick = rng.sample_without_replacement(static_cast<int>(anchors.size()), quota);
    std::sort(pick.begin(), pick.end());
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(quota));
    for (int i : pick) out.push_back(anchors[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

SampledBatch sample_batch(const SceneGraph& scene, const PairLabels& labels,
                          const SamplerConfig& cfg, const ArgmaxFn& model_argmax,
                          int null_predicate) {
    cfg.validate();
    if (labels.n_positive_pairs() == 0)
        throw NoPositivesError("sample_batch: scene has no annotated pairs");

    Rng rng(cfg.rng_seed);
    SampledBatch b;

    // cross-entropy pairs: positive quota first, unrelated pairs fill the rest
    const auto triples = labels.positive_triples();
    std::vector<int> chosen_triples;
    if (static_cast<int>(triples.size()) > cfg.n_pos_l0) {
        chosen_triples = rng.sample_without_replacement(static_cast<int>(triples.size()),
                                                        cfg.n_pos_l0);
        std::sort(chosen_triples.begin(), chosen_triples.end());
    } else {
        chosen_triples.resize(triples.size());
        for (std::size_t i = 0; i < triples.size(); ++i) chosen_triples[i] = static_cast<int>(i);
    }
    for (int idx : chosen_triples) {
        const auto& [s, o, pred] = triples[static_cast<std::size_t>(idx)];
        b.l0_slots.push_back(b.ensure_slot(s, o));
        b.l0_targets.push_back(pred);
    }

    const auto& ids = labels.entity_ids();
    const int n = static_cast<int>(ids.size());
    const long long total_pairs = static_cast<long long>(n) * (n - 1);
    const long long n_neg_avail = total_pairs - labels.n_related_pairs();
    long long neg_quota =
        std::min<long long>(cfg.n_pairs_l0 - static_cast<int>(chosen_triples.size()), n_neg_avail);
    if (neg_quota < 0) neg_quota = 0;

    std::vector<std::pair<int, int>> neg_pairs;
    if (neg_quota > 0) {
        if (2 * neg_quota >= n_neg_avail) {
            std::vector<std::pair<int, int>> all;
            all.reserve(static_cast<std::size_t>(n_neg_avail));
            for (int s : ids)
                for (int o : ids)
                    if (s != o && !labels.related(s, o)) all.emplace_back(s, o);
            if (static_cast<long long>(all.size()) <= neg_quota) {
                neg_pairs = std::move(all);
            } else {
                auto pick = rng.sample_without_replacement(static_cast<int>(all.size()),
                                                           static_cast<int>(neg_quota));
                std::sort(pick.begin(), pick.end());
                for (int i : pick) neg_pairs.push_back(all[static_cast<std::size_t>(i)]);
            }
        } else {
            std::set<std::pair<int, int>> picked;
            while (static_cast<long long>(picked.size()) < neg_quota) {
                const int s = ids[static_cast<std::size_t>(rng.bounded(ids.size()))];
                const int o = ids[static_cast<std::size_t>(rng.bounded(ids.size()))];
                if (s == o || labels.related(s, o)) continue;
                picked.insert({s, o});
            }
            neg_pairs.assign(picked.begin(), picked.end());
        }
    }
    for (const auto& [s, o] : neg_pairs) {
        b.l0_slots.push_back(b.ensure_slot(s, o));
        b.l0_targets.push_back(null_predicate);
    }

    // margin losses: anchors and negatives drawn independently per loss
    const AnchorRole sides[2] = {AnchorRole::subject, AnchorRole::object};

    for (AnchorRole role : sides) {  // class agnostic
        for (int anchor : sample_anchor_subset(labels.anchors(role), cfg.n_pos_anchors, rng)) {
            auto negs = sample_anchor_negatives(labels, anchor, role, cfg.k_neg, rng);
            if (negs.empty()) continue;
            ContrastGroup g;
            g.anchor_id = anchor;
            g.role = role;
            g.grouping = Grouping::none;
            for (int id : labels.related_partners(anchor, role)) {
                const auto [s, o] = anchor_pair(anchor, id, role);
                g.pos_slots.push_back(b.ensure_slot(s, o));
                g.pos_partner_ids.push_back(id);
            }
            for (int id : negs) {
                const auto [s, o] = anchor_pair(anchor, id, role);
                g.neg_slots.push_back(b.ensure_slot(s, o));
                g.neg_partner_ids.push_back(id);
            }
            b.l1_groups.push_back(std::move(g));
        }
    }

    for (AnchorRole role : sides) {  // entity class aware
        for (int anchor : sample_anchor_subset(labels.anchors(role), cfg.n_pos_anchors, rng)) {
            auto negs = sample_anchor_negatives(labels, anchor, role, cfg.k_neg, rng);
            const auto& pos = labels.related_partners(anchor, role);
            std::set<int> classes;
            for (int id : pos) classes.insert(scene.entity(id).entity_class);
            for (int c : classes) {
                ContrastGroup g;
                g.anchor_id = anchor;
                g.role = role;
                g.grouping = Grouping::entity_class;
                g.group_key = c;
                for (int id : negs) {
                    if (scene.entity(id).entity_class != c) continue;
                    const auto [s, o] = anchor_pair(anchor, id, role);
                    g.neg_slots.push_back(b.ensure_slot(s, o));
                    g.neg_partner_ids.push_back(id);
                }
                if (g.neg_slots.empty()) continue;
                for (int id : pos) {
                    if (scene.entity(id).entity_class != c) continue;
                    const auto [s, o] = anchor_pair(anchor, id, role);
                    g.pos_slots.push_back(b.ensure_slot(s, o));
                    g.pos_partner_ids.push_back(id);
                }
                b.l2_groups.push_back(std::move(g));
            }
        }
    }

    for (AnchorRole role : sides) {  // predicate class aware
        for (int anchor : sample_anchor_subset(labels.anchors(role), cfg.n_pos_anchors, rng)) {
            auto negs = sample_anchor_negatives(labels, anchor, role, cfg.k_neg, rng);
            const auto& pos = labels.related_partners(anchor, role);
            std::set<int> preds;
            for (int id : pos) {
                const auto [s, o] = anchor_pair(anchor, id, role);
                for (int p : labels.predicates(s, o)) preds.insert(p);
            }
            std::vector<int> neg_argmax(negs.size());
            for (std::size_t i = 0; i < negs.size(); ++i) {
                const auto [s, o] = anchor_pair(anchor, negs[i], role);
                neg_argmax[i] = model_argmax(s, o);
            }
            for (int e : preds) {
                ContrastGroup g;
                g.anchor_id = anchor;
                g.role = role;
                g.grouping = Grouping::predicate_class;
                g.group_key = e;
                for (std::size_t i = 0; i < negs.size(); ++i) {
                    if (neg_argmax[i] != e) continue;
                    const auto [s, o] = anchor_pair(anchor, negs[i], role);
                    g.neg_slots.push_back(b.ensure_slot(s, o));
                    g.neg_partner_ids.push_back(negs[i]);
                }
                if (g.neg_slots.empty()) continue;
                for (int id : pos) {
                    const auto [s, o] = anchor_pair(anchor, id, role);
                    if (!std::binary_search(labels.predicates(s, o).begin(),
                                            labels.predicates(s, o).end(), e))
                        continue;
                    g.pos_slots.push_back(b.ensure_slot(s, o));
                    g.pos_partner_ids.push_back(id);
                }
                b.l3_groups.push_back(std::move(g));
            }
        }
    }

    return b;
}

}  // namespace sgrel
