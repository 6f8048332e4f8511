#include "sgrel/losses.hpp"

#include <algorithm>
#include <cmath>

namespace sgrel {

namespace {
constexpr double kProbClamp = 1e-12;
}

double cross_entropy(const PredicateDistribution& d, int target) {
    return -std::log(std::max(d.probs.at(static_cast<std::size_t>(target)), kProbClamp));
}

double hinge_margin(double min_pos, double max_neg, double alpha) {
    return std::max(0.0, alpha - (min_pos - max_neg));
}

namespace {

// index into `slots` of the extreme affinity; ties toward the lower partner id
int select_extreme(const std::vector<int>& slots, const std::vector<int>& partner_ids,
                   std::span<const double> affinities, bool want_min) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(slots.size()); ++i) {
        const double a = affinities[static_cast<std::size_t>(slots[static_cast<std::size_t>(i)])];
        const double b = affinities[static_cast<std::size_t>(slots[static_cast<std::size_t>(best)])];
        const bool better = want_min ? a < b : a > b;
        if (better || (a == b && partner_ids[static_cast<std::size_t>(i)] <
                                     partner_ids[static_cast<std::size_t>(best)]))
            best = i;
    }
    return best;
}

struct SelectedTerm {
    int pos_slot;
    int neg_slot;
    double hinge;
    double weight;  // averaging weight, filled after anchor counting
};

}  // namespace

MarginLossResult margin_loss_over_groups(std::span<const ContrastGroup> groups,
                                         std::span<const double> affinities, double alpha) {
    MarginLossResult r;
    // anchor spans per side; groups arrive ordered by (side, anchor)
    struct AnchorSpan {
        AnchorRole role;
        int anchor_id;
        int first_group;
        int n_groups;
    };
    std::vector<AnchorSpan> anchors;
    for (int gi = 0; gi < static_cast<int>(groups.size()); ++gi) {
        const auto& g = groups[static_cast<std::size_t>(gi)];
        if (!anchors.empty() && anchors.back().role == g.role &&
            anchors.back().anchor_id == g.anchor_id) {
            anchors.back().n_groups++;
        } else {
            anchors.push_back({g.role, g.anchor_id, gi, 1});
        }
    }
    int side_count[2] = {0, 0};
    for (const auto& a : anchors) side_count[a.role == AnchorRole::object ? 1 : 0]++;
    r.anchor_terms = static_cast<int>(anchors.size());

    for (const auto& a : anchors) {
        const double outer = 1.0 / side_count[a.role == AnchorRole::object ? 1 : 0];
        const double inner = 1.0 / a.n_groups;
        for (int gi = a.first_group; gi < a.first_group + a.n_groups; ++gi) {
            const auto& g = groups[static_cast<std::size_t>(gi)];
            const int pi = select_extreme(g.pos_slots, g.pos_partner_ids, affinities, true);
            const int ni = select_extreme(g.neg_slots, g.neg_partner_ids, affinities, false);
            const int pos_slot = g.pos_slots[static_cast<std::size_t>(pi)];
            const int neg_slot = g.neg_slots[static_cast<std::size_t>(ni)];
            const double h = hinge_margin(affinities[static_cast<std::size_t>(pos_slot)],
                                          affinities[static_cast<std::size_t>(neg_slot)], alpha);
            const double w = outer * inner;
            r.value += w * h;
            if (h > 0.0) {
                r.active_hinges++;
                r.grads.push_back({pos_slot, -w});
                r.grads.push_back({neg_slot, +w});
            }
        }
    }
    return r;
}

MarginLossResult class_agnostic_loss(std::span<const ContrastGroup> groups,
                                     std::span<const double> affinities, const LossConfig& cfg) {
    return margin_loss_over_groups(groups, affinities, cfg.alpha1);
}

MarginLossResult entity_class_aware_loss(std::span<const ContrastGroup> groups,
                                         std::span<const double> affinities, const LossConfig& cfg) {
    return margin_loss_over_groups(groups, affinities, cfg.alpha2);
}

MarginLossResult predicate_class_aware_loss(std::span<const ContrastGroup> groups,
                                            std::span<const double> affinities,
                                            const LossConfig& cfg) {
    return margin_loss_over_groups(groups, affinities, cfg.alpha3);
}

namespace {

// Rebuilds the frozen-selection margin terms for one component, mirroring the
// weights used by margin_loss_over_groups.
void append_plan_terms(std::span<const ContrastGroup> groups, std::span<const double> affinities,
                       double alpha, double lambda, LossPlan& plan) {
    if (lambda == 0.0) return;
    struct AnchorSpan {
        AnchorRole role;
        int anchor_id;
        int first_group;
        int n_groups;
    };
    std::vector<AnchorSpan> anchors;
    for (int gi = 0; gi < static_cast<int>(groups.size()); ++gi) {
        const auto& g = groups[static_cast<std::size_t>(gi)];
        if (!anchors.empty() && anchors.back().role == g.role &&
            anchors.back().anchor_id == g.anchor_id) {
            anchors.back().n_groups++;
        } else {
            anchors.push_back({g.role, g.anchor_id, gi, 1});
        }
    }
    int side_count[2] = {0, 0};
    for (const auto& a : anchors) side_count[a.role == AnchorRole::object ? 1 : 0]++;
    for (const auto& a : anchors) {
        const double w = lambda / (side_count[a.role == AnchorRole::object ? 1 : 0] * a.n_groups);
        for (int gi = a.first_group; gi < a.first_group + a.n_groups; ++gi) {
            const auto& g = groups[static_cast<std::size_t>(gi)];
            const int pi = select_extreme(g.pos_slots, g.pos_partner_ids, affinities, true);
            const int ni = select_extreme(g.neg_slots, g.neg_partner_ids, affinities, false);
            plan.terms.push_back({w, g.pos_slots[static_cast<std::size_t>(pi)],
                                  g.neg_slots[static_cast<std::size_t>(ni)], alpha});
        }
    }
}

}  // namespace

LossBreakdown total_loss(const SampledBatch& batch, std::span<const FusionOutput> outputs,
                         const LossConfig& cfg, int null_index, LossPlan* plan) {
    cfg.validate();
    LossBreakdown out;
    const std::size_t n_slots = outputs.size();
    const std::size_t n_pred = n_slots ? outputs[0].probs.size() : 0;
    out.dlogits.assign(n_slots, std::vector<double>(n_pred, 0.0));

    std::vector<double> affinities(n_slots);
    for (std::size_t i = 0; i < n_slots; ++i) affinities[i] = outputs[i].affinity;

    // cross entropy over the sampled pairs
    const std::size_t n_ce = batch.l0_slots.size();
    if (n_ce > 0) {
        const double w = 1.0 / static_cast<double>(n_ce);
        for (std::size_t i = 0; i < n_ce; ++i) {
            const int slot = batch.l0_slots[i];
            const int target = batch.l0_targets[i];
            const auto& p = outputs[static_cast<std::size_t>(slot)].probs;
            const double pt = p[static_cast<std::size_t>(target)];
            out.l0 += -std::log(std::max(pt, kProbClamp)) * w;
            if (pt > kProbClamp) {
                auto& d = out.dlogits[static_cast<std::size_t>(slot)];
                for (std::size_t k = 0; k < n_pred; ++k) d[k] += w * p[k];
                d[static_cast<std::size_t>(target)] -= w;
            }
        }
    }

    const MarginLossResult m1 = margin_loss_over_groups(batch.l1_groups, affinities, cfg.alpha1);
    const MarginLossResult m2 = margin_loss_over_groups(batch.l2_groups, affinities, cfg.alpha2);
    const MarginLossResult m3 = margin_loss_over_groups(batch.l3_groups, affinities, cfg.alpha3);
    out.l1 = m1.value;
    out.l2 = m2.value;
    out.l3 = m3.value;
    out.active_hinges = m1.active_hinges + m2.active_hinges + m3.active_hinges;
    out.total = out.l0 + cfg.lambda1 * out.l1 + cfg.lambda2 * out.l2 + cfg.lambda3 * out.l3;

    // chain the affinity gradients through d(affinity)/d(logit_k)
    auto apply = [&](const MarginLossResult& m, double lambda) {
        if (lambda == 0.0) return;
        for (const auto& g : m.grads) {
            const auto& p = outputs[static_cast<std::size_t>(g.slot)].probs;
            const double p_null = p[static_cast<std::size_t>(null_index)];
            auto& d = out.dlogits[static_cast<std::size_t>(g.slot)];
            const double coeff = lambda * g.d_affinity;
            for (std::size_t k = 0; k < n_pred; ++k) d[k] += coeff * p_null * p[k];
            d[static_cast<std::size_t>(null_index)] -= coeff * p_null;
        }
    };
    apply(m1, cfg.lambda1);
    apply(m2, cfg.lambda2);
    apply(m3, cfg.lambda3);

    if (plan) {
        plan->terms.clear();
        append_plan_terms(batch.l1_groups, affinities, cfg.alpha1, cfg.lambda1, *plan);
        append_plan_terms(batch.l2_groups, affinities, cfg.alpha2, cfg.lambda2, *plan);
        append_plan_terms(batch.l3_groups, affinities, cfg.alpha3, cfg.lambda3, *plan);
        plan->ce_slots = batch.l0_slots;
        plan->ce_targets = batch.l0_targets;
        plan->ce_weight = n_ce ? 1.0 / static_cast<double>(n_ce) : 0.0;
    }
    return out;
}

double evaluate_plan(const LossPlan& plan, std::span<const FusionOutput> outputs, int null_index,
                     std::vector<unsigned char>* structure_bits) {
    double value = 0.0;
    for (std::size_t i = 0; i < plan.ce_slots.size(); ++i) {
        const auto& p = outputs[static_cast<std::size_t>(plan.ce_slots[i])].probs;
        const double pt = p[static_cast<std::size_t>(plan.ce_targets[i])];
        value += -std::log(std::max(pt, kProbClamp)) * plan.ce_weight;
        if (structure_bits) structure_bits->push_back(pt > kProbClamp ? 1 : 0);
    }
    for (const auto& t : plan.terms) {
        const double phi_p = affinity_from_probs(
            outputs[static_cast<std::size_t>(t.pos_slot)].probs, null_index);
        const double phi_n = affinity_from_probs(
            outputs[static_cast<std::size_t>(t.neg_slot)].probs, null_index);
        const double h = hinge_margin(phi_p, phi_n, t.alpha);
        value += t.weight * h;
        if (structure_bits) structure_bits->push_back(h > 0.0 ? 1 : 0);
    }
    return value;
}

}  // namespace sgrel
