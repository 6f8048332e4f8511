#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "sgrel/affinity.hpp"
#include "sgrel/model.hpp"
#include "sgrel/sampler.hpp"

namespace sgrel {

struct LossConfig {
    double alpha1 = 0.2;
    double alpha2 = 0.2;
    double alpha3 = 0.2;
    double lambda1 = 1.0;
    double lambda2 = 0.5;
    double lambda3 = 0.1;

    void validate() const {
        for (double a : {alpha1, alpha2, alpha3})
            if (!(a > 0.0 && a <= 1.0))
                throw std::invalid_argument("LossConfig: margins must be in (0,1]");
        for (double l : {lambda1, lambda2, lambda3})
            if (!(l >= 0.0)) throw std::invalid_argument("LossConfig: weights must be >= 0");
    }
};

// -log of the target probability, clamped below at 1e-12.
double cross_entropy(const PredicateDistribution& d, int target);

// max(0, alpha - (min_pos - max_neg))
double hinge_margin(double min_pos, double max_neg, double alpha);

struct AffinityGrad {
    int slot;
    double d_affinity;
};

struct MarginLossResult {
    double value = 0.0;
    std::vector<AffinityGrad> grads;  // d(value)/d(affinity[slot]), summed per contribution
    int active_hinges = 0;
    int anchor_terms = 0;  // anchors with at least one valid group, both sides
};

// Shared evaluation of the three margin losses: hinge per group using the
// min-affinity positive and max-affinity negative (ties toward the lower
// partner id), inner average over each anchor's groups, outer average per
// side over anchors, sides summed. Groups arrive pre-filtered: empty
// positive or negative sets were skipped by the sampler and do not count.
MarginLossResult margin_loss_over_groups(std::span<const ContrastGroup> groups,
                                         std::span<const double> affinities, double alpha);

MarginLossResult class_agnostic_loss(std::span<const ContrastGroup> groups,
                                     std::span<const double> affinities, const LossConfig& cfg);
MarginLossResult entity_class_aware_loss(std::span<const ContrastGroup> groups,
                                         std::span<const double> affinities, const LossConfig& cfg);
MarginLossResult predicate_class_aware_loss(std::span<const ContrastGroup> groups,
                                            std::span<const double> affinities,
                                            const LossConfig& cfg);

// Selection-frozen view of a batch loss: the chosen positive/negative pair of
// every margin term is pinned, which is exactly the function the analytic
// gradient differentiates. Weights fold in the averaging denominators and the
// component weight.
struct MarginTerm {
    double weight = 0.0;
    int pos_slot = -1;
    int neg_slot = -1;
    double alpha = 0.0;
};

struct LossPlan {
    std::vector<MarginTerm> terms;
    std::vector<int> ce_slots;
    std::vector<int> ce_targets;
    double ce_weight = 0.0;  // 1 / sample count
};

struct LossBreakdown {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0, total = 0.0;
    int active_hinges = 0;  // across the three margin components
    std::vector<std::vector<double>> dlogits;  // d(total)/d(logits), per batch slot
};

// Full batch objective and its gradient with respect to the per-pair
// predicate logits. Min/max selections are treated as fixed at their
// forward-pass values; the optional plan captures that frozen view.
LossBreakdown total_loss(const SampledBatch& batch, std::span<const FusionOutput> outputs,
                         const LossConfig& cfg, int null_index, LossPlan* plan = nullptr);

// Value of a frozen plan at the given forward outputs. structure_bits, when
// provided, receives one flag per non-smooth site (hinge activity, CE clamp)
// so a finite-difference harness can detect kink crossings.
double evaluate_plan(const LossPlan& plan, std::span<const FusionOutput> outputs, int null_index,
                     std::vector<unsigned char>* structure_bits = nullptr);

}  // namespace sgrel
