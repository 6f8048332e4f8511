#include <doctest.h>

#include <cmath>

#include "oracle_losses.hpp"
#include "sgrel/losses.hpp"
#include "sgrel/rng.hpp"
#include "sgrel/sampler.hpp"
#include "sgrel/synth.hpp"
#include "sgrel/trainer.hpp"

using namespace sgrel;

TEST_CASE("cross entropy worked values") {
    PredicateDistribution d;
    d.probs = {1.0, 0.0, 0.0};
    CHECK(cross_entropy(d, 0) == doctest::Approx(0.0));
    d.probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK(cross_entropy(d, 1) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    d.probs = {0.5, 0.3, 0.2};
    CHECK(cross_entropy(d, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // the clamp keeps a zero-probability target finite
    d.probs = {0.0, 1.0, 0.0};
    CHECK(cross_entropy(d, 0) == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("hinge margin worked values") {
    CHECK(hinge_margin(0.9, 0.3, 0.2) == 0.0);
    CHECK(hinge_margin(0.4, 0.35, 0.2) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(hinge_margin(0.5, 0.5, 0.2) == doctest::Approx(0.2).epsilon(1e-12));
}

namespace {

ContrastGroup make_group(int anchor, AnchorRole role, std::vector<int> pos_slots,
                         std::vector<int> neg_slots, Grouping grouping = Grouping::none,
                         int key = -1) {
    ContrastGroup g;
    g.anchor_id = anchor;
    g.role = role;
    g.grouping = grouping;
    g.group_key = key;
    g.pos_slots = pos_slots;
    g.neg_slots = neg_slots;
    g.pos_partner_ids = pos_slots;  // slot index doubles as partner id in these fixtures
    g.neg_partner_ids = neg_slots;
    return g;
}

}  // namespace

TEST_CASE("class-agnostic loss worked examples") {
    LossConfig cfg;
    SUBCASE("margin exactly met: zero loss") {
        std::vector<double> phi = {0.8, 0.1, 0.6};
        std::vector<ContrastGroup> groups = {make_group(0, AnchorRole::subject, {0}, {1, 2})};
        const auto r = class_agnostic_loss(groups, phi, cfg);
        CHECK(r.value == doctest::Approx(0.0));
        CHECK(r.active_hinges == 0);
    }
    SUBCASE("violated margin") {
        std::vector<double> phi = {0.8, 0.75};
        std::vector<ContrastGroup> groups = {make_group(0, AnchorRole::subject, {0}, {1})};
        const auto r = class_agnostic_loss(groups, phi, cfg);
        CHECK(r.value == doctest::Approx(0.15).epsilon(1e-12));
        CHECK(r.active_hinges == 1);
    }
    SUBCASE("saturated hinges across anchors stay zero") {
        std::vector<double> phi = {0.9, 0.1, 0.95, 0.2};
        std::vector<ContrastGroup> groups = {
            make_group(0, AnchorRole::subject, {0}, {1}),
            make_group(1, AnchorRole::object, {2}, {3}),
        };
        const auto r = class_agnostic_loss(groups, phi, cfg);
        CHECK(r.value == 0.0);
    }
}

TEST_CASE("entity-class loss averages over class groups per anchor") {
    LossConfig cfg;
    // anchor 0 has two class groups (cup, table) with hinges 0.15 and 0
    std::vector<double> phi = {0.9, 0.85, 0.8, 0.2};
    std::vector<ContrastGroup> groups = {
        make_group(0, AnchorRole::subject, {0}, {1}, Grouping::entity_class, 1),
        make_group(0, AnchorRole::subject, {2}, {3}, Grouping::entity_class, 2),
    };
    const auto r = entity_class_aware_loss(groups, phi, cfg);
    CHECK(r.value == doctest::Approx(0.5 * 0.15).epsilon(1e-12));
    CHECK(r.anchor_terms == 1);
}

TEST_CASE("predicate-class loss handles margins beyond alpha") {
    LossConfig cfg;
    std::vector<double> phi = {0.6, 0.7};
    std::vector<ContrastGroup> groups = {
        make_group(0, AnchorRole::subject, {0}, {1}, Grouping::predicate_class, 0)};
    const auto r = predicate_class_aware_loss(groups, phi, cfg);
    CHECK(r.value == doctest::Approx(0.3).epsilon(1e-12));
    // empty group list contributes nothing
    const auto zero = predicate_class_aware_loss({}, phi, cfg);
    CHECK(zero.value == 0.0);
}

TEST_CASE("hinge terms stay within alpha + 1") {
    Rng rng(5);
    LossConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> phi(6);
        for (auto& v : phi) v = rng.real01();
        std::vector<ContrastGroup> groups = {
            make_group(0, AnchorRole::subject, {0, 1}, {2, 3}),
            make_group(1, AnchorRole::object, {4}, {5}),
        };
        const auto r = class_agnostic_loss(groups, phi, cfg);
        CHECK(r.value >= 0.0);
        CHECK(r.value <= cfg.alpha1 + 1.0);
    }
}

namespace {

struct BatchFixture {
    SceneGraph scene;
    PairLabels labels;
    PredicateModel model;
    SampledBatch batch;
    std::vector<FusionOutput> outputs;
};

BatchFixture make_fixture(std::uint64_t seed, int k_neg = 64) {
    Rng rng(seed);
    RandomSceneOpts opts;
    opts.d_app = 4;
    SceneGraph scene = random_scene(rng, opts);
    PairLabels labels = PairLabels::build(scene);
    const auto vocab = PredicateVocabulary::numbered(opts.n_predicate_classes);
    ModelDims dims;
    dims.n_predicates = vocab.size();
    dims.n_entity_classes = opts.n_entity_classes;
    dims.d_app = opts.d_app;
    dims.hidden_spatial = 6;
    dims.hidden_visual = 6;
    auto table = FrequencyTable::build({scene}, vocab, opts.n_entity_classes, 1.0);
    PredicateModel model(ModelParams::init(dims, seed * 3 + 1), std::move(table), vocab);

    SamplerConfig scfg;
    scfg.k_neg = k_neg;
    scfg.rng_seed = seed;
    ArgmaxFn argmax = [&scene, m = &model](int s, int o) {
        return m->argmax_predicate(scene, s, o);
    };
    SampledBatch batch = sample_batch(scene, labels, scfg, argmax, vocab.null_index);
    std::vector<FusionOutput> outputs = forward_batch(model, scene, batch.pairs);
    return {std::move(scene), std::move(labels), std::move(model), std::move(batch),
            std::move(outputs)};
}

}  // namespace

TEST_CASE("total loss: weights and identity") {
    SUBCASE("zero lambdas reduce to cross entropy") {
        auto fx = make_fixture(11);
        LossConfig cfg;
        cfg.lambda1 = cfg.lambda2 = cfg.lambda3 = 0.0;
        const auto lb = total_loss(fx.batch, fx.outputs, cfg, fx.model.vocab().null_index);
        CHECK(lb.total == doctest::Approx(lb.l0).epsilon(1e-12));
    }
    SUBCASE("weighted-sum arithmetic") {
        // components are data here; check the assembly on fixed values
        LossConfig cfg;
        const double total = 1.0 + cfg.lambda1 * 0.2 + cfg.lambda2 * 0.4 + cfg.lambda3 * 0.6;
        CHECK(total == doctest::Approx(1.46).epsilon(1e-12));
    }
    SUBCASE("identity holds on random batches") {
        for (std::uint64_t seed : {21, 22, 23, 24, 25}) {
            auto fx = make_fixture(seed);
            LossConfig cfg;
            const auto lb = total_loss(fx.batch, fx.outputs, cfg, fx.model.vocab().null_index);
            CHECK(lb.total ==
                  doctest::Approx(lb.l0 + cfg.lambda1 * lb.l1 + cfg.lambda2 * lb.l2 +
                                  cfg.lambda3 * lb.l3)
                      .epsilon(1e-9));
            CHECK(lb.l0 >= 0.0);
            CHECK(lb.l1 >= 0.0);
            CHECK(lb.l2 >= 0.0);
            CHECK(lb.l3 >= 0.0);
        }
    }
}

TEST_CASE("margin gradient flows only through selected pairs") {
    // two positives and two negatives; only the argmin/argmax get gradient
    std::vector<double> phi = {0.5, 0.8, 0.45, 0.3};
    std::vector<ContrastGroup> groups = {make_group(0, AnchorRole::subject, {0, 1}, {2, 3})};
    LossConfig cfg;
    const auto r = class_agnostic_loss(groups, phi, cfg);
    CHECK(r.value == doctest::Approx(0.15).epsilon(1e-12));  // 0.2 - (0.5 - 0.45)
    REQUIRE(r.grads.size() == 2);
    CHECK(r.grads[0].slot == 0);
    CHECK(r.grads[0].d_affinity == doctest::Approx(-1.0));
    CHECK(r.grads[1].slot == 2);
    CHECK(r.grads[1].d_affinity == doctest::Approx(1.0));
}

TEST_CASE("selection ties break toward the lower partner id") {
    std::vector<double> phi = {0.5, 0.5, 0.4, 0.4};
    auto g = make_group(9, AnchorRole::subject, {1, 0}, {3, 2});
    // partner ids equal slots here; min positive tie -> id 0, max negative tie -> id 2
    std::vector<ContrastGroup> groups = {g};
    LossConfig cfg;
    const auto r = class_agnostic_loss(groups, phi, cfg);
    REQUIRE(r.grads.size() == 2);
    CHECK(r.grads[0].slot == 0);
    CHECK(r.grads[1].slot == 2);
}

TEST_CASE("inactive hinge contributes no gradient") {
    std::vector<double> phi = {0.9, 0.1};
    std::vector<ContrastGroup> groups = {make_group(0, AnchorRole::subject, {0}, {1})};
    LossConfig cfg;
    const auto r = class_agnostic_loss(groups, phi, cfg);
    CHECK(r.value == 0.0);
    CHECK(r.grads.empty());
}

TEST_CASE("affinity gradient chain rule against finite differences") {
    auto fx = make_fixture(31);
    LossConfig cfg;
    const int null_index = fx.model.vocab().null_index;
    LossPlan plan;
    const auto lb = total_loss(fx.batch, fx.outputs, cfg, null_index, &plan);

    // perturb each logit of each pair and compare the plan value delta
    const double h = 1e-6;
    const int P = fx.model.vocab().size();
    double max_err = 0.0;
    for (std::size_t slot = 0; slot < fx.outputs.size(); ++slot) {
        for (int k = 0; k < P; ++k) {
            auto bump = [&](double delta) {
                auto outs = fx.outputs;
                std::vector<double> logits(static_cast<std::size_t>(P));
                for (int j = 0; j < P; ++j)
                    logits[static_cast<std::size_t>(j)] =
                        outs[slot].f_sem[static_cast<std::size_t>(j)] +
                        outs[slot].f_spt[static_cast<std::size_t>(j)] +
                        outs[slot].f_vis[static_cast<std::size_t>(j)];
                logits[static_cast<std::size_t>(k)] += delta;
                outs[slot].probs = softmax(logits);
                outs[slot].affinity = affinity_from_probs(outs[slot].probs, null_index);
                return evaluate_plan(plan, outs, null_index);
            };
            const double numeric = (bump(h) - bump(-h)) / (2 * h);
            const double analytic = lb.dlogits[slot][static_cast<std::size_t>(k)];
            max_err = std::max(max_err, std::abs(numeric - analytic));
        }
    }
    CHECK(max_err < 1e-5);
}

TEST_CASE("sampled losses equal brute-force enumeration on tiny scenes") {
    Rng rng(71);
    int cases = 0;
    while (cases < 200) {
        const std::uint64_t seed = rng.u64();
        auto fx = make_fixture(seed, /*k_neg=*/64);
        if (static_cast<int>(fx.scene.entities.size()) > 5) continue;
        LossConfig cfg;
        const auto lb = total_loss(fx.batch, fx.outputs, cfg, fx.model.vocab().null_index);

        oracle::PhiFn phi = [&](int s, int o) {
            return fx.model.forward(fx.scene, s, o).affinity;
        };
        ArgmaxFn argmax = [&](int s, int o) { return fx.model.argmax_predicate(fx.scene, s, o); };
        const auto ref = oracle::brute_force_losses(fx.scene, fx.labels, phi, argmax, cfg.alpha1,
                                                    cfg.alpha2, cfg.alpha3);
        CHECK(lb.l1 == doctest::Approx(ref.l1).epsilon(1e-9));
        CHECK(lb.l2 == doctest::Approx(ref.l2).epsilon(1e-9));
        CHECK(lb.l3 == doctest::Approx(ref.l3).epsilon(1e-9));
        cases++;
    }
}
