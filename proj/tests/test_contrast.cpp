#include <doctest.h>

#include <algorithm>

#include "sgrel/contrast.hpp"
#include "sgrel/rng.hpp"
#include "sgrel/synth.hpp"

using namespace sgrel;

namespace {

EntityInstance ent(int id, Box box, int cls) {
    EntityInstance e;
    e.id = id;
    e.box = box;
    e.entity_class = cls;
    return e;
}

// man(0) holds cup1(1); cup2(2) and table(3) unrelated
SceneGraph cup_scene() {
    SceneGraph s;
    s.image_size = ImageSize(1000, 1000);
    s.entities.push_back(ent(0, Box(0, 0, 100, 200), 0));
    s.entities.push_back(ent(1, Box(120, 50, 40, 40), 1));
    s.entities.push_back(ent(2, Box(400, 50, 40, 40), 1));
    s.entities.push_back(ent(3, Box(300, 300, 300, 100), 2));
    s.positive_pairs.push_back({0, 1, 0});  // holds
    return s;
}

}  // namespace

TEST_CASE("pair labels: direct lookup and default") {
    const auto s = cup_scene();
    const auto labels = PairLabels::build(s);
    CHECK(labels.related(0, 1));
    CHECK(labels.predicates(0, 1) == std::vector<int>{0});
    CHECK_FALSE(labels.related(0, 2));
    CHECK(labels.predicates(0, 2).empty());
    CHECK_FALSE(labels.related(1, 0));  // direction matters
    CHECK(labels.n_positive_pairs() == 1);
}

TEST_CASE("pair labels: detections inherit via matching") {
    auto s = cup_scene();
    // detection overlapping the man (same class, IoU > 0.5)
    s.entities.push_back(ent(9, Box(5, 0, 100, 200), 0));
    const auto labels = PairLabels::build(s);
    CHECK(labels.related(9, 1));  // inherits holds
    CHECK(labels.predicates(9, 1) == std::vector<int>{0});
    CHECK_FALSE(labels.related(9, 2));
    // the detection and its source are an unrelated pair of the same class
    CHECK_FALSE(labels.related(9, 0));
}

TEST_CASE("class-agnostic sets partition partners") {
    const auto s = cup_scene();
    const auto labels = PairLabels::build(s);

    const auto r = build_contrast_sets_agnostic(s, labels, 0, AnchorRole::subject);
    REQUIRE(r.ok());
    CHECK(r.sets.positives == std::vector<int>{1});
    CHECK(r.sets.negatives == std::vector<int>{2, 3});

    // object anchor mirrors the subject case
    const auto ro = build_contrast_sets_agnostic(s, labels, 1, AnchorRole::object);
    REQUIRE(ro.ok());
    CHECK(ro.sets.positives == std::vector<int>{0});
    CHECK(ro.sets.negatives == std::vector<int>{2, 3});

    // anchor with no positives
    const auto rn = build_contrast_sets_agnostic(s, labels, 2, AnchorRole::subject);
    CHECK(rn.error == ContrastError::no_positives);
}

TEST_CASE("class-agnostic counts: 1 subject, 3 objects, 2 related") {
    SceneGraph s;
    s.image_size = ImageSize(1000, 1000);
    s.entities.push_back(ent(0, Box(0, 0, 100, 100), 0));
    for (int i = 1; i <= 3; ++i) s.entities.push_back(ent(i, Box(200.0 * i, 0, 100, 100), 1));
    s.positive_pairs.push_back({0, 1, 0});
    s.positive_pairs.push_back({0, 2, 0});
    const auto labels = PairLabels::build(s);
    const auto r = build_contrast_sets_agnostic(s, labels, 0, AnchorRole::subject);
    REQUIRE(r.ok());
    CHECK(r.sets.positives.size() == 2);
    CHECK(r.sets.negatives.size() == 1);
}

TEST_CASE("entity-class sets: duplicate-cup scenario") {
    const auto s = cup_scene();
    const auto labels = PairLabels::build(s);

    const auto cups = build_contrast_sets_entity_class(s, labels, 0, AnchorRole::subject, 1);
    REQUIRE(cups.ok());
    CHECK(cups.sets.positives == std::vector<int>{1});
    CHECK(cups.sets.negatives == std::vector<int>{2});

    // class without unrelated instances: add a second annotated cup pairing
    auto s2 = cup_scene();
    s2.positive_pairs.push_back({0, 2, 0});
    const auto labels2 = PairLabels::build(s2);
    const auto r2 = build_contrast_sets_entity_class(s2, labels2, 0, AnchorRole::subject, 1);
    CHECK(r2.error == ContrastError::empty_negatives);

    // class not among the positive partners
    const auto r3 = build_contrast_sets_entity_class(s, labels, 0, AnchorRole::subject, 2);
    CHECK(r3.error == ContrastError::no_positives);
}

TEST_CASE("predicate-class sets: argmax mistakes become negatives") {
    // man1(0) plays(1) guitar(1); drum(2) unannotated
    SceneGraph s;
    s.image_size = ImageSize(1000, 1000);
    s.entities.push_back(ent(0, Box(0, 0, 100, 200), 0));
    s.entities.push_back(ent(1, Box(150, 50, 80, 80), 1));
    s.entities.push_back(ent(2, Box(300, 50, 80, 80), 2));
    s.positive_pairs.push_back({0, 1, 1});
    const auto labels = PairLabels::build(s);

    SUBCASE("model mislabels the drum pair as plays") {
        ArgmaxFn argmax = [](int, int) { return 1; };
        const auto r = build_contrast_sets_predicate_class(s, labels, 0, AnchorRole::subject, 1,
                                                           argmax);
        REQUIRE(r.ok());
        CHECK(r.sets.positives == std::vector<int>{1});
        CHECK(r.sets.negatives == std::vector<int>{2});
    }
    SUBCASE("no mistakes: empty negatives") {
        ArgmaxFn argmax = [](int, int) { return 3; };  // always predicts the null class
        const auto r = build_contrast_sets_predicate_class(s, labels, 0, AnchorRole::subject, 1,
                                                           argmax);
        CHECK(r.error == ContrastError::empty_negatives);
    }
    SUBCASE("predicate not among the anchor's ground truth") {
        ArgmaxFn argmax = [](int, int) { return 0; };
        const auto r = build_contrast_sets_predicate_class(s, labels, 0, AnchorRole::subject, 0,
                                                           argmax);
        CHECK(r.error == ContrastError::no_positives);
    }
}

TEST_CASE("grouped sets are subsets of the agnostic sets") {
    Rng rng(77);
    RandomSceneOpts opts;
    opts.min_entities = 3;
    opts.max_entities = 6;
    opts.d_app = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_scene(rng, opts);
        const auto labels = PairLabels::build(s);
        ArgmaxFn argmax = [&](int a, int b) { return (a * 7 + b * 3) % 4; };
        for (const auto& e : s.entities) {
            for (AnchorRole role : {AnchorRole::subject, AnchorRole::object}) {
                const auto base = build_contrast_sets_agnostic(s, labels, e.id, role);
                auto is_subset = [](const std::vector<int>& small, const std::vector<int>& big) {
                    return std::all_of(small.begin(), small.end(), [&](int x) {
                        return std::find(big.begin(), big.end(), x) != big.end();
                    });
                };
                auto check_common = [&](const ContrastSets& sets) {
                    for (int p : sets.positives) {
                        CHECK(p != sets.anchor_id);
                        CHECK(std::find(sets.negatives.begin(), sets.negatives.end(), p) ==
                              sets.negatives.end());
                    }
                    for (int n : sets.negatives) CHECK(n != sets.anchor_id);
                };
                if (base.ok()) check_common(base.sets);
                for (int c = 0; c < opts.n_entity_classes; ++c) {
                    const auto r = build_contrast_sets_entity_class(s, labels, e.id, role, c);
                    if (!r.ok()) continue;
                    check_common(r.sets);
                    REQUIRE(base.error != ContrastError::no_positives);
                    CHECK(is_subset(r.sets.positives, base.sets.positives));
                    CHECK(is_subset(r.sets.negatives, base.sets.negatives));
                    for (int id : r.sets.positives)
                        CHECK(s.entity(id).entity_class == c);
                    for (int id : r.sets.negatives)
                        CHECK(s.entity(id).entity_class == c);
                }
                for (int p = 0; p < opts.n_predicate_classes; ++p) {
                    const auto r =
                        build_contrast_sets_predicate_class(s, labels, e.id, role, p, argmax);
                    if (!r.ok()) continue;
                    check_common(r.sets);
                    REQUIRE(base.error != ContrastError::no_positives);
                    CHECK(is_subset(r.sets.positives, base.sets.positives));
                    CHECK(is_subset(r.sets.negatives, base.sets.negatives));
                }
            }
        }
    }
}
