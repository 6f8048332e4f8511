#include <doctest.h>

#include <set>

#include "sgrel/rng.hpp"
#include "sgrel/sampler.hpp"
#include "sgrel/synth.hpp"

using namespace sgrel;

namespace {

constexpr int kNull = 4;  // tests use 4 real predicates + null

// n entities, the first n_pos ordered pairs (2i, 2i+1) annotated
SceneGraph grid_scene(int n_entities, int n_pos) {
    SceneGraph s;
    s.image_size = ImageSize(10000, 10000);
    for (int i = 0; i < n_entities; ++i) {
        EntityInstance e;
        e.id = i;
        e.box = Box(90.0 * (i % 100), 90.0 * (i / 100), 50, 50);
        e.entity_class = i % 3;
        s.entities.push_back(e);
    }
    int added = 0;
    for (int i = 0; i + 1 < n_entities && added < n_pos; i += 2) {
        s.positive_pairs.push_back({i, i + 1, added % 4});
        added++;
    }
    // wrap around with cross pairs if more positives are requested
    for (int i = 0; added < n_pos; ++i) {
        const int a = i % n_entities;
        const int b = (i * 7 + 3) % n_entities;
        if (a == b) continue;
        RelTriple t{a, b, (added % 4)};
        bool dup = false;
        for (const auto& p : s.positive_pairs)
            dup |= p.subject_id == t.subject_id && p.object_id == t.object_id &&
                   p.predicate == t.predicate;
        if (!dup) {
            s.positive_pairs.push_back(t);
            added++;
        }
    }
    s.validate();
    return s;
}

ArgmaxFn cheap_argmax() {
    return [](int s, int o) { return (s * 31 + o * 17) % 5; };
}

bool batches_equal(const SampledBatch& a, const SampledBatch& b) {
    if (a.pairs != b.pairs || a.l0_slots != b.l0_slots || a.l0_targets != b.l0_targets)
        return false;
    auto groups_equal = [](const std::vector<ContrastGroup>& x,
                           const std::vector<ContrastGroup>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].anchor_id != y[i].anchor_id || x[i].role != y[i].role ||
                x[i].group_key != y[i].group_key || x[i].pos_slots != y[i].pos_slots ||
                x[i].neg_slots != y[i].neg_slots)
                return false;
        }
        return true;
    };
    return groups_equal(a.l1_groups, b.l1_groups) && groups_equal(a.l2_groups, b.l2_groups) &&
           groups_equal(a.l3_groups, b.l3_groups);
}

}  // namespace

TEST_CASE("cross-entropy sample hits the 128/384 quota on large scenes") {
    // 200 positive pairs over 102 entities: more than 10000 negatives available
    const auto s = grid_scene(102, 200);
    REQUIRE(s.positive_pairs.size() == 200);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.rng_seed = 5;
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    int pos = 0, neg = 0;
    for (int t : b.l0_targets) (t == kNull ? neg : pos)++;
    CHECK(pos == 128);
    CHECK(neg == 384);
    CHECK(b.l0_slots.size() == 512);
}

TEST_CASE("positives below quota are all kept") {
    const auto s = grid_scene(102, 50);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.rng_seed = 6;
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    int pos = 0, neg = 0;
    for (int t : b.l0_targets) (t == kNull ? neg : pos)++;
    CHECK(pos == 50);
    CHECK(neg == 462);
}

TEST_CASE("small scenes take every available pair") {
    const auto s = grid_scene(4, 2);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.rng_seed = 7;
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    CHECK(b.l0_slots.size() == 4 * 3);  // 2 positives + 10 negatives
}

TEST_CASE("same seed reproduces the batch, different seed does not") {
    const auto s = grid_scene(40, 30);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.rng_seed = 123;
    const auto a = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    CHECK(batches_equal(a, b));
    cfg.rng_seed = 124;
    const auto c = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    CHECK_FALSE(batches_equal(a, c));
}

TEST_CASE("k_neg covering all negatives keeps every hard negative") {
    const auto s = grid_scene(6, 3);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.k_neg = 64;
    cfg.rng_seed = 9;
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    for (const auto& g : b.l1_groups) {
        const auto& expect_neg = [&] {
            std::vector<int> out;
            for (const auto& e : s.entities) {
                if (e.id == g.anchor_id) continue;
                const auto [ss, oo] = anchor_pair(g.anchor_id, e.id, g.role);
                if (!labels.related(ss, oo)) out.push_back(e.id);
            }
            return out;
        }();
        CHECK(g.neg_partner_ids == expect_neg);
    }
}

TEST_CASE("k_neg caps the per-anchor negatives") {
    const auto s = grid_scene(40, 6);
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    cfg.k_neg = 5;
    cfg.rng_seed = 10;
    const auto b = sample_batch(s, labels, cfg, cheap_argmax(), kNull);
    REQUIRE(!b.l1_groups.empty());
    for (const auto& g : b.l1_groups) CHECK(g.neg_slots.size() <= 5);
}

TEST_CASE("groups only pair anchors with valid sets") {
    Rng rng(31);
    RandomSceneOpts opts;
    opts.d_app = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_scene(rng, opts);
        const auto labels = PairLabels::build(s);
        SamplerConfig cfg;
        cfg.rng_seed = rng.u64();
        const auto b = sample_batch(s, labels, cfg, cheap_argmax(), 3);
        auto check_groups = [&](const std::vector<ContrastGroup>& groups) {
            for (const auto& g : groups) {
                CHECK(!g.pos_slots.empty());
                CHECK(!g.neg_slots.empty());
                std::set<int> pos(g.pos_partner_ids.begin(), g.pos_partner_ids.end());
                for (int id : g.neg_partner_ids) {
                    CHECK(pos.count(id) == 0);
                    CHECK(id != g.anchor_id);
                }
            }
        };
        check_groups(b.l1_groups);
        check_groups(b.l2_groups);
        check_groups(b.l3_groups);
        for (const auto& g : b.l2_groups)
            for (int id : g.pos_partner_ids) CHECK(s.entity(id).entity_class == g.group_key);
        for (const auto& g : b.l3_groups)
            for (int id : g.neg_partner_ids) {
                const auto [ss, oo] = anchor_pair(g.anchor_id, id, g.role);
                CHECK_FALSE(labels.related(ss, oo));
            }
    }
}

TEST_CASE("a scene without annotations raises NoPositives") {
    SceneGraph s;
    s.image_size = ImageSize(100, 100);
    EntityInstance a, b;
    a.id = 0;
    a.box = Box(0, 0, 10, 10);
    b.id = 1;
    b.box = Box(50, 50, 10, 10);
    s.entities = {a, b};
    const auto labels = PairLabels::build(s);
    SamplerConfig cfg;
    CHECK_THROWS_AS(sample_batch(s, labels, cfg, cheap_argmax(), 0), NoPositivesError);
}
