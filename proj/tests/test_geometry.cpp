#include <doctest.h>

#include <cmath>

#include "sgrel/geometry.hpp"
#include "sgrel/rng.hpp"
#include "sgrel/scene_graph.hpp"

using namespace sgrel;

namespace {

Box random_box(Rng& rng) {
    return Box(rng.range(-100.0, 900.0), rng.range(-100.0, 900.0), rng.range(0.5, 400.0),
               rng.range(0.5, 400.0));
}

}  // namespace

TEST_CASE("box rejects degenerate shapes") {
    CHECK_THROWS_AS(Box(0, 0, 0, 10), std::invalid_argument);
    CHECK_THROWS_AS(Box(0, 0, 10, -1), std::invalid_argument);
    CHECK_THROWS_AS(Box(0, 0, std::nan(""), 1), std::invalid_argument);
    CHECK_THROWS_AS(ImageSize(0, 10), std::invalid_argument);
}

TEST_CASE("iou worked values") {
    const Box a(0, 0, 10, 10);
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, Box(20, 20, 5, 5)) == 0.0);
    CHECK(iou(a, Box(5, 0, 10, 10)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou properties on random boxes") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const Box a = random_box(rng), b = random_box(rng);
        const double ab = iou(a, b);
        CHECK(ab == iou(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(iou(a, a) == doctest::Approx(1.0));
    }
}

TEST_CASE("enclosing_box worked values") {
    const Box a(1, 2, 3, 4);
    CHECK(enclosing_box(a, a) == a);
    CHECK(enclosing_box(Box(0, 0, 2, 2), Box(3, 3, 1, 1)) == Box(0, 0, 4, 4));
    CHECK(enclosing_box(Box(0, 0, 4, 4), Box(1, 1, 1, 1)) == Box(0, 0, 4, 4));
}

TEST_CASE("enclosing_box commutes, idempotent, contains inputs") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const Box a = random_box(rng), b = random_box(rng);
        const Box e = enclosing_box(a, b);
        CHECK(e == enclosing_box(b, a));
        CHECK(enclosing_box(e, a) == e);
        CHECK(enclosing_box(e, b) == e);
        CHECK(e.x <= a.x);
        CHECK(e.y <= b.y);
        CHECK(e.x2() >= a.x2());
        CHECK(e.y2() >= b.y2());
    }
}

TEST_CASE("box_delta worked values") {
    const auto zero = box_delta(Box(2, 3, 4, 5), Box(2, 3, 4, 5));
    for (double v : zero) CHECK(v == 0.0);

    const auto d = box_delta(Box(4, 6, 8, 10), Box(2, 3, 4, 5));
    CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(d[3] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const auto n = box_delta(Box(0, 0, 1, 1), Box(1, 1, 2, 2));
    CHECK(n[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(n[1] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(n[2] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(n[3] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("box_delta of a box with itself is zero") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const Box b = random_box(rng);
        for (double v : box_delta(b, b)) CHECK(v == 0.0);
    }
}

TEST_CASE("norm_coords worked values") {
    const ImageSize img(100, 100);
    const auto full = norm_coords(Box(0, 0, 100, 100), img);
    CHECK(full[0] == 0.0);
    CHECK(full[1] == 0.0);
    CHECK(full[2] == 1.0);
    CHECK(full[3] == 1.0);
    CHECK(full[4] == 1.0);

    const auto a = norm_coords(Box(10, 20, 30, 40), img);
    CHECK(a[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(a[2] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(a[3] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a[4] == doctest::Approx(0.12).epsilon(1e-12));

    const auto b = norm_coords(Box(0, 0, 50, 100), img);
    CHECK(b[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b[4] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("norm_coords stays in [0,1] for boxes inside the image") {
    Rng rng(10);
    const ImageSize img(640, 480);
    for (int i = 0; i < 200; ++i) {
        const double w = rng.range(1.0, 640.0);
        const double h = rng.range(1.0, 480.0);
        const Box b(rng.range(0.0, 640.0 - w), rng.range(0.0, 480.0 - h), w, h);
        const auto c = norm_coords(b, img);
        for (int k = 0; k < 4; ++k) {
            CHECK(c[static_cast<std::size_t>(k)] >= 0.0);
            CHECK(c[static_cast<std::size_t>(k)] <= 1.0);
        }
    }
}

TEST_CASE("spatial_feature layout") {
    const ImageSize img(4, 4);
    const auto f = spatial_feature(Box(0, 0, 2, 2), Box(2, 0, 2, 2), img);
    CHECK(f.size() == 22);
    // delta(subject, object)
    CHECK(f[0] == doctest::Approx(-1.0));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
    CHECK(f[3] == 0.0);
    // enclosing box is (0,0,4,2): check delta(subject, enclosing) width log
    CHECK(f[6] == doctest::Approx(std::log(0.5)));

    const auto same = spatial_feature(Box(1, 1, 2, 2), Box(1, 1, 2, 2), img);
    for (int k = 0; k < 12; ++k) CHECK(same[static_cast<std::size_t>(k)] == 0.0);
}

TEST_CASE("match_entities basics") {
    std::vector<EntityInstance> gt(2);
    gt[0].id = 10;
    gt[0].box = Box(0, 0, 10, 10);
    gt[0].entity_class = 1;
    gt[1].id = 11;
    gt[1].box = Box(50, 50, 10, 10);
    gt[1].entity_class = 2;

    SUBCASE("identical box and class matches") {
        std::vector<EntityInstance> det(1);
        det[0].id = 0;
        det[0].box = Box(0, 0, 10, 10);
        det[0].entity_class = 1;
        const auto m = match_entities(det, gt, 0.5);
        REQUIRE(m.size() == 1);
        CHECK(m.at(0) == 10);
    }
    SUBCASE("below threshold stays unmatched") {
        std::vector<EntityInstance> det(1);
        det[0].id = 0;
        det[0].box = Box(6, 0, 10, 10);  // IoU = 4/16 = 0.25
        det[0].entity_class = 1;
        CHECK(match_entities(det, gt, 0.5).empty());
    }
    SUBCASE("class mismatch stays unmatched") {
        std::vector<EntityInstance> det(1);
        det[0].id = 0;
        det[0].box = Box(0, 0, 10, 10);
        det[0].entity_class = 2;
        CHECK(match_entities(det, gt, 0.5).empty());
    }
    SUBCASE("greedy keeps only the higher-overlap detection") {
        std::vector<EntityInstance> det(2);
        det[0].id = 0;
        det[0].box = Box(0, 1, 10, 10);  // higher IoU
        det[0].entity_class = 1;
        det[1].id = 1;
        det[1].box = Box(0, 3, 10, 10);
        det[1].entity_class = 1;
        const auto m = match_entities(det, gt, 0.5);
        REQUIRE(m.size() == 1);
        CHECK(m.at(0) == 10);
    }
}

TEST_CASE("match_entities is injective on both sides") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EntityInstance> det, gt;
        const int nd = rng.uniform_int(1, 6), ng = rng.uniform_int(1, 6);
        for (int i = 0; i < nd; ++i) {
            EntityInstance e;
            e.id = i;
            e.box = random_box(rng);
            e.entity_class = rng.uniform_int(0, 2);
            det.push_back(e);
        }
        for (int i = 0; i < ng; ++i) {
            EntityInstance e;
            e.id = 100 + i;
            e.box = random_box(rng);
            e.entity_class = rng.uniform_int(0, 2);
            gt.push_back(e);
        }
        const auto m = match_entities(det, gt, 0.3);
        std::set<int> gts;
        for (const auto& [d, g] : m) CHECK(gts.insert(g).second);
    }
}
