#include "citypulse/layout.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace citypulse;
using namespace citypulse::testing;

namespace {

MetricScores counts(ClassValues v) { return MetricScores{"instance_count", {}, std::move(v)}; }

const LayoutBox& box(const CityLayout& city, const std::string& id) {
    auto it = std::find_if(city.boxes.begin(), city.boxes.end(), [&](const LayoutBox& b) { return b.node_id == id; });
    REQUIRE(it != city.boxes.end());
    return *it;
}

}  // namespace

TEST_CASE("single class in the default package") {
    Landscape tree;
    tree.insert(parse_fqn("Main.run"), "h", "app");
    LayoutConstants k;
    auto city = layout(tree, counts({}), k);
    REQUIRE(city.boxes.size() == 2);
    const auto& foundation = city.boxes[0];
    CHECK(foundation.kind == BoxKind::foundation);
    CHECK(foundation.node_id == "h/app");
    CHECK(foundation.width == doctest::Approx(k.class_footprint + 2 * k.padding));
    CHECK(foundation.height == k.tile_thickness);
    const auto& cls = city.boxes[1];
    CHECK(cls.kind == BoxKind::class_box);
    CHECK(cls.x == doctest::Approx(k.padding));
    CHECK(cls.z == doctest::Approx(k.padding));
    CHECK(cls.y_base == doctest::Approx(k.tile_thickness));
    CHECK(cls.height == k.min_height);
    REQUIRE(city.anchors.size() == 1);
    CHECK(city.anchors[0].x == doctest::Approx(k.padding + 0.5));
}

TEST_CASE("class heights are min-max normalized over instance counts") {
    Landscape tree;
    auto a = tree.insert(parse_fqn("p.A.x"), "h", "app");
    auto b = tree.insert(parse_fqn("p.B.x"), "h", "app");
    auto c = tree.insert(parse_fqn("p.C.x"), "h", "app");
    LayoutConstants k;
    auto city = layout(tree, counts({{b, 5}, {c, 10}}), k);
    CHECK(box(city, a).height == k.min_height);
    CHECK(box(city, b).height == doctest::Approx((k.min_height + k.max_height) / 2));
    CHECK(box(city, c).height == k.max_height);

    auto flat = layout(tree, counts({{a, 3}, {b, 3}, {c, 3}}), k);
    for (const auto& id : {a, b, c}) CHECK(box(flat, id).height == k.min_height);
}

TEST_CASE("packages nest as stacked tiles") {
    Landscape tree;
    auto id = tree.insert(parse_fqn("org.demo.Thing.go"), "h", "app");
    LayoutConstants k;
    auto city = layout(tree, counts({}), k);
    const auto& org = box(city, "h/app/org");
    const auto& demo = box(city, "h/app/org.demo");
    const auto& cls = box(city, id);
    CHECK(org.kind == BoxKind::package);
    CHECK(org.y_base == doctest::Approx(k.tile_thickness));
    CHECK(demo.y_base == doctest::Approx(2 * k.tile_thickness));
    CHECK(cls.y_base == doctest::Approx(3 * k.tile_thickness));
    CHECK(city.boxes[static_cast<std::size_t>(cls.parent)].node_id == "h/app/org.demo");
    CHECK(layout_violation(city, k).empty());
}

TEST_CASE("applications stand side by side") {
    Landscape tree;
    tree.insert(parse_fqn("a.B.c"), "h", "one");
    tree.insert(parse_fqn("a.B.c"), "h", "two");
    LayoutConstants k;
    auto city = layout(tree, counts({}), k);
    std::vector<LayoutBox> foundations;
    for (const auto& b : city.boxes)
        if (b.kind == BoxKind::foundation) foundations.push_back(b);
    REQUIRE(foundations.size() == 2);
    CHECK(foundations[1].x == doctest::Approx(foundations[0].x + foundations[0].width + k.class_footprint));
    CHECK(city.anchors.size() == 2);
}

TEST_CASE("empty landscape lays out to nothing") {
    auto city = layout(Landscape{}, counts({}));
    CHECK(city.boxes.empty());
    CHECK(city.anchors.empty());
}

TEST_CASE("random trees keep invariants and ignore insertion order") {
    std::mt19937_64 rng(21);
    LayoutConstants k;
    for (int round = 0; round < 25; ++round) {
        auto fqns = random_fqns(rng, 80);
        Landscape reference;
        ClassValues ic;
        std::uniform_int_distribution<int> count(0, 50);
        for (const auto& f : fqns) ic[reference.insert(parse_fqn(f), "h", "app")] = count(rng);
        auto city = layout(reference, counts(ic), k);
        CHECK(layout_violation(city, k) == "");
        CHECK(city.anchors.size() == reference.class_count());
        for (int s = 0; s < 4; ++s) {
            std::shuffle(fqns.begin(), fqns.end(), rng);
            Landscape shuffled;
            for (const auto& f : fqns) shuffled.insert(parse_fqn(f), "h", "app");
            CHECK(layout(shuffled, counts(ic), k) == city);
        }
    }
}

TEST_CASE("edges aggregate by ordered class pair") {
    auto events = concat({repeat(ev("A", "B"), 3), repeat(ev("B", "A"), 1), repeat(ev(std::nullopt, "A"), 7)});
    auto edges = aggregate_edges(events);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].caller_class_id == "A");
    CHECK(edges[0].callee_class_id == "B");
    CHECK(edges[0].call_count == 3);
    CHECK(edges[1].call_count == 1);
    CHECK(aggregate_edges({}).empty());
}

TEST_CASE("edge thickness terciles") {
    std::vector<CallEvent> events;
    for (int i = 1; i <= 6; ++i) {
        auto part = repeat(ev("C" + std::to_string(i), "T"), i);
        events.insert(events.end(), part.begin(), part.end());
    }
    auto edges = aggregate_edges(events);
    REQUIRE(edges.size() == 6);
    // Counts 1..6: lower bound c[1] = 2, upper bound c[3] = 4.
    std::map<std::uint64_t, Thickness> by_count;
    for (const auto& e : edges) by_count[e.call_count] = e.thickness;
    CHECK(by_count[1] == Thickness::small);
    CHECK(by_count[2] == Thickness::small);
    CHECK(by_count[3] == Thickness::medium);
    CHECK(by_count[4] == Thickness::medium);
    CHECK(by_count[5] == Thickness::large);
    CHECK(by_count[6] == Thickness::large);

    auto single = aggregate_edges(repeat(ev("A", "B"), 9));
    REQUIRE(single.size() == 1);
    CHECK(single[0].thickness == Thickness::small);

    auto equal = aggregate_edges(concat({repeat(ev("A", "B"), 2), repeat(ev("B", "C"), 2), repeat(ev("C", "A"), 2)}));
    for (const auto& e : equal) CHECK(e.thickness == Thickness::small);
}
