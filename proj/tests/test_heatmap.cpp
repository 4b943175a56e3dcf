#include "citypulse/heatmap.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace citypulse;
using namespace citypulse::testing;

namespace {

MetricScores scores(ClassValues v) { return MetricScores{"m", {}, std::move(v)}; }

}  // namespace

TEST_CASE("snapshot mode is the identity") {
    CHECK(snapshot_mode(scores({{"A", 5}})) == ClassValues{{"A", 5}});
    CHECK(snapshot_mode(scores({})).empty());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> val(-100, 100);
    ClassValues v;
    for (int i = 0; i < 50; ++i) v["C" + std::to_string(i)] = val(rng);
    CHECK(snapshot_mode(scores(v)) == v);
}

TEST_CASE("aggregation: first value stands alone, then half the past is added") {
    ClassValues s;
    s = aggregate_step(s, scores({{"A", 10}}));
    CHECK(s.at("A") == 10.0);
    s = aggregate_step(s, scores({{"A", 10}}));
    CHECK(s.at("A") == 15.0);
    s = aggregate_step(s, scores({{"A", 10}}));
    CHECK(s.at("A") == 17.5);
}

TEST_CASE("aggregation converges to 2m for constant input") {
    const double m = 10.0;
    ClassValues s;
    for (int n = 0; n < 25; ++n) {
        s = aggregate_step(s, scores({{"A", m}}));
        CHECK(s.at("A") == doctest::Approx(aggregate_closed_form(m, n)).epsilon(1e-12));
    }
    CHECK(std::abs(s.at("A") - 2 * m) < 1e-6 * m);
}

TEST_CASE("absent classes decay") {
    auto s = aggregate_step({}, scores({{"A", 8}}));
    s = aggregate_step(s, scores({{"B", 1}}));
    CHECK(s.at("A") == 4.0);
    CHECK(s.at("B") == 1.0);
    s = aggregate_step(s, scores({}));
    CHECK(s.at("A") == 2.0);
}

TEST_CASE("aggregation is linear in the raw scores") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> val(0, 50);
    std::uniform_int_distribution<int> cls(0, 5);
    const double alpha = 4.0;  // power of two keeps the comparison exact
    ClassValues s, scaled;
    for (int t = 0; t < 40; ++t) {
        ClassValues raw;
        for (int k = 0; k < 3; ++k) raw["C" + std::to_string(cls(rng))] = val(rng);
        ClassValues raw_scaled;
        for (const auto& [c, v] : raw) raw_scaled[c] = alpha * v;
        s = aggregate_step(s, scores(raw));
        scaled = aggregate_step(scaled, scores(raw_scaled));
        for (const auto& [c, v] : s) CHECK(scaled.at(c) == alpha * v);
    }
}

TEST_CASE("windowed mode: worked example gives -10") {
    const std::size_t w = 10;
    ScoreHistory h("instance_count", w);
    h.advance(scores({{"A", 30}}));
    for (std::size_t i = 1; i < w; ++i) h.advance(scores({}));
    h.advance(scores({{"A", 20}}));
    CHECK(h.ring().size() == w + 1);
    CHECK(windowed_mode(h).at("A") == -10.0);
}

TEST_CASE("windowed mode edge cases") {
    ScoreHistory h("m", 2);
    CHECK(windowed_mode(h).empty());
    h.advance(scores({{"A", 7}}));
    // One window: compared against itself.
    CHECK(windowed_mode(h).at("A") == 0.0);
    h.advance(scores({{"A", 7}, {"B", 7}}));
    auto v = windowed_mode(h);
    CHECK(v.at("A") == 0.0);
    CHECK(v.at("B") == 7.0);
}

TEST_CASE("windowed mode negates when latest and past swap") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> val(0, 100);
    for (int round = 0; round < 50; ++round) {
        ClassValues a, b;
        for (int k = 0; k < 6; ++k) {
            if (val(rng) < 70) a["C" + std::to_string(k)] = std::round(val(rng));
            if (val(rng) < 70) b["C" + std::to_string(k)] = std::round(val(rng));
        }
        ScoreHistory forward("m", 1), backward("m", 1);
        forward.advance(scores(a));
        forward.advance(scores(b));
        backward.advance(scores(b));
        backward.advance(scores(a));
        auto f = windowed_mode(forward), r = windowed_mode(backward);
        CHECK(f.size() == r.size());
        for (const auto& [c, v] : f) CHECK(r.at(c) == -v);
    }
}

TEST_CASE("ring buffer compares tick n with tick n - W") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> val(0, 30);
    for (std::size_t w : {1u, 3u, 10u}) {
        ScoreHistory h("m", w);
        std::vector<ClassValues> full;  // oracle keeps everything
        for (int t = 0; t < 40; ++t) {
            ClassValues raw{{"A", double(val(rng))}, {"B", double(val(rng))}};
            full.push_back(raw);
            h.advance(scores(raw));
            CHECK(h.ring().size() == std::min<std::size_t>(t + 1, w + 1));
            const auto& past = full[t >= static_cast<int>(w) ? t - w : 0];
            auto v = windowed_mode(h);
            CHECK(v.at("A") == raw.at("A") - past.at("A"));
            CHECK(v.at("B") == raw.at("B") - past.at("B"));
        }
    }
}

TEST_CASE("mode cycling") {
    auto m = HeatmapMode::snapshot;
    m = next_mode(m);
    CHECK(m == HeatmapMode::aggregated);
    m = next_mode(next_mode(m));
    CHECK(m == HeatmapMode::snapshot);
    CHECK(previous_mode(HeatmapMode::snapshot) == HeatmapMode::windowed);
    for (auto mode : all_modes) CHECK(parse_mode(to_string(mode)) == mode);
    CHECK_FALSE(parse_mode("weekly"));
}

TEST_CASE("legend range") {
    CHECK(legend_range({{"A", -150}, {"B", 20}}) == std::pair{-150.0, 20.0});
    CHECK(legend_range({{"A", 5}}) == std::pair{5.0, 5.0});
    CHECK(legend_range({}) == std::pair{0.0, 0.0});
}

TEST_CASE("value to color endpoints and degenerate range") {
    CHECK(value_to_color(-3, -3, 9) == Rgb{0, 0, 255});
    CHECK(value_to_color(9, -3, 9) == Rgb{255, 0, 0});
    CHECK(value_to_color(4, 4, 4) == Rgb{0, 255, 0});
    CHECK(value_to_color(3, 0, 4) == Rgb{255, 255, 0});
    CHECK(value_to_color(1, 0, 4) == Rgb{0, 255, 255});
    // Clamped outside the range.
    CHECK(value_to_color(-100, 0, 4) == Rgb{0, 0, 255});
    CHECK(value_to_color(100, 0, 4) == Rgb{255, 0, 0});
    CHECK_THROWS_AS(value_to_color(std::nan(""), 0, 1), std::domain_error);
    CHECK_THROWS_AS(value_to_color(INFINITY, 0, 1), std::domain_error);
}

TEST_CASE("color is monotone along the gradient path") {
    const auto stops = default_gradient();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> val(-1000, 1000);
    for (int i = 0; i < 2000; ++i) {
        double lo = val(rng), hi = val(rng);
        if (lo > hi) std::swap(lo, hi);
        if (lo == hi) continue;
        double a = val(rng), b = val(rng);
        if (a > b) std::swap(a, b);
        auto pa = gradient_position(value_to_color(a, lo, hi), stops);
        auto pb = gradient_position(value_to_color(b, lo, hi), stops);
        REQUIRE(pa);
        REQUIRE(pb);
        CHECK(*pa <= *pb);
    }
}

TEST_CASE("heatmap view carries legend and gradient") {
    ScoreHistory h("ic_cd", 10);
    h.advance(scores({{"A", 2}, {"B", 6}}));
    auto view = make_view(h, HeatmapMode::snapshot, 3, default_gradient());
    CHECK(view.metric_id == "ic_cd");
    CHECK(view.tick_index == 3);
    CHECK(view.legend_min == 2);
    CHECK(view.legend_max == 6);
    CHECK(view.gradient.size() == 5);
    auto agg = make_view(h, HeatmapMode::aggregated, 3, default_gradient());
    CHECK(agg.values == ClassValues{{"A", 2}, {"B", 6}});
}
