#pragma once

// Test helpers and independent oracles. Nothing here calls into the code
// paths it is used to check.

#include "citypulse/config.hpp"
#include "citypulse/layout.hpp"
#include "citypulse/structure.hpp"
#include "citypulse/trace.hpp"
#include "citypulse/wire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace citypulse::testing {

inline std::string fixture_path(const std::string& name) {
    return std::string(CITYPULSE_FIXTURE_DIR) + "/" + name;
}

inline CallEvent ev(std::optional<std::string> caller, std::string callee, bool ctor = false) {
    CallEvent e;
    e.caller_class_id = std::move(caller);
    e.callee_class_id = std::move(callee);
    e.is_constructor_call = ctor;
    return e;
}

inline std::vector<CallEvent> repeat(const CallEvent& e, int n) { return std::vector<CallEvent>(n, e); }

inline std::vector<CallEvent> concat(std::initializer_list<std::vector<CallEvent>> parts) {
    std::vector<CallEvent> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

inline Span span(std::string trace, std::string id, std::optional<std::string> parent, std::string cls,
                 std::uint64_t start = 0, bool ctor = false) {
    Span s;
    s.trace_id = std::move(trace);
    s.span_id = std::move(id);
    s.parent_span_id = std::move(parent);
    s.class_id = std::move(cls);
    s.operation_name = ctor ? "<init>" : "op";
    s.is_constructor = ctor;
    s.start_nanos = start;
    s.end_nanos = start + 1;
    return s;
}

inline constexpr Window everything{0, std::numeric_limits<std::uint64_t>::max()};

/// Random event list over `classes` class ids; roughly 1/5 root events.
inline std::vector<CallEvent> random_events(std::mt19937_64& rng, std::size_t count, std::size_t classes) {
    std::uniform_int_distribution<std::size_t> cls(0, classes - 1);
    std::bernoulli_distribution root(0.2);
    std::bernoulli_distribution ctor(0.3);
    std::vector<CallEvent> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::optional<std::string> caller;
        if (!root(rng)) caller = "C" + std::to_string(cls(rng));
        out.push_back(ev(caller, "C" + std::to_string(cls(rng)), ctor(rng)));
    }
    return out;
}

/// Brute-force oracle: for every class, scan the whole event list once per
/// metric and count by the textual definition.
struct BruteForceMetrics {
    std::map<std::string, double> instance_count, ic, ec, iec;

    explicit BruteForceMetrics(const std::vector<CallEvent>& events) {
        std::set<std::string> classes;
        for (const auto& e : events) {
            classes.insert(e.callee_class_id);
            if (e.caller_class_id) classes.insert(*e.caller_class_id);
        }
        for (const auto& c : classes) {
            double created = 0, initiated = 0, received = 0;
            for (const auto& e : events) {
                if (e.callee_class_id == c && e.is_constructor_call) created += 1;
                if (e.caller_class_id && *e.caller_class_id == c) initiated += 1;
                if (e.callee_class_id == c) received += 1;
            }
            if (created > 0) instance_count[c] = created;
            if (initiated > 0) ic[c] = initiated;
            if (received > 0) ec[c] = received;
            if (initiated + received > 0) iec[c] = initiated + received;
        }
    }
};

/// Closed form of s_n for constant raw score m and decay 1/2, n = 0-based tick.
inline double aggregate_closed_form(double m, int n) { return 2.0 * m * (1.0 - std::pow(2.0, -(n + 1))); }

/// Position along a piecewise-linear gradient path, in [0, stops-1], for a
/// color produced by interpolation; nullopt if the color is off the path.
/// Works backwards from the color, independent of the forward mapping.
inline std::optional<double> gradient_position(const Rgb& c, const std::vector<Rgb>& stops) {
    for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
        const auto& a = stops[i];
        const auto& b = stops[i + 1];
        const int da[3] = {b.r - a.r, b.g - a.g, b.b - a.b};
        const int dc[3] = {c.r - a.r, c.g - a.g, c.b - a.b};
        // Parameter from the channel with the largest change.
        int k = 0;
        for (int j = 1; j < 3; ++j) {
            if (std::abs(da[j]) > std::abs(da[k])) k = j;
        }
        if (da[k] == 0) continue;
        const double t = static_cast<double>(dc[k]) / da[k];
        if (t < -1e-9 || t > 1 + 1e-9) continue;
        bool on = true;
        for (int j = 0; j < 3; ++j) {
            if (std::abs(dc[j] - t * da[j]) > 0.5 + 1e-9) on = false;
        }
        if (on) return static_cast<double>(i) + t;
    }
    return std::nullopt;
}

/// Random fully qualified operation names forming a package tree of bounded
/// depth; class count is at most `max_classes`.
inline std::vector<std::string> random_fqns(std::mt19937_64& rng, std::size_t max_classes) {
    std::uniform_int_distribution<std::size_t> classes(1, max_classes);
    std::uniform_int_distribution<int> depth(0, 4), seg(0, 5), ops(1, 3);
    const auto n = classes(rng);
    std::vector<std::string> out;
    for (std::size_t c = 0; c < n; ++c) {
        std::string pkg;
        for (int d = depth(rng); d > 0; --d) pkg += "p" + std::to_string(seg(rng)) + ".";
        const auto cls = pkg + "C" + std::to_string(c);
        for (int o = ops(rng); o > 0; --o) out.push_back(cls + ".m" + std::to_string(o));
    }
    return out;
}

/// Checks the geometric invariants of a layout; returns the first violation
/// or an empty string.
inline std::string layout_violation(const CityLayout& city, const LayoutConstants& k) {
    constexpr double eps = 1e-9;
    const auto& boxes = city.boxes;
    auto describe = [&](std::size_t i) { return boxes[i].node_id; };
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        if (!(b.width > 0 && b.depth > 0 && b.height > 0)) return "degenerate box " + describe(i);
        if (b.parent < 0) {
            if (b.kind != BoxKind::foundation || b.y_base != 0) return "bad root " + describe(i);
            continue;
        }
        if (static_cast<std::size_t>(b.parent) >= i) return "parent after child " + describe(i);
        const auto& p = boxes[b.parent];
        if (b.x < p.x + k.padding - eps || b.z < p.z + k.padding - eps ||
            b.x + b.width > p.x + p.width - k.padding + eps || b.z + b.depth > p.z + p.depth - k.padding + eps)
            return "not contained " + describe(i);
        if (std::abs(b.y_base - (p.y_base + p.height)) > eps) return "not stacked " + describe(i);
        if (b.kind == BoxKind::class_box &&
            (b.height < k.min_height - eps || b.height > k.max_height + eps || b.width != k.class_footprint))
            return "bad class box " + describe(i);
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            if (boxes[i].parent != boxes[j].parent) continue;
            const auto& a = boxes[i];
            const auto& b = boxes[j];
            const bool apart = a.x + a.width <= b.x + eps || b.x + b.width <= a.x + eps ||
                               a.z + a.depth <= b.z + eps || b.z + b.depth <= a.z + eps;
            if (!apart) return "overlap " + describe(i) + " / " + describe(j);
        }
    }
    return {};
}

}  // namespace citypulse::testing
