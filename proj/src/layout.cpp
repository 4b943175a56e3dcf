#include "citypulse/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <variant>

namespace citypulse {

namespace {

struct Measured;

struct Placement {
    std::variant<const PackageNode*, const ClassNode*> node;
    double dx = 0.0;
    double dz = 0.0;
    std::unique_ptr<Measured> sub;  // packages only
};

struct Measured {
    double width = 0.0;
    double depth = 0.0;
    std::vector<Placement> children;
};

Measured measure(const PackageNode& node, const LayoutConstants& k) {
    const double p = k.padding;
    const double f = k.class_footprint;

    // Packages and classes interleaved by name; a package wins a name tie.
    std::vector<Placement> children;
    auto pkg = node.packages.begin();
    auto cls = node.classes.begin();
    while (pkg != node.packages.end() || cls != node.classes.end()) {
        if (cls == node.classes.end() || (pkg != node.packages.end() && pkg->first <= cls->first)) {
            Placement pl;
            pl.node = &pkg->second;
            pl.sub = std::make_unique<Measured>(measure(pkg->second, k));
            children.push_back(std::move(pl));
            ++pkg;
        } else {
            Placement pl;
            pl.node = &cls->second;
            children.push_back(std::move(pl));
            ++cls;
        }
    }

    auto size_of = [f](const Placement& pl) {
        return pl.sub ? std::pair{pl.sub->width, pl.sub->depth} : std::pair{f, f};
    };

    double widest = 0.0;
    double area = 0.0;
    for (const auto& pl : children) {
        auto [w, d] = size_of(pl);
        widest = std::max(widest, w);
        area += (w + p) * (d + p);
    }
    const double row_limit = std::max(widest, std::sqrt(area));

    Measured out;
    double x = p;
    double z = p;
    double row_depth = 0.0;
    double max_x = p;
    bool row_empty = true;
    for (auto& pl : children) {
        auto [w, d] = size_of(pl);
        if (!row_empty && x + w > p + row_limit) {
            z += row_depth + p;
            x = p;
            row_depth = 0.0;
        }
        pl.dx = x;
        pl.dz = z;
        x += w + p;
        max_x = std::max(max_x, x);
        row_depth = std::max(row_depth, d);
        row_empty = false;
    }
    out.width = children.empty() ? 2 * p : max_x;
    out.depth = children.empty() ? 2 * p : z + row_depth + p;
    out.children = std::move(children);
    return out;
}

struct Emitter {
    const LayoutConstants& k;
    std::map<std::string, double> heights;
    CityLayout out;

    void emit(const Measured& m, double x0, double z0, int parent_index, int level) {
        const double p_top = (level + 1) * k.tile_thickness;
        for (const auto& pl : m.children) {
            const double x = x0 + pl.dx;
            const double z = z0 + pl.dz;
            if (const auto* pkg = std::get_if<const PackageNode*>(&pl.node)) {
                LayoutBox box{(*pkg)->node_id, BoxKind::package, x, z, pl.sub->width,
                              pl.sub->depth, p_top, k.tile_thickness, parent_index};
                out.boxes.push_back(box);
                emit(*pl.sub, x, z, static_cast<int>(out.boxes.size() - 1), level + 1);
            } else {
                const auto* cls = std::get<const ClassNode*>(pl.node);
                const double f = k.class_footprint;
                LayoutBox box{cls->class_id, BoxKind::class_box, x, z, f, f, p_top,
                              heights.at(cls->class_id), parent_index};
                out.boxes.push_back(box);
                out.anchors.push_back({cls->class_id, x + f / 2, z + f / 2});
            }
        }
    }
};

void collect_class_ids(const PackageNode& node, std::vector<std::string>& ids) {
    for (const auto& [_, cls] : node.classes) ids.push_back(cls.class_id);
    for (const auto& [_, child] : node.packages) collect_class_ids(child, ids);
}

}  // namespace

std::string_view to_string(BoxKind kind) {
    switch (kind) {
        case BoxKind::foundation: return "foundation";
        case BoxKind::package: return "package";
        case BoxKind::class_box: return "class";
    }
    return "class";
}

std::string_view to_string(Thickness t) {
    switch (t) {
        case Thickness::small: return "small";
        case Thickness::medium: return "medium";
        case Thickness::large: return "large";
    }
    return "small";
}

CityLayout layout(const Landscape& landscape, const MetricScores& instance_counts,
                  const LayoutConstants& constants) {
    std::vector<std::string> ids;
    for (const auto& [_, app] : landscape.applications()) collect_class_ids(app.root, ids);

    double cmin = 0.0;
    double cmax = 0.0;
    bool first = true;
    for (const auto& id : ids) {
        const double c = instance_counts.at(id);
        cmin = first ? c : std::min(cmin, c);
        cmax = first ? c : std::max(cmax, c);
        first = false;
    }

    Emitter em{constants, {}, {}};
    const double span = constants.max_height - constants.min_height;
    for (const auto& id : ids) {
        double h = constants.min_height;
        if (cmax > cmin) h += span * (instance_counts.at(id) - cmin) / (cmax - cmin);
        em.heights.emplace(id, h);
    }

    double x = 0.0;
    for (const auto& [_, app] : landscape.applications()) {
        auto measured = measure(app.root, constants);
        em.out.boxes.push_back(LayoutBox{app.node_id(), BoxKind::foundation, x, 0.0, measured.width,
                                         measured.depth, 0.0, constants.tile_thickness, -1});
        em.emit(measured, x, 0.0, static_cast<int>(em.out.boxes.size() - 1), 0);
        x += measured.width + constants.class_footprint;
    }
    return std::move(em.out);
}

std::vector<CommunicationEdge> aggregate_edges(std::span<const CallEvent> events) {
    std::map<std::pair<std::string_view, std::string_view>, std::uint64_t> counts;
    for (const auto& e : events) {
        if (e.caller_class_id) ++counts[{*e.caller_class_id, e.callee_class_id}];
    }
    std::vector<CommunicationEdge> edges;
    edges.reserve(counts.size());
    std::vector<std::uint64_t> sorted;
    for (const auto& [pair, n] : counts) {
        edges.push_back({std::string(pair.first), std::string(pair.second), n, Thickness::small});
        sorted.push_back(n);
    }
    if (edges.empty()) return edges;

    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto lower = sorted[(n + 2) / 3 - 1];
    const auto upper = sorted[(2 * n + 2) / 3 - 1];
    for (auto& e : edges) {
        e.thickness = e.call_count <= lower   ? Thickness::small
                      : e.call_count <= upper ? Thickness::medium
                                              : Thickness::large;
    }
    return edges;
}

}  // namespace citypulse
