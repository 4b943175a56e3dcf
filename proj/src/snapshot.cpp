#include "citypulse/snapshot.hpp"

namespace citypulse {

using nlohmann::json;

namespace {

json package_json(const PackageNode& node) {
    json packages = json::array();
    for (const auto& [_, child] : node.packages) packages.push_back(package_json(child));
    json classes = json::array();
    for (const auto& [_, cls] : node.classes) {
        classes.push_back({{"classId", cls.class_id},
                           {"name", cls.name},
                           {"operations", json(cls.operations)}});
    }
    return {{"nodeId", node.node_id}, {"name", node.name}, {"packages", std::move(packages)},
            {"classes", std::move(classes)}};
}

json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

}  // namespace

json to_json(const Landscape& landscape) {
    json apps = json::array();
    for (const auto& [_, app] : landscape.applications()) {
        apps.push_back({{"hostname", app.hostname},
                        {"appName", app.app_name},
                        {"nodeId", app.node_id()},
                        {"root", package_json(app.root)}});
    }
    return {{"applications", std::move(apps)},
            {"classCount", landscape.class_count()},
            {"packageCount", landscape.package_count()}};
}

json to_json(const CityLayout& layout) {
    json boxes = json::array();
    for (const auto& b : layout.boxes) {
        boxes.push_back({{"nodeId", b.node_id},
                         {"kind", to_string(b.kind)},
                         {"x", b.x},
                         {"z", b.z},
                         {"width", b.width},
                         {"depth", b.depth},
                         {"yBase", b.y_base},
                         {"height", b.height},
                         {"parentId", b.parent < 0 ? json(nullptr)
                                                   : json(layout.boxes[b.parent].node_id)}});
    }
    json anchors = json::array();
    for (const auto& a : layout.anchors) {
        anchors.push_back({{"classId", a.class_id}, {"x", a.x}, {"z", a.z}});
    }
    return {{"boxes", std::move(boxes)}, {"anchors", std::move(anchors)}};
}

json to_json(const CommunicationEdge& edge) {
    return {{"callerClassId", edge.caller_class_id},
            {"calleeClassId", edge.callee_class_id},
            {"callCount", edge.call_count},
            {"thicknessClass", to_string(edge.thickness)}};
}

json to_json(const Snapshot& s) {
    json apps = json::array();
    json edges = json::array();
    json scores = json::object();
    if (s.structure) {
        for (const auto& [key, app] : s.structure->applications()) {
            apps.push_back({{"hostname", key.first}, {"appName", key.second}, {"nodeId", app.node_id()}});
        }
    }
    for (const auto& e : s.edges) edges.push_back(to_json(e));
    for (const auto& [id, ms] : s.metric_scores) scores[id] = json(ms.values);

    const auto& st = s.stats;
    return {
        {"tickIndex", s.tick_index},
        {"window", {{"startNanos", s.window.begin}, {"endNanos", s.window.end}}},
        {"applications", std::move(apps)},
        {"structure", s.structure ? to_json(*s.structure) : to_json(Landscape{})},
        {"geometry", to_json(s.geometry)},
        {"edges", std::move(edges)},
        {"metricScores", std::move(scores)},
        {"metricFailures", json(s.metric_failures)},
        {"stats",
         {{"spans", st.spans},
          {"traces", st.traces},
          {"orphans", st.orphans},
          {"droppedRecords", st.dropped_records},
          {"invalidTraces", st.invalid_traces},
          {"duplicateSpans", st.duplicate_spans},
          {"lateSpans", st.late_spans},
          {"carriedSpans", st.carried_spans},
          {"newStructures", st.new_structures},
          {"receivedRecords", st.received_records},
          {"rejectedRecords", st.rejected_records}}},
    };
}

json to_json(const HeatmapView& view) {
    json stops = json::array();
    for (const auto& c : view.gradient) stops.push_back(rgb_json(c));
    return {{"metricId", view.metric_id},
            {"mode", to_string(view.mode)},
            {"tickIndex", view.tick_index},
            {"values", json(view.values)},
            {"legendMin", view.legend_min},
            {"legendMax", view.legend_max},
            {"gradientStops", std::move(stops)}};
}

json to_json(const MetricDescriptor& d) {
    return {{"metricId", d.metric_id},
            {"displayName", d.display_name},
            {"description", d.description},
            {"valueKind", d.value_kind == ValueKind::count ? "count" : "score"}};
}

}  // namespace citypulse
