#pragma once

/// @file layout.hpp
/// @brief Software-city geometry: foundations, package tiles, class boxes.
///
/// Coordinates: x and z span the ground plane, y points up. A box's (x, z) is
/// its minimum corner. Applications are laid out side by side along x, each
/// on its own foundation.
///
/// Packing is a recursive shelf packer. The children of a node (subpackages
/// and classes, ordered by name) are placed left to right in rows no wider
/// than max(widest child, sqrt(total padded area)); a node's footprint is the
/// bounding box of its rows plus padding on every side.

#include "citypulse/config.hpp"
#include "citypulse/metrics.hpp"
#include "citypulse/structure.hpp"
#include "citypulse/trace.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace citypulse {

enum class BoxKind { foundation, package, class_box };

std::string_view to_string(BoxKind kind);

struct LayoutBox {
    std::string node_id;
    BoxKind kind = BoxKind::class_box;
    double x = 0.0;
    double z = 0.0;
    double width = 0.0;
    double depth = 0.0;
    double y_base = 0.0;
    double height = 0.0;
    /// Index of the enclosing box in the layout's box list; -1 for foundations.
    int parent = -1;

    friend bool operator==(const LayoutBox&, const LayoutBox&) = default;
};

struct HeatSpotAnchor {
    std::string class_id;
    double x = 0.0;
    double z = 0.0;

    friend bool operator==(const HeatSpotAnchor&, const HeatSpotAnchor&) = default;
};

struct CityLayout {
    /// Pre-order: every parent precedes its children.
    std::vector<LayoutBox> boxes;
    std::vector<HeatSpotAnchor> anchors;

    friend bool operator==(const CityLayout&, const CityLayout&) = default;
};

/// Class heights are normalized min-max over the current instance counts of
/// all classes in the landscape (absent counts read as 0).
CityLayout layout(const Landscape& landscape, const MetricScores& instance_counts,
                  const LayoutConstants& constants = {});

enum class Thickness { small, medium, large };

std::string_view to_string(Thickness t);

struct CommunicationEdge {
    std::string caller_class_id;
    std::string callee_class_id;
    std::uint64_t call_count = 0;
    Thickness thickness = Thickness::small;

    friend bool operator==(const CommunicationEdge&, const CommunicationEdge&) = default;
};

/// One edge per ordered (caller, callee) pair; root events produce none.
/// Thickness by terciles of call_count: with counts sorted ascending as c,
/// an edge is small if count <= c[ceil(n/3)-1], medium if
/// count <= c[ceil(2n/3)-1], large otherwise. Sorted by (caller, callee).
std::vector<CommunicationEdge> aggregate_edges(std::span<const CallEvent> events);

}  // namespace citypulse
