#pragma once

/// @file snapshot.hpp
/// @brief Per-tick snapshot and its JSON representation.

#include "citypulse/heatmap.hpp"
#include "citypulse/layout.hpp"
#include "citypulse/metrics.hpp"
#include "citypulse/structure.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace citypulse {

struct SnapshotStats {
    std::uint64_t spans = 0;
    std::uint64_t traces = 0;
    /// Spans promoted to roots after waiting one tick for a parent.
    std::uint64_t orphans = 0;
    /// Spans whose structure never arrived within the grace tick.
    std::uint64_t dropped_records = 0;
    std::uint64_t invalid_traces = 0;
    std::uint64_t duplicate_spans = 0;
    std::uint64_t late_spans = 0;
    /// Spans carried into the next tick (awaiting a parent or structure).
    std::uint64_t carried_spans = 0;
    std::uint64_t new_structures = 0;
    /// Lifetime totals from the ingest side.
    std::uint64_t received_records = 0;
    std::uint64_t rejected_records = 0;

    friend bool operator==(const SnapshotStats&, const SnapshotStats&) = default;
};

struct Snapshot {
    std::uint64_t tick_index = 0;
    Window window;
    std::shared_ptr<const Landscape> structure;
    CityLayout geometry;
    std::vector<CommunicationEdge> edges;
    std::map<std::string, MetricScores> metric_scores;
    std::map<std::string, std::string> metric_failures;
    SnapshotStats stats;
};

/// A snapshot as handed to readers: immutable, pre-serialized, and carrying
/// the score histories as they were right after this tick.
struct PublishedSnapshot {
    Snapshot snapshot;
    std::string json;
    std::map<std::string, std::shared_ptr<const ScoreHistory>> histories;
};

nlohmann::json to_json(const Landscape& landscape);
nlohmann::json to_json(const CityLayout& layout);
nlohmann::json to_json(const CommunicationEdge& edge);
nlohmann::json to_json(const Snapshot& snapshot);
nlohmann::json to_json(const HeatmapView& view);
nlohmann::json to_json(const MetricDescriptor& descriptor);

}  // namespace citypulse
