#pragma once

/// @file heatmap.hpp
/// @brief Temporal heat-map modes, score history and legend color mapping.
///
/// Three modes are derived from the same per-metric history:
///
/// - snapshot:   the current window's raw scores.
/// - aggregated: s_t = m_t + decay * s_{t-1}, with s = m on first sight and
///               m_t = 0 for classes absent from the current window.
/// - windowed:   m_latest - m_past, where m_past is the window W ticks back
///               (or the oldest retained window while fewer exist).

#include "citypulse/config.hpp"
#include "citypulse/metrics.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace citypulse {

enum class HeatmapMode { snapshot, aggregated, windowed };

inline constexpr HeatmapMode all_modes[] = {HeatmapMode::snapshot, HeatmapMode::aggregated,
                                            HeatmapMode::windowed};

/// Cyclic successor: snapshot -> aggregated -> windowed -> snapshot.
HeatmapMode next_mode(HeatmapMode mode);
HeatmapMode previous_mode(HeatmapMode mode);
std::string_view to_string(HeatmapMode mode);
std::optional<HeatmapMode> parse_mode(std::string_view text);

ClassValues snapshot_mode(const MetricScores& current);

ClassValues aggregate_step(const ClassValues& previous, const MetricScores& current,
                           double decay = 0.5);

class ScoreHistory {
public:
    ScoreHistory(std::string metric_id, std::size_t window_size, double decay = 0.5);

    /// Pushes one window's scores and folds them into the running aggregate.
    void advance(MetricScores current);

    const std::string& metric_id() const { return metric_id_; }
    std::size_t window_size() const { return window_size_; }
    /// Oldest first; at most window_size + 1 entries.
    const std::deque<MetricScores>& ring() const { return ring_; }
    const ClassValues& aggregate() const { return aggregate_; }
    std::uint64_t ticks() const { return ticks_; }
    bool empty() const { return ring_.empty(); }

private:
    std::string metric_id_;
    std::size_t window_size_;
    double decay_;
    std::deque<MetricScores> ring_;
    ClassValues aggregate_;
    std::uint64_t ticks_ = 0;
};

ClassValues windowed_mode(const ScoreHistory& history);

ClassValues mode_values(const ScoreHistory& history, HeatmapMode mode);

/// (min, max) over the values; (0, 0) when empty.
std::pair<double, double> legend_range(const ClassValues& values);

/// Linear normalization onto a piecewise-linear gradient. A degenerate range
/// (min == max) maps to the gradient's midpoint. Throws std::domain_error for
/// non-finite input.
Rgb value_to_color(double value, double min, double max, std::span<const Rgb> gradient);
Rgb value_to_color(double value, double min, double max);

struct HeatmapView {
    std::string metric_id;
    HeatmapMode mode = HeatmapMode::snapshot;
    std::uint64_t tick_index = 0;
    ClassValues values;
    double legend_min = 0.0;
    double legend_max = 0.0;
    std::vector<Rgb> gradient;
};

HeatmapView make_view(const ScoreHistory& history, HeatmapMode mode, std::uint64_t tick_index,
                      std::vector<Rgb> gradient);

}  // namespace citypulse
