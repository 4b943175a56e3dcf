#include "citypulse/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace citypulse {

HeatmapMode next_mode(HeatmapMode mode) {
    switch (mode) {
        case HeatmapMode::snapshot: return HeatmapMode::aggregated;
        case HeatmapMode::aggregated: return HeatmapMode::windowed;
        case HeatmapMode::windowed: return HeatmapMode::snapshot;
    }
    return HeatmapMode::snapshot;
}

HeatmapMode previous_mode(HeatmapMode mode) { return next_mode(next_mode(mode)); }

std::string_view to_string(HeatmapMode mode) {
    switch (mode) {
        case HeatmapMode::snapshot: return "snapshot";
        case HeatmapMode::aggregated: return "aggregated";
        case HeatmapMode::windowed: return "windowed";
    }
    return "snapshot";
}

std::optional<HeatmapMode> parse_mode(std::string_view text) {
    for (auto mode : all_modes) {
        if (to_string(mode) == text) return mode;
    }
    return std::nullopt;
}

ClassValues snapshot_mode(const MetricScores& current) { return current.values; }

ClassValues aggregate_step(const ClassValues& previous, const MetricScores& current, double decay) {
    ClassValues next;
    for (const auto& [cls, s] : previous) next.emplace(cls, decay * s);
    for (const auto& [cls, m] : current.values) next[cls] += m;
    return next;
}

ScoreHistory::ScoreHistory(std::string metric_id, std::size_t window_size, double decay)
    : metric_id_(std::move(metric_id)), window_size_(window_size), decay_(decay) {
    if (window_size_ < 1) throw std::invalid_argument("window size must be >= 1");
}

void ScoreHistory::advance(MetricScores current) {
    aggregate_ = aggregate_step(aggregate_, current, decay_);
    ring_.push_back(std::move(current));
    while (ring_.size() > window_size_ + 1) ring_.pop_front();
    ++ticks_;
}

ClassValues windowed_mode(const ScoreHistory& history) {
    if (history.empty()) return {};
    const auto& latest = history.ring().back();
    const auto& past = history.ring().front();
    ClassValues out;
    for (const auto& [cls, m] : past.values) out.emplace(cls, -m);
    for (const auto& [cls, m] : latest.values) out[cls] += m;
    return out;
}

ClassValues mode_values(const ScoreHistory& history, HeatmapMode mode) {
    switch (mode) {
        case HeatmapMode::snapshot:
            return history.empty() ? ClassValues{} : snapshot_mode(history.ring().back());
        case HeatmapMode::aggregated: return history.aggregate();
        case HeatmapMode::windowed: return windowed_mode(history);
    }
    return {};
}

std::pair<double, double> legend_range(const ClassValues& values) {
    if (values.empty()) return {0.0, 0.0};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    return {lo->second, hi->second};
}

Rgb value_to_color(double value, double min, double max, std::span<const Rgb> gradient) {
    if (!std::isfinite(value)) throw std::domain_error("heat value must be finite");
    if (gradient.size() < 2) throw std::invalid_argument("gradient needs at least 2 stops");
    double u = 0.5;
    if (max > min) u = std::clamp((value - min) / (max - min), 0.0, 1.0);

    const auto segments = gradient.size() - 1;
    const double pos = u * static_cast<double>(segments);
    const auto i = std::min(static_cast<std::size_t>(pos), segments - 1);
    const double t = pos - static_cast<double>(i);
    const auto& a = gradient[i];
    const auto& b = gradient[i + 1];
    auto mix = [t](std::uint8_t x, std::uint8_t y) {
        return static_cast<std::uint8_t>(std::lround(x + (static_cast<double>(y) - x) * t));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

Rgb value_to_color(double value, double min, double max) {
    static const auto gradient = default_gradient();
    return value_to_color(value, min, max, gradient);
}

HeatmapView make_view(const ScoreHistory& history, HeatmapMode mode, std::uint64_t tick_index,
                      std::vector<Rgb> gradient) {
    HeatmapView view;
    view.metric_id = history.metric_id();
    view.mode = mode;
    view.tick_index = tick_index;
    view.values = mode_values(history, mode);
    std::tie(view.legend_min, view.legend_max) = legend_range(view.values);
    view.gradient = std::move(gradient);
    return view;
}

}  // namespace citypulse
