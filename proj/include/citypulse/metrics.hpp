#pragma once

/// @file metrics.hpp
/// @brief Class-level dynamic coupling metrics and the metric registry.
///
/// Built-in metrics, all computed over one window's call events:
///
/// - instance_count: constructor calls received by a class.
/// - ic_cd: calls initiated by a class (import coupling). Root events have
///   no observed caller and count toward no class.
/// - ec_cd: calls received by a class (export coupling), root events included.
/// - iec_cd: ic_cd + ec_cd.
///
/// Self-calls count toward both the import and export side of the class.

#include "citypulse/structure.hpp"
#include "citypulse/trace.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace citypulse {

enum class ValueKind { count, score };

struct MetricDescriptor {
    std::string metric_id;
    std::string display_name;
    std::string description;
    ValueKind value_kind = ValueKind::count;
};

using ClassValues = std::map<std::string, double>;

struct MetricScores {
    std::string metric_id;
    Window window;
    /// Classes without activity may be absent; absent reads as 0.
    ClassValues values;

    double at(const std::string& class_id) const {
        auto it = values.find(class_id);
        return it == values.end() ? 0.0 : it->second;
    }
};

struct MetricContext {
    Window window;
    std::span<const CallEvent> events;
    const Landscape& landscape;
};

struct MetricPlugin {
    MetricDescriptor descriptor;
    std::function<MetricScores(const MetricContext&)> compute;
};

MetricScores instance_count(std::span<const CallEvent> events);
MetricScores ic_cd(std::span<const CallEvent> events);
MetricScores ec_cd(std::span<const CallEvent> events);
MetricScores iec_cd(std::span<const CallEvent> events);

namespace metric_ids {
inline constexpr const char* instance_count = "instance_count";
inline constexpr const char* ic_cd = "ic_cd";
inline constexpr const char* ec_cd = "ec_cd";
inline constexpr const char* iec_cd = "iec_cd";
}  // namespace metric_ids

class DuplicateMetric : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MetricRegistry {
public:
    /// Starts with the four built-in metrics registered.
    MetricRegistry();

    /// Throws DuplicateMetric if the id is taken, std::invalid_argument if the
    /// descriptor has an empty id or the plugin has no compute function.
    void register_plugin(MetricPlugin plugin);

    bool contains(const std::string& metric_id) const;
    std::vector<MetricDescriptor> descriptors() const;

    struct Outcome {
        std::map<std::string, MetricScores> scores;
        /// metric_id -> error message for plugins that threw or misbehaved.
        std::map<std::string, std::string> failures;
    };

    /// Runs every registered metric. A failing plugin is reported in
    /// `failures` and omitted from `scores`; the others are unaffected.
    Outcome compute_all(const MetricContext& ctx) const;

private:
    mutable std::shared_mutex mutex_;
    std::vector<MetricPlugin> plugins_;
};

}  // namespace citypulse
