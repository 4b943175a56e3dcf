#include "citypulse/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace citypulse {

namespace {

// Counting in an unordered map first keeps the hot path cheap for large
// windows; the ordered result map is built once per class.
template <typename Pred, typename Key>
MetricScores count_by(const char* id, std::span<const CallEvent> events, Pred pred, Key key) {
    std::unordered_map<std::string_view, std::uint64_t> counts;
    for (const auto& e : events) {
        if (pred(e)) ++counts[key(e)];
    }
    MetricScores out;
    out.metric_id = id;
    for (const auto& [cls, n] : counts) out.values.emplace(std::string(cls), static_cast<double>(n));
    return out;
}

MetricPlugin builtin(const char* id, const char* name, const char* description,
                     MetricScores (*fn)(std::span<const CallEvent>)) {
    return MetricPlugin{
        .descriptor = {id, name, description, ValueKind::count},
        .compute = [fn](const MetricContext& ctx) {
            auto scores = fn(ctx.events);
            scores.window = ctx.window;
            return scores;
        },
    };
}

}  // namespace

MetricScores instance_count(std::span<const CallEvent> events) {
    return count_by(
        metric_ids::instance_count, events, [](const CallEvent& e) { return e.is_constructor_call; },
        [](const CallEvent& e) -> std::string_view { return e.callee_class_id; });
}

MetricScores ic_cd(std::span<const CallEvent> events) {
    return count_by(
        metric_ids::ic_cd, events, [](const CallEvent& e) { return e.caller_class_id.has_value(); },
        [](const CallEvent& e) -> std::string_view { return *e.caller_class_id; });
}

MetricScores ec_cd(std::span<const CallEvent> events) {
    return count_by(
        metric_ids::ec_cd, events, [](const CallEvent&) { return true; },
        [](const CallEvent& e) -> std::string_view { return e.callee_class_id; });
}

MetricScores iec_cd(std::span<const CallEvent> events) {
    auto out = ic_cd(events);
    out.metric_id = metric_ids::iec_cd;
    for (const auto& [cls, n] : ec_cd(events).values) out.values[cls] += n;
    return out;
}

MetricRegistry::MetricRegistry() {
    plugins_.push_back(builtin(metric_ids::instance_count, "Instance count",
                               "Number of objects created per class in the snapshot",
                               &instance_count));
    plugins_.push_back(builtin(metric_ids::ic_cd, "Import coupling (IC_CD)",
                               "Operation calls initiated by objects of the class",
                               &ic_cd));
    plugins_.push_back(builtin(metric_ids::ec_cd, "Export coupling (EC_CD)",
                               "Operation calls received by objects of the class",
                               &ec_cd));
    plugins_.push_back(builtin(metric_ids::iec_cd, "Import & export coupling",
                               "Operation calls sent and received by objects of the class",
                               &iec_cd));
}

void MetricRegistry::register_plugin(MetricPlugin plugin) {
    if (plugin.descriptor.metric_id.empty()) {
        throw std::invalid_argument("metric id must not be empty");
    }
    if (!plugin.compute) throw std::invalid_argument("metric plugin has no compute function");
    std::unique_lock lock(mutex_);
    for (const auto& p : plugins_) {
        if (p.descriptor.metric_id == plugin.descriptor.metric_id) {
            throw DuplicateMetric("metric '" + plugin.descriptor.metric_id + "' already registered");
        }
    }
    plugins_.push_back(std::move(plugin));
}

bool MetricRegistry::contains(const std::string& metric_id) const {
    std::shared_lock lock(mutex_);
    return std::any_of(plugins_.begin(), plugins_.end(),
                       [&](const auto& p) { return p.descriptor.metric_id == metric_id; });
}

std::vector<MetricDescriptor> MetricRegistry::descriptors() const {
    std::shared_lock lock(mutex_);
    std::vector<MetricDescriptor> out;
    out.reserve(plugins_.size());
    for (const auto& p : plugins_) out.push_back(p.descriptor);
    return out;
}

MetricRegistry::Outcome MetricRegistry::compute_all(const MetricContext& ctx) const {
    std::shared_lock lock(mutex_);
    Outcome out;
    for (const auto& plugin : plugins_) {
        const auto& id = plugin.descriptor.metric_id;
        try {
            auto scores = plugin.compute(ctx);
            if (scores.metric_id != id) {
                throw std::runtime_error("returned metric id '" + scores.metric_id + "'");
            }
            for (const auto& [cls, v] : scores.values) {
                if (!std::isfinite(v)) throw std::runtime_error("non-finite value for " + cls);
            }
            scores.window = ctx.window;
            out.scores.emplace(id, std::move(scores));
        } catch (const std::exception& ex) {
            spdlog::error("metric '{}' failed this tick: {}", id, ex.what());
            out.failures.emplace(id, ex.what());
        } catch (...) {
            spdlog::error("metric '{}' failed this tick with an unknown exception", id);
            out.failures.emplace(id, "unknown exception");
        }
    }
    return out;
}

}  // namespace citypulse
