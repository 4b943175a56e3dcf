#pragma once

/// @file engine.hpp
/// @brief Ingestion front door, tick driver and snapshot publication.
///
/// Threading: `ingest*` may be called from any number of connection threads.
/// `tick` must only be called from one driver thread at a time. Readers
/// (`latest`, `heatmap`, subscriptions) only ever see fully built, immutable
/// PublishedSnapshot objects.

#include "citypulse/config.hpp"
#include "citypulse/heatmap.hpp"
#include "citypulse/metrics.hpp"
#include "citypulse/snapshot.hpp"
#include "citypulse/trace.hpp"
#include "citypulse/wire.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace citypulse {

/// Lookup failed: nothing published yet, or the requested tick was evicted.
class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed request, e.g. an unknown metric id or heat-map mode.
class BadRequest : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using SnapshotPtr = std::shared_ptr<const PublishedSnapshot>;

/// Bounded per-subscriber queue fed by SnapshotBus.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Waits up to `timeout` for the next snapshot. Returns nullptr on
    /// timeout or once the subscription is closed and drained.
    SnapshotPtr next(std::chrono::milliseconds timeout);
    bool closed() const;
    void close();

private:
    friend class SnapshotBus;
    /// False if the queue was full; the subscription is then closed.
    bool offer(SnapshotPtr snapshot);

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<SnapshotPtr> queue_;
    std::size_t capacity_;
    bool closed_ = false;
};

/// Fan-out of published snapshots. A subscriber that falls `capacity`
/// snapshots behind is disconnected; publishing never blocks on readers.
class SnapshotBus {
public:
    explicit SnapshotBus(std::size_t capacity = 64) : capacity_(capacity) {}
    ~SnapshotBus();

    std::shared_ptr<Subscription> subscribe();
    void publish(const SnapshotPtr& snapshot);
    std::size_t subscriber_count() const;
    std::uint64_t disconnected() const { return disconnected_.load(); }

private:
    mutable std::mutex mutex_;
    std::vector<std::shared_ptr<Subscription>> subscribers_;
    std::size_t capacity_;
    std::atomic<std::uint64_t> disconnected_{0};
};

struct IngestReport {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    /// First few rejection messages, for diagnostics.
    std::vector<std::string> errors;
};

class Engine {
public:
    /// Tick k covers [origin + k*tick, origin + (k+1)*tick).
    Engine(EngineConfig config, std::uint64_t origin_nanos);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const EngineConfig& config() const { return config_; }
    MetricRegistry& registry() { return registry_; }
    const MetricRegistry& registry() const { return registry_; }
    SnapshotBus& bus() { return bus_; }

    /// Accepts a newline-delimited batch. Blank lines are skipped; each bad
    /// line is rejected individually.
    IngestReport ingest_ndjson(std::string_view body);
    /// Throws ParseError or HashCollision for a bad record.
    void ingest(MonitoringRecord record);

    std::uint64_t received_records() const { return received_.load(); }
    std::uint64_t rejected_records() const { return rejected_.load(); }
    std::size_t registered_structures() const { return structures_.size(); }

    /// Closes the current window and publishes its snapshot.
    SnapshotPtr tick();

    Window window_for(std::uint64_t tick_index) const;
    std::uint64_t next_tick_index() const { return next_tick_.load(); }
    std::uint64_t tick_nanos() const { return tick_nanos_; }
    std::uint64_t origin_nanos() const { return origin_nanos_; }

    /// Throws NotFound before the first tick.
    SnapshotPtr latest() const;
    /// Retained snapshots only (the last window_size + 1). Throws NotFound.
    SnapshotPtr at_tick(std::uint64_t tick_index) const;
    /// Throws BadRequest for unknown metric or mode, NotFound before the
    /// first tick.
    HeatmapView heatmap(const std::string& metric_id, std::string_view mode) const;

private:
    struct Resolved {
        std::string class_id;
        std::string operation_name;
        bool is_constructor = false;
    };

    struct Inbox {
        std::vector<OperationIdentity> identities;
        std::vector<StructuralRecord> structures;
        std::vector<DynamicRecord> spans;
    };

    void accept(MonitoringRecord record, Inbox& batch);
    void merge(Inbox&& batch);

    EngineConfig config_;
    std::uint64_t origin_nanos_;
    std::uint64_t tick_nanos_;
    MetricRegistry registry_;
    SnapshotBus bus_;
    StructureRegistry structures_;

    std::mutex inbox_mutex_;
    Inbox inbox_;
    std::atomic<std::uint64_t> received_{0};
    std::atomic<std::uint64_t> rejected_{0};

    // Owned by the tick driver.
    std::mutex tick_mutex_;
    std::shared_ptr<const Landscape> landscape_;
    std::unordered_map<std::string, Resolved> resolved_;
    std::vector<DynamicRecord> unresolved_;
    TraceAssembler assembler_;
    std::map<std::string, ScoreHistory> histories_;
    std::atomic<std::uint64_t> next_tick_{0};

    mutable std::mutex publish_mutex_;
    std::deque<SnapshotPtr> retained_;
};

/// Calls Engine::tick on wall-clock aligned deadlines in a background thread.
class TickScheduler {
public:
    explicit TickScheduler(Engine& engine);
    ~TickScheduler();

    void start();
    void stop();

    /// Ticks whose work finished after the following deadline.
    std::uint64_t overruns() const { return overruns_.load(); }
    std::uint64_t ticks() const { return ticks_.load(); }
    /// Longest tick processing time so far.
    std::chrono::nanoseconds max_tick_duration() const {
        return std::chrono::nanoseconds(max_tick_nanos_.load());
    }

private:
    void run();

    Engine& engine_;
    std::thread thread_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::atomic<std::uint64_t> overruns_{0};
    std::atomic<std::uint64_t> ticks_{0};
    std::atomic<std::int64_t> max_tick_nanos_{0};
};

std::uint64_t now_nanos();

}  // namespace citypulse
