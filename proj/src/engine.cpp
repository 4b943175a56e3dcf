#include "citypulse/engine.hpp"

#include "citypulse/layout.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace citypulse {

std::uint64_t now_nanos() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                          std::chrono::system_clock::now().time_since_epoch())
                                          .count());
}

// ---------------------------------------------------------------------------
// Subscription / SnapshotBus

SnapshotPtr Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [this] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return nullptr;
    auto front = std::move(queue_.front());
    queue_.pop_front();
    return front;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool Subscription::offer(SnapshotPtr snapshot) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return false;
        if (queue_.size() >= capacity_) {
            closed_ = true;
        } else {
            queue_.push_back(std::move(snapshot));
        }
    }
    cv_.notify_all();
    return !closed();
}

SnapshotBus::~SnapshotBus() {
    std::lock_guard lock(mutex_);
    for (auto& s : subscribers_) s->close();
}

std::shared_ptr<Subscription> SnapshotBus::subscribe() {
    auto sub = std::make_shared<Subscription>(capacity_);
    std::lock_guard lock(mutex_);
    subscribers_.push_back(sub);
    return sub;
}

void SnapshotBus::publish(const SnapshotPtr& snapshot) {
    std::lock_guard lock(mutex_);
    std::erase_if(subscribers_, [&](const std::shared_ptr<Subscription>& sub) {
        if (sub->closed()) return true;
        if (!sub->offer(snapshot)) {
            ++disconnected_;
            spdlog::warn("stream subscriber fell behind; disconnecting");
            return true;
        }
        return false;
    });
}

std::size_t SnapshotBus::subscriber_count() const {
    std::lock_guard lock(mutex_);
    return subscribers_.size();
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(EngineConfig config, std::uint64_t origin_nanos)
    : config_(std::move(config)),
      origin_nanos_(origin_nanos),
      tick_nanos_(static_cast<std::uint64_t>(std::llround(config_.tick_seconds * 1e9))),
      landscape_(std::make_shared<Landscape>()) {
    config_.validate();
    if (tick_nanos_ == 0) throw ConfigError("tick-seconds", "interval rounds to zero nanoseconds");
}

Engine::~Engine() = default;

Window Engine::window_for(std::uint64_t tick_index) const {
    return {origin_nanos_ + tick_index * tick_nanos_, origin_nanos_ + (tick_index + 1) * tick_nanos_};
}

void Engine::accept(MonitoringRecord record, Inbox& batch) {
    if (auto* s = std::get_if<StructuralRecord>(&record)) {
        auto identity = parse_fqn(s->fqn, config_.constructor_names);
        if (structures_.insert(*s)) {
            batch.identities.push_back(std::move(identity));
            batch.structures.push_back(std::move(*s));
        }
    } else {
        batch.spans.push_back(std::move(std::get<DynamicRecord>(record)));
    }
}

void Engine::merge(Inbox&& batch) {
    std::lock_guard lock(inbox_mutex_);
    auto append = [](auto& into, auto& from) {
        if (into.empty()) {
            into = std::move(from);
        } else {
            into.insert(into.end(), std::make_move_iterator(from.begin()),
                        std::make_move_iterator(from.end()));
        }
    };
    append(inbox_.identities, batch.identities);
    append(inbox_.structures, batch.structures);
    append(inbox_.spans, batch.spans);
}

void Engine::ingest(MonitoringRecord record) {
    ++received_;
    Inbox batch;
    try {
        accept(std::move(record), batch);
    } catch (...) {
        ++rejected_;
        throw;
    }
    merge(std::move(batch));
}

IngestReport Engine::ingest_ndjson(std::string_view body) {
    IngestReport report;
    Inbox batch;
    std::size_t lineno = 0;
    while (!body.empty()) {
        auto nl = body.find('\n');
        auto line = body.substr(0, nl);
        body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            accept(parse_record(line), batch);
            ++report.accepted;
        } catch (const std::exception& ex) {
            ++report.rejected;
            if (report.errors.size() < 8) {
                report.errors.push_back("line " + std::to_string(lineno) + ": " + ex.what());
            }
        }
    }
    received_ += report.accepted + report.rejected;
    rejected_ += report.rejected;
    for (const auto& e : report.errors) spdlog::debug("rejected record: {}", e);
    merge(std::move(batch));
    return report;
}

SnapshotPtr Engine::tick() {
    std::lock_guard tick_lock(tick_mutex_);
    const auto tick_index = next_tick_.load();
    const auto window = window_for(tick_index);

    Inbox batch;
    {
        std::lock_guard lock(inbox_mutex_);
        std::swap(batch, inbox_);
    }

    SnapshotStats stats;

    if (!batch.structures.empty()) {
        auto next = std::make_shared<Landscape>(*landscape_);
        for (std::size_t i = 0; i < batch.structures.size(); ++i) {
            const auto& rec = batch.structures[i];
            const auto& id = batch.identities[i];
            auto class_id = next->insert(id, rec.hostname, rec.app_name);
            resolved_.insert_or_assign(rec.structure_hash,
                                       Resolved{std::move(class_id), id.operation_name, id.is_constructor});
        }
        landscape_ = std::move(next);
        stats.new_structures = batch.structures.size();
    }

    // Spans whose structure is still unknown wait one tick, then are dropped.
    std::vector<Span> spans;
    spans.reserve(batch.spans.size() + unresolved_.size());
    auto to_span = [&](DynamicRecord&& r, const Resolved& res) {
        spans.push_back(Span{std::move(r.span_id), std::move(r.parent_span_id), std::move(r.trace_id),
                             res.class_id, res.operation_name, res.is_constructor, r.start_nanos,
                             r.end_nanos});
    };
    for (auto& r : std::exchange(unresolved_, {})) {
        if (auto it = resolved_.find(r.structure_hash); it != resolved_.end()) {
            to_span(std::move(r), it->second);
        } else {
            ++stats.dropped_records;
        }
    }
    for (auto& r : batch.spans) {
        if (auto it = resolved_.find(r.structure_hash); it != resolved_.end()) {
            to_span(std::move(r), it->second);
        } else {
            unresolved_.push_back(std::move(r));
        }
    }
    if (stats.dropped_records > 0) {
        spdlog::warn("tick {}: dropped {} spans with unknown structure", tick_index,
                     stats.dropped_records);
    }

    assembler_.add(std::move(spans));
    auto drained = assembler_.drain(window);
    const auto& traces = drained.result.traces;
    auto events = derive_call_events(traces);

    stats.traces = traces.size();
    stats.spans = events.size();
    stats.orphans = drained.orphans;
    stats.invalid_traces = drained.result.invalid_traces;
    stats.duplicate_spans = drained.result.duplicate_spans;
    stats.late_spans = drained.result.late_spans;
    stats.carried_spans = assembler_.pending() + unresolved_.size();
    stats.received_records = received_.load();
    stats.rejected_records = rejected_.load();
    if (stats.invalid_traces > 0) {
        spdlog::warn("tick {}: excluded {} traces with cyclic parent links", tick_index,
                     stats.invalid_traces);
    }

    MetricContext ctx{window, events, *landscape_};
    auto outcome = registry_.compute_all(ctx);

    // Every registered metric advances exactly once per tick; a metric that
    // failed this tick contributes an empty window.
    for (const auto& d : registry_.descriptors()) {
        auto [it, _] = histories_.try_emplace(d.metric_id, d.metric_id, config_.window_size,
                                              config_.decay);
        if (auto sc = outcome.scores.find(d.metric_id); sc != outcome.scores.end()) {
            it->second.advance(sc->second);
        } else {
            it->second.advance(MetricScores{d.metric_id, window, {}});
        }
    }

    Snapshot snap;
    snap.tick_index = tick_index;
    snap.window = window;
    snap.structure = landscape_;
    if (auto ic = outcome.scores.find(metric_ids::instance_count); ic != outcome.scores.end()) {
        snap.geometry = layout(*landscape_, ic->second, config_.layout);
    } else {
        snap.geometry = layout(*landscape_, MetricScores{}, config_.layout);
    }
    snap.edges = aggregate_edges(events);
    snap.metric_scores = std::move(outcome.scores);
    snap.metric_failures = std::move(outcome.failures);
    snap.stats = stats;

    auto published = std::make_shared<PublishedSnapshot>();
    published->json = to_json(snap).dump();
    published->snapshot = std::move(snap);
    for (const auto& [id, history] : histories_) {
        published->histories.emplace(id, std::make_shared<const ScoreHistory>(history));
    }
    SnapshotPtr result = std::move(published);

    {
        std::lock_guard lock(publish_mutex_);
        retained_.push_back(result);
        while (retained_.size() > config_.window_size + 1) retained_.pop_front();
        next_tick_.store(tick_index + 1);
    }
    bus_.publish(result);
    spdlog::debug("tick {} published: {} spans, {} traces", tick_index, stats.spans, stats.traces);
    return result;
}

SnapshotPtr Engine::latest() const {
    std::lock_guard lock(publish_mutex_);
    if (retained_.empty()) throw NotFound("no snapshot published yet");
    return retained_.back();
}

SnapshotPtr Engine::at_tick(std::uint64_t tick_index) const {
    std::lock_guard lock(publish_mutex_);
    for (const auto& s : retained_) {
        if (s->snapshot.tick_index == tick_index) return s;
    }
    throw NotFound("snapshot " + std::to_string(tick_index) + " is not retained");
}

HeatmapView Engine::heatmap(const std::string& metric_id, std::string_view mode_text) const {
    auto mode = parse_mode(mode_text);
    if (!mode) throw BadRequest("unknown heat map mode '" + std::string(mode_text) + "'");
    if (!registry_.contains(metric_id)) throw BadRequest("unknown metric '" + metric_id + "'");
    auto snap = latest();
    if (auto it = snap->histories.find(metric_id); it != snap->histories.end()) {
        return make_view(*it->second, *mode, snap->snapshot.tick_index, config_.gradient);
    }
    // Registered after the latest tick: nothing recorded yet.
    HeatmapView view;
    view.metric_id = metric_id;
    view.mode = *mode;
    view.tick_index = snap->snapshot.tick_index;
    view.gradient = config_.gradient;
    return view;
}

// ---------------------------------------------------------------------------
// TickScheduler

TickScheduler::TickScheduler(Engine& engine) : engine_(engine) {}

TickScheduler::~TickScheduler() { stop(); }

void TickScheduler::start() {
    std::lock_guard lock(mutex_);
    if (thread_.joinable()) return;
    stopping_ = false;
    thread_ = std::thread([this] { run(); });
}

void TickScheduler::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

void TickScheduler::run() {
    using namespace std::chrono;
    while (true) {
        const auto k = engine_.next_tick_index();
        const auto deadline = engine_.window_for(k).end;
        const auto wake = system_clock::time_point(
            duration_cast<system_clock::duration>(nanoseconds(deadline)));
        {
            std::unique_lock lock(mutex_);
            if (cv_.wait_until(lock, wake, [this] { return stopping_; })) return;
        }
        const auto started = steady_clock::now();
        try {
            engine_.tick();
        } catch (const std::exception& ex) {
            spdlog::error("tick {} failed: {}", k, ex.what());
        }
        const auto took = duration_cast<nanoseconds>(steady_clock::now() - started).count();
        auto prev = max_tick_nanos_.load();
        while (took > prev && !max_tick_nanos_.compare_exchange_weak(prev, took)) {
        }
        ++ticks_;
        if (now_nanos() > deadline + engine_.tick_nanos()) {
            ++overruns_;
            spdlog::warn("tick {} overran its interval", k);
        }
    }
}

}  // namespace citypulse
