#pragma once

/// @file replay.hpp
/// @brief Recorded-script replay and synthetic workload generation.
///
/// Scripts are ordinary wire-format NDJSON whose span timestamps are relative
/// to the script start. At replay time every timestamp is mapped to
/// `base + t / speed`, so a script replayed at speed 10 both runs ten times
/// faster and lands in correspondingly shorter windows.

#include "citypulse/wire.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace citypulse {

struct ScriptEntry {
    /// Nanoseconds after script start; non-decreasing across the script.
    std::uint64_t offset_nanos = 0;
    MonitoringRecord record;
};

struct ReplayScript {
    std::vector<ScriptEntry> entries;

    std::uint64_t duration_nanos() const {
        return entries.empty() ? 0 : entries.back().offset_nanos;
    }
};

/// A script line failed to parse. `line()` is 1-based.
class ScriptError : public std::runtime_error {
public:
    ScriptError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parses a script. Offsets follow the span start times (structure records
/// inherit the preceding offset). Throws ScriptError on a bad line or if a
/// span references a structure hash the script never defines.
ReplayScript load_script(std::istream& in);
ReplayScript load_script_file(const std::string& path);

/// Maps relative timestamps onto an absolute timeline.
DynamicRecord rebase(DynamicRecord record, std::uint64_t base_nanos, double speed);

/// Appends `#<iteration>` to trace and span ids so looped replays stay unique.
DynamicRecord tag_iteration(DynamicRecord record, std::uint64_t iteration);

/// Destination for NDJSON lines.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void send(const std::vector<std::string>& lines) = 0;
    virtual void flush() {}
};

/// Parses `host:port` (raw TCP) or `http://host:port[/path]` (HTTP POST,
/// default path /ingest). Throws std::runtime_error when the connection fails.
std::unique_ptr<RecordSink> connect_sink(const std::string& target);

/// Writes lines to a stream; used for dry runs.
class StreamSink : public RecordSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void send(const std::vector<std::string>& lines) override;
    void flush() override;

private:
    std::ostream& out_;
};

struct ReplayOptions {
    double speed = 1.0;
    bool loop = false;
    /// Stop after this many loop iterations (0 = unbounded when looping).
    std::uint64_t max_iterations = 0;
    /// Parallel connections; records are distributed by trace id.
    std::size_t connections = 1;
    /// Checked between batches; returning true ends the replay.
    std::function<bool()> cancelled;
};

struct ReplaySummary {
    std::uint64_t records_sent = 0;
    std::chrono::nanoseconds duration{0};
};

/// Replays the script into one sink per connection.
ReplaySummary replay(const ReplayScript& script, std::vector<std::unique_ptr<RecordSink>>& sinks,
                     const ReplayOptions& options);

struct RatePhase {
    double seconds = 0.0;
    double multiplier = 1.0;
};

struct SynthScenario {
    std::size_t class_count = 20;
    std::size_t package_fanout = 3;
    double calls_per_second = 100.0;
    double constructor_fraction = 0.2;
    /// Rate multipliers applied in order, then repeated; empty means constant.
    std::vector<RatePhase> phases;
    std::uint64_t seed = 42;
    std::size_t max_trace_spans = 8;
    std::string hostname = "synth-host";
    std::string app_name = "synth-app";

    void validate() const;
};

/// Deterministic stream of monitoring records for a scenario: first one
/// structural record per (class, operation), then spans forming random call
/// trees. Span timestamps are relative to stream start and follow the
/// configured rate.
class SynthStream {
public:
    explicit SynthStream(SynthScenario scenario);

    /// Next record with its offset; structural records come first at offset 0.
    ScriptEntry next();

    std::uint64_t spans_emitted() const { return spans_emitted_; }
    const SynthScenario& scenario() const { return scenario_; }

private:
    void generate_trace();
    double rate_at(double seconds) const;

    SynthScenario scenario_;
    std::mt19937_64 rng_;
    std::vector<StructuralRecord> structures_;
    std::size_t structure_cursor_ = 0;
    std::vector<ScriptEntry> trace_buffer_;
    std::size_t trace_cursor_ = 0;
    std::uint64_t trace_counter_ = 0;
    std::uint64_t spans_emitted_ = 0;
    double clock_seconds_ = 0.0;
};

struct SynthOptions {
    /// Wall-clock bound; unset runs until cancelled.
    std::optional<std::chrono::nanoseconds> duration;
    /// Skip pacing and timestamp rebasing (dry runs).
    bool unpaced = false;
    std::optional<std::uint64_t> max_spans;
    std::function<bool()> cancelled;
};

ReplaySummary synth(SynthStream& stream, RecordSink& sink, const SynthOptions& options);

}  // namespace citypulse
