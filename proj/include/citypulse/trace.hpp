#pragma once

/// @file trace.hpp
/// @brief Trace reconstruction from span records and class-level call events.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace citypulse {

/// Half-open interval [begin, end) of epoch nanoseconds.
struct Window {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    bool contains(std::uint64_t t) const { return t >= begin && t < end; }
    friend bool operator==(const Window&, const Window&) = default;
};

/// A span record resolved against the structure model.
struct Span {
    std::string span_id;
    std::optional<std::string> parent_span_id;
    std::string trace_id;
    std::string class_id;
    std::string operation_name;
    bool is_constructor = false;
    std::uint64_t start_nanos = 0;
    std::uint64_t end_nanos = 0;
};

struct Trace {
    std::string trace_id;
    /// Ordered by (start_nanos, span_id).
    std::vector<Span> spans;
    /// parent[i] is the index of span i's parent within `spans`.
    std::vector<std::optional<std::size_t>> parent;
    /// Indices of spans without a parent in this trace.
    std::vector<std::size_t> roots;
};

struct CallEvent {
    /// Absent for root spans: the caller was not observed.
    std::optional<std::string> caller_class_id;
    std::string callee_class_id;
    bool is_constructor_call = false;
    std::uint64_t timestamp = 0;
    std::string trace_id;
};

struct AssemblyResult {
    std::vector<Trace> traces;
    /// Spans starting at or after window.end; they belong to a later window.
    std::vector<Span> deferred;
    /// Spans that started before window.begin but arrived now; included.
    std::size_t late_spans = 0;
    /// Traces dropped because their parent links contain a cycle.
    std::size_t invalid_traces = 0;
    /// Repeated span ids within one trace; the first occurrence is kept.
    std::size_t duplicate_spans = 0;
};

/// Groups spans into traces and links parents. Spans whose parent is not
/// present in the same batch become additional roots.
AssemblyResult assemble(std::vector<Span> spans, Window window);

/// One event per span; the caller is the parent span's class.
std::vector<CallEvent> derive_call_events(const Trace& trace);

std::vector<CallEvent> derive_call_events(std::span<const Trace> traces);

/// Stateful assembly for the live loop. Orphan spans (parent not yet seen) and
/// their descendants are held back for one drain so a late parent can still
/// attach; after that they become roots.
class TraceAssembler {
public:
    void add(Span span);
    void add(std::vector<Span> spans);

    struct Drained {
        AssemblyResult result;
        /// Spans that were held for a drain and then promoted to roots.
        std::size_t orphans = 0;
        /// Spans currently held back awaiting their parent.
        std::size_t held = 0;
    };

    Drained drain(Window window);

    std::size_t pending() const { return pending_.size() + held_.size(); }

private:
    std::vector<Span> pending_;
    std::vector<Span> held_;
};

}  // namespace citypulse
