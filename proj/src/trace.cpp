#include "citypulse/trace.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace citypulse {

namespace {

// True if following parent links from any span revisits a span.
bool has_cycle(const std::vector<std::optional<std::size_t>>& parent) {
    enum class Mark : std::uint8_t { unvisited, active, done };
    std::vector<Mark> mark(parent.size(), Mark::unvisited);
    std::vector<std::size_t> path;
    for (std::size_t start = 0; start < parent.size(); ++start) {
        path.clear();
        for (std::size_t node = start;;) {
            if (mark[node] == Mark::done) break;
            if (mark[node] == Mark::active) return true;
            mark[node] = Mark::active;
            path.push_back(node);
            if (!parent[node]) break;
            node = *parent[node];
        }
        for (auto n : path) mark[n] = Mark::done;
    }
    return false;
}

}  // namespace

AssemblyResult assemble(std::vector<Span> spans, Window window) {
    AssemblyResult result;
    std::map<std::string, std::vector<Span>> by_trace;
    for (auto& span : spans) {
        if (span.start_nanos >= window.end) {
            result.deferred.push_back(std::move(span));
            continue;
        }
        if (span.start_nanos < window.begin) ++result.late_spans;
        by_trace[span.trace_id].push_back(std::move(span));
    }

    for (auto& [trace_id, group] : by_trace) {
        Trace trace;
        trace.trace_id = trace_id;

        std::unordered_set<std::string> seen;
        for (auto& span : group) {
            if (!seen.insert(span.span_id).second) {
                ++result.duplicate_spans;
                continue;
            }
            trace.spans.push_back(std::move(span));
        }
        std::sort(trace.spans.begin(), trace.spans.end(), [](const Span& a, const Span& b) {
            return std::tie(a.start_nanos, a.span_id) < std::tie(b.start_nanos, b.span_id);
        });

        std::unordered_map<std::string_view, std::size_t> index;
        for (std::size_t i = 0; i < trace.spans.size(); ++i) index.emplace(trace.spans[i].span_id, i);

        trace.parent.resize(trace.spans.size());
        for (std::size_t i = 0; i < trace.spans.size(); ++i) {
            const auto& pid = trace.spans[i].parent_span_id;
            if (!pid) continue;
            if (auto it = index.find(*pid); it != index.end()) trace.parent[i] = it->second;
        }
        if (has_cycle(trace.parent)) {
            ++result.invalid_traces;
            continue;
        }
        for (std::size_t i = 0; i < trace.spans.size(); ++i) {
            if (!trace.parent[i]) trace.roots.push_back(i);
        }
        result.traces.push_back(std::move(trace));
    }
    return result;
}

std::vector<CallEvent> derive_call_events(const Trace& trace) {
    std::vector<CallEvent> events;
    events.reserve(trace.spans.size());
    for (std::size_t i = 0; i < trace.spans.size(); ++i) {
        const auto& span = trace.spans[i];
        CallEvent e;
        if (trace.parent[i]) e.caller_class_id = trace.spans[*trace.parent[i]].class_id;
        e.callee_class_id = span.class_id;
        e.is_constructor_call = span.is_constructor;
        e.timestamp = span.start_nanos;
        e.trace_id = trace.trace_id;
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<CallEvent> derive_call_events(std::span<const Trace> traces) {
    std::vector<CallEvent> events;
    for (const auto& trace : traces) {
        auto part = derive_call_events(trace);
        events.insert(events.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    }
    return events;
}

void TraceAssembler::add(Span span) { pending_.push_back(std::move(span)); }

void TraceAssembler::add(std::vector<Span> spans) {
    if (pending_.empty()) {
        pending_ = std::move(spans);
        return;
    }
    pending_.insert(pending_.end(), std::make_move_iterator(spans.begin()),
                    std::make_move_iterator(spans.end()));
}

TraceAssembler::Drained TraceAssembler::drain(Window window) {
    Drained out;

    // Spans already held once are final: whatever parent they still lack is
    // not coming.
    std::unordered_set<std::string> was_held;
    for (const auto& s : held_) was_held.insert(s.trace_id + '\n' + s.span_id);

    std::vector<Span> pool = std::move(held_);
    held_.clear();
    pool.insert(pool.end(), std::make_move_iterator(pending_.begin()),
                std::make_move_iterator(pending_.end()));
    pending_.clear();

    // Group by trace to find orphans among the spans due in this window.
    std::unordered_map<std::string, std::vector<std::size_t>> by_trace;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i].start_nanos < window.end) by_trace[pool[i].trace_id].push_back(i);
    }

    std::vector<bool> hold(pool.size(), false);
    for (const auto& [trace_id, members] : by_trace) {
        std::unordered_map<std::string_view, std::size_t> index;
        for (auto i : members) index.emplace(pool[i].span_id, i);

        std::vector<std::size_t> fresh_orphans;
        for (auto i : members) {
            const auto& pid = pool[i].parent_span_id;
            if (!pid || index.contains(*pid)) continue;
            if (was_held.contains(trace_id + '\n' + pool[i].span_id)) {
                ++out.orphans;
            } else {
                fresh_orphans.push_back(i);
            }
        }
        if (fresh_orphans.empty()) continue;

        // Hold each fresh orphan together with its descendants.
        std::unordered_map<std::string_view, std::vector<std::size_t>> children;
        for (auto i : members) {
            if (pool[i].parent_span_id) children[*pool[i].parent_span_id].push_back(i);
        }
        std::vector<std::size_t> stack = fresh_orphans;
        while (!stack.empty()) {
            auto i = stack.back();
            stack.pop_back();
            if (hold[i]) continue;
            hold[i] = true;
            if (auto it = children.find(pool[i].span_id); it != children.end()) {
                stack.insert(stack.end(), it->second.begin(), it->second.end());
            }
        }
    }

    std::vector<Span> due;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (hold[i]) {
            held_.push_back(std::move(pool[i]));
        } else {
            due.push_back(std::move(pool[i]));
        }
    }
    out.held = held_.size();
    out.result = assemble(std::move(due), window);
    pending_ = std::move(out.result.deferred);
    out.result.deferred.clear();
    return out;
}

}  // namespace citypulse
