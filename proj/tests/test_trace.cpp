#include "citypulse/replay.hpp"
#include "citypulse/structure.hpp"
#include "citypulse/trace.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

using namespace citypulse;
using namespace citypulse::testing;

namespace {

std::vector<Span> fixture_spans() {
    auto script = load_script_file(fixture_path("petclinic.ndjson"));
    Landscape tree;
    std::map<std::string, std::pair<std::string, OperationIdentity>> by_hash;
    std::vector<Span> spans;
    for (const auto& entry : script.entries) {
        if (const auto* s = std::get_if<StructuralRecord>(&entry.record)) {
            auto id = parse_fqn(s->fqn);
            by_hash[s->structure_hash] = {tree.insert(id, s->hostname, s->app_name), id};
        } else {
            const auto& d = std::get<DynamicRecord>(entry.record);
            const auto& [cls, id] = by_hash.at(d.structure_hash);
            spans.push_back(Span{d.span_id, d.parent_span_id, d.trace_id, cls, id.operation_name,
                                 id.is_constructor, d.start_nanos, d.end_nanos});
        }
    }
    return spans;
}

const std::string person = "petclinic-host/spring-petclinic/org.springframework.samples.petclinic.model.Person";
const std::string base_entity =
    "petclinic-host/spring-petclinic/org.springframework.samples.petclinic.model.BaseEntity";

}  // namespace

TEST_CASE("a parent chain assembles into one trace") {
    auto result = assemble({span("t", "b", "a", "C", 3), span("t", "r", std::nullopt, "A", 1),
                            span("t", "a", "r", "B", 2)},
                           everything);
    REQUIRE(result.traces.size() == 1);
    const auto& t = result.traces[0];
    REQUIRE(t.spans.size() == 3);
    CHECK(t.spans[0].span_id == "r");
    CHECK(t.spans[1].span_id == "a");
    CHECK(t.spans[2].span_id == "b");
    CHECK(t.roots == std::vector<std::size_t>{0});
    CHECK(t.parent[1] == 0u);
    CHECK(t.parent[2] == 1u);
}

TEST_CASE("distinct trace ids become separate traces") {
    auto result = assemble({span("t1", "x", std::nullopt, "A"), span("t2", "y", std::nullopt, "B")}, everything);
    REQUIRE(result.traces.size() == 2);
    for (const auto& t : result.traces) {
        CHECK(t.spans.size() == 1);
        CHECK(t.roots.size() == 1);
    }
}

TEST_CASE("a span with an unknown parent is an extra root") {
    auto result = assemble({span("t", "r", std::nullopt, "A", 1), span("t", "o", "missing", "B", 2)}, everything);
    REQUIRE(result.traces.size() == 1);
    CHECK(result.traces[0].roots.size() == 2);
}

TEST_CASE("cyclic parent links invalidate the trace") {
    auto result = assemble({span("bad", "a", "b", "A"), span("bad", "b", "a", "B"),
                            span("self", "s", "s", "S"), span("ok", "r", std::nullopt, "A")},
                           everything);
    CHECK(result.invalid_traces == 2);
    REQUIRE(result.traces.size() == 1);
    CHECK(result.traces[0].trace_id == "ok");
}

TEST_CASE("duplicate span ids keep the first occurrence") {
    auto result = assemble({span("t", "a", std::nullopt, "A", 1), span("t", "a", std::nullopt, "B", 0)}, everything);
    CHECK(result.duplicate_spans == 1);
    REQUIRE(result.traces.size() == 1);
    REQUIRE(result.traces[0].spans.size() == 1);
    CHECK(result.traces[0].spans[0].class_id == "A");
}

TEST_CASE("spans starting at or after the window end are deferred") {
    auto result = assemble({span("t", "a", std::nullopt, "A", 50), span("t", "b", std::nullopt, "B", 100),
                            span("t", "c", std::nullopt, "C", 5)},
                           Window{10, 100});
    REQUIRE(result.deferred.size() == 1);
    CHECK(result.deferred[0].span_id == "b");
    CHECK(result.late_spans == 1);
    REQUIRE(result.traces.size() == 1);
    CHECK(result.traces[0].spans.size() == 2);
}

TEST_CASE("call events follow parent classes") {
    auto result = assemble({span("t", "r", std::nullopt, "A", 1), span("t", "a", "r", "B", 2),
                            span("t", "b", "a", "C", 3)},
                           everything);
    auto events = derive_call_events(result.traces[0]);
    REQUIRE(events.size() == 3);
    CHECK_FALSE(events[0].caller_class_id.has_value());
    CHECK(events[0].callee_class_id == "A");
    CHECK(events[1].caller_class_id == "A");
    CHECK(events[1].callee_class_id == "B");
    CHECK(events[2].caller_class_id == "B");
    CHECK(events[2].callee_class_id == "C");
    CHECK(events[2].timestamp == 3);
    CHECK(events[2].trace_id == "t");
}

TEST_CASE("single constructor span yields one root constructor event") {
    auto result = assemble({span("t", "x", std::nullopt, "X", 0, true)}, everything);
    auto events = derive_call_events(result.traces[0]);
    REQUIRE(events.size() == 1);
    CHECK_FALSE(events[0].caller_class_id);
    CHECK(events[0].callee_class_id == "X");
    CHECK(events[0].is_constructor_call);
}

TEST_CASE("self-calls are preserved") {
    auto result = assemble({span("t", "r", std::nullopt, "A", 1), span("t", "a", "r", "A", 2)}, everything);
    auto events = derive_call_events(result.traces[0]);
    REQUIRE(events.size() == 2);
    CHECK(events[1].caller_class_id == "A");
    CHECK(events[1].callee_class_id == "A");
}

TEST_CASE("fixture: Person calls the BaseEntity constructor 24 times") {
    auto result = assemble(fixture_spans(), everything);
    CHECK(result.invalid_traces == 0);
    auto events = derive_call_events(result.traces);
    auto n = std::count_if(events.begin(), events.end(), [](const CallEvent& e) {
        return e.caller_class_id == person && e.callee_class_id == base_entity && e.is_constructor_call;
    });
    CHECK(n == 24);
}

TEST_CASE("event count invariants on random forests") {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 200; ++round) {
        std::vector<Span> spans;
        std::uniform_int_distribution<int> traces(1, 6), size(1, 12), cls(0, 5);
        std::bernoulli_distribution orphan(0.1);
        for (int t = traces(rng); t > 0; --t) {
            const auto tid = "t" + std::to_string(t);
            const int n = size(rng);
            for (int i = 0; i < n; ++i) {
                std::optional<std::string> parent;
                if (i > 0) parent = tid + "-" + std::to_string(std::uniform_int_distribution<int>(0, i - 1)(rng));
                if (orphan(rng)) parent = "gone";
                spans.push_back(span(tid, tid + "-" + std::to_string(i), parent, "C" + std::to_string(cls(rng)),
                                     static_cast<std::uint64_t>(i)));
            }
        }
        std::shuffle(spans.begin(), spans.end(), rng);
        auto result = assemble(spans, everything);
        CHECK(result.invalid_traces == 0);
        for (const auto& t : result.traces) {
            auto events = derive_call_events(t);
            CHECK(events.size() == t.spans.size());
            auto with_caller = std::count_if(events.begin(), events.end(),
                                             [](const CallEvent& e) { return e.caller_class_id.has_value(); });
            CHECK(static_cast<std::size_t>(with_caller) == t.spans.size() - t.roots.size());
        }
    }
}

TEST_CASE("assembler holds orphans for one drain so a late parent can attach") {
    TraceAssembler asm_;
    asm_.add(span("t", "child", "parent", "B", 5));
    auto first = asm_.drain(Window{0, 100});
    CHECK(first.result.traces.empty());
    CHECK(first.held == 1);
    CHECK(first.orphans == 0);

    asm_.add(span("t", "parent", std::nullopt, "A", 1));
    auto second = asm_.drain(Window{100, 200});
    REQUIRE(second.result.traces.size() == 1);
    const auto& t = second.result.traces[0];
    CHECK(t.spans.size() == 2);
    CHECK(t.roots.size() == 1);
    auto events = derive_call_events(t);
    CHECK(events[1].caller_class_id == "A");
    CHECK(second.orphans == 0);
}

TEST_CASE("assembler promotes an orphan to root after one held drain") {
    TraceAssembler asm_;
    asm_.add(span("t", "child", "parent", "B", 5));
    asm_.add(span("t", "grandchild", "child", "C", 6));
    auto first = asm_.drain(Window{0, 100});
    CHECK(first.held == 2);
    auto second = asm_.drain(Window{100, 200});
    CHECK(second.orphans == 1);
    CHECK(second.held == 0);
    REQUIRE(second.result.traces.size() == 1);
    CHECK(second.result.traces[0].roots.size() == 1);
    CHECK(second.result.traces[0].spans.size() == 2);
    CHECK(asm_.pending() == 0);
}

TEST_CASE("assembler keeps future spans for their window") {
    TraceAssembler asm_;
    asm_.add(span("t", "a", std::nullopt, "A", 150));
    auto first = asm_.drain(Window{0, 100});
    CHECK(first.result.traces.empty());
    CHECK(asm_.pending() == 1);
    auto second = asm_.drain(Window{100, 200});
    CHECK(second.result.traces.size() == 1);
}
