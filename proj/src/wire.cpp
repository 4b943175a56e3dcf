#include "citypulse/wire.hpp"

#include <json.hpp>

namespace citypulse {

namespace {

using nlohmann::json;

const std::set<std::string>& default_constructor_names() {
    static const std::set<std::string> names{"<init>", "new"};
    return names;
}

std::string require_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw ParseError(std::string("missing field '") + key + "'");
    if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
    auto value = it->get<std::string>();
    if (value.empty()) throw ParseError(std::string("field '") + key + "' must not be empty");
    return value;
}

std::uint64_t require_nanos(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw ParseError(std::string("missing field '") + key + "'");
    if (!it->is_number_unsigned()) {
        throw ParseError(std::string("field '") + key + "' must be a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

StructuralRecord parse_structure(const json& obj) {
    StructuralRecord r{
        .structure_hash = require_string(obj, "structureHash"),
        .hostname = require_string(obj, "hostname"),
        .app_name = require_string(obj, "appName"),
        .fqn = require_string(obj, "fqn"),
    };
    if (r.fqn.find('.') == std::string::npos) {
        throw ParseError("fqn '" + r.fqn + "' needs at least class and operation");
    }
    return r;
}

DynamicRecord parse_span(const json& obj) {
    DynamicRecord r;
    r.trace_id = require_string(obj, "traceId");
    r.span_id = require_string(obj, "spanId");
    if (auto it = obj.find("parentSpanId"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("field 'parentSpanId' must be a string or null");
        r.parent_span_id = it->get<std::string>();
        if (r.parent_span_id->empty()) r.parent_span_id.reset();
    }
    r.start_nanos = require_nanos(obj, "startNanos");
    r.end_nanos = require_nanos(obj, "endNanos");
    r.structure_hash = require_string(obj, "structureHash");
    if (r.end_nanos < r.start_nanos) throw ParseError("endNanos precedes startNanos");
    return r;
}

}  // namespace

MonitoringRecord parse_record(std::string_view line) {
    json obj = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) throw ParseError("malformed JSON");
    if (!obj.is_object()) throw ParseError("message must be a JSON object");
    auto kind = obj.find("kind");
    if (kind == obj.end() || !kind->is_string()) throw ParseError("missing field 'kind'");
    const auto& tag = kind->get_ref<const std::string&>();
    if (tag == "structure") return parse_structure(obj);
    if (tag == "span") return parse_span(obj);
    throw ParseError("unknown kind '" + tag + "'");
}

OperationIdentity parse_fqn(std::string_view fqn, const std::set<std::string>& constructor_names) {
    std::vector<std::string> segments;
    std::size_t begin = 0;
    while (true) {
        auto dot = fqn.find('.', begin);
        auto seg = fqn.substr(begin, dot == std::string_view::npos ? std::string_view::npos : dot - begin);
        if (seg.empty()) throw ParseError("empty segment in fqn '" + std::string(fqn) + "'");
        segments.emplace_back(seg);
        if (dot == std::string_view::npos) break;
        begin = dot + 1;
    }
    if (segments.size() < 2) {
        throw ParseError("fqn '" + std::string(fqn) + "' needs at least class and operation");
    }
    OperationIdentity id;
    id.operation_name = std::move(segments.back());
    segments.pop_back();
    id.class_name = std::move(segments.back());
    segments.pop_back();
    id.package_path = std::move(segments);
    id.is_constructor = constructor_names.contains(id.operation_name);
    return id;
}

OperationIdentity parse_fqn(std::string_view fqn) {
    return parse_fqn(fqn, default_constructor_names());
}

std::string join_fqn(const OperationIdentity& id) {
    std::string out;
    for (const auto& p : id.package_path) {
        out += p;
        out += '.';
    }
    out += id.class_name;
    out += '.';
    out += id.operation_name;
    return out;
}

std::string to_wire(const StructuralRecord& r) {
    json j{{"kind", "structure"},
           {"structureHash", r.structure_hash},
           {"hostname", r.hostname},
           {"appName", r.app_name},
           {"fqn", r.fqn}};
    return j.dump();
}

std::string to_wire(const DynamicRecord& r) {
    json j{{"kind", "span"},
           {"traceId", r.trace_id},
           {"spanId", r.span_id},
           {"parentSpanId", r.parent_span_id ? json(*r.parent_span_id) : json(nullptr)},
           {"startNanos", r.start_nanos},
           {"endNanos", r.end_nanos},
           {"structureHash", r.structure_hash}};
    return j.dump();
}

std::string to_wire(const MonitoringRecord& r) {
    return std::visit([](const auto& rec) { return to_wire(rec); }, r);
}

bool StructureRegistry::insert(const StructuralRecord& record) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = records_.try_emplace(record.structure_hash, record);
    if (inserted) return true;
    const auto& known = it->second;
    if (known.hostname != record.hostname || known.app_name != record.app_name ||
        known.fqn != record.fqn) {
        throw HashCollision("structure hash '" + record.structure_hash + "' bound to " +
                            known.hostname + "/" + known.app_name + "/" + known.fqn +
                            ", received " + record.hostname + "/" + record.app_name + "/" +
                            record.fqn);
    }
    return false;
}

bool StructureRegistry::contains(const std::string& structure_hash) const {
    std::lock_guard lock(mutex_);
    return records_.contains(structure_hash);
}

std::optional<StructuralRecord> StructureRegistry::find(const std::string& structure_hash) const {
    std::lock_guard lock(mutex_);
    if (auto it = records_.find(structure_hash); it != records_.end()) return it->second;
    return std::nullopt;
}

std::size_t StructureRegistry::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

}  // namespace citypulse
