#pragma once

/// @file wire.hpp
/// @brief Monitoring wire format: one JSON object per line.
///
///   {"kind":"structure","structureHash":s,"hostname":s,"appName":s,"fqn":s}
///   {"kind":"span","traceId":s,"spanId":s,"parentSpanId":s|null,
///    "startNanos":n,"endNanos":n,"structureHash":s}
///
/// Structural records describe *what* ran (identity), span records describe
/// *when* it ran. Spans refer to their structure through the producer-supplied
/// structure hash. Unknown extra fields are ignored.

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace citypulse {

struct StructuralRecord {
    std::string structure_hash;
    std::string hostname;
    std::string app_name;
    std::string fqn;

    friend bool operator==(const StructuralRecord&, const StructuralRecord&) = default;
};

struct DynamicRecord {
    std::string trace_id;
    std::string span_id;
    std::optional<std::string> parent_span_id;
    std::uint64_t start_nanos = 0;
    std::uint64_t end_nanos = 0;
    std::string structure_hash;

    friend bool operator==(const DynamicRecord&, const DynamicRecord&) = default;
};

using MonitoringRecord = std::variant<StructuralRecord, DynamicRecord>;

/// Parsed form of a fully-qualified operation name.
struct OperationIdentity {
    std::vector<std::string> package_path;
    std::string class_name;
    std::string operation_name;
    bool is_constructor = false;

    friend bool operator==(const OperationIdentity&, const OperationIdentity&) = default;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when one structure hash is reused for a different identity triple.
class HashCollision : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates one wire message (without the trailing newline).
MonitoringRecord parse_record(std::string_view line);

/// Splits `a.b.Class.op` into package path, class and operation.
OperationIdentity parse_fqn(std::string_view fqn, const std::set<std::string>& constructor_names);
OperationIdentity parse_fqn(std::string_view fqn);

std::string join_fqn(const OperationIdentity& id);

std::string to_wire(const StructuralRecord& r);
std::string to_wire(const DynamicRecord& r);
std::string to_wire(const MonitoringRecord& r);

/// Thread-safe set of structure hashes seen so far.
class StructureRegistry {
public:
    /// True on the first occurrence of the hash, false for repeats.
    /// Throws HashCollision if the hash is already bound to another triple.
    bool insert(const StructuralRecord& record);

    bool contains(const std::string& structure_hash) const;
    std::optional<StructuralRecord> find(const std::string& structure_hash) const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, StructuralRecord> records_;
};

}  // namespace citypulse
