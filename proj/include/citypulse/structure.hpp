#pragma once

/// @file structure.hpp
/// @brief Landscape tree: application -> nested packages -> classes -> operations.
///
/// Children are kept in name order so traversal, serialization and layout are
/// independent of the order in which structural records arrived. Nodes are
/// only ever added.

#include "citypulse/wire.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>

namespace citypulse {

struct ClassNode {
    std::string class_id;
    std::string name;
    std::set<std::string> operations;

    friend bool operator==(const ClassNode&, const ClassNode&) = default;
};

struct PackageNode {
    std::string node_id;
    std::string name;
    std::map<std::string, PackageNode> packages;
    std::map<std::string, ClassNode> classes;

    friend bool operator==(const PackageNode&, const PackageNode&) = default;
};

/// (hostname, app_name)
using AppKey = std::pair<std::string, std::string>;

struct ApplicationNode {
    std::string hostname;
    std::string app_name;
    /// Unnamed root: holds top-level packages and classes in the default package.
    PackageNode root;

    std::string node_id() const { return root.node_id; }

    friend bool operator==(const ApplicationNode&, const ApplicationNode&) = default;
};

/// `host/app/pkg.sub.Class`; unique across the landscape.
std::string make_class_id(const std::string& hostname, const std::string& app_name,
                          const OperationIdentity& id);

class Landscape {
public:
    /// Adds the operation and any missing ancestors. Returns the class id.
    /// Idempotent.
    std::string insert(const OperationIdentity& id, const std::string& hostname,
                       const std::string& app_name);

    std::size_t class_count() const;
    std::size_t package_count() const;
    bool has_class(const std::string& class_id) const;
    bool empty() const { return applications_.empty(); }

    const std::map<AppKey, ApplicationNode>& applications() const { return applications_; }

    friend bool operator==(const Landscape&, const Landscape&) = default;

private:
    std::map<AppKey, ApplicationNode> applications_;
    std::set<std::string> class_ids_;
};

}  // namespace citypulse
