#include "citypulse/structure.hpp"

namespace citypulse {

namespace {

std::size_t count_packages(const PackageNode& node) {
    std::size_t n = node.packages.size();
    for (const auto& [_, child] : node.packages) n += count_packages(child);
    return n;
}

}  // namespace

std::string make_class_id(const std::string& hostname, const std::string& app_name,
                          const OperationIdentity& id) {
    std::string out = hostname + "/" + app_name + "/";
    for (const auto& p : id.package_path) {
        out += p;
        out += '.';
    }
    out += id.class_name;
    return out;
}

std::string Landscape::insert(const OperationIdentity& id, const std::string& hostname,
                              const std::string& app_name) {
    auto [app_it, fresh] = applications_.try_emplace(AppKey{hostname, app_name});
    auto& app = app_it->second;
    if (fresh) {
        app.hostname = hostname;
        app.app_name = app_name;
        app.root.node_id = hostname + "/" + app_name;
    }

    PackageNode* node = &app.root;
    std::string path;
    for (const auto& segment : id.package_path) {
        path += path.empty() ? segment : "." + segment;
        auto [it, created] = node->packages.try_emplace(segment);
        if (created) {
            it->second.name = segment;
            it->second.node_id = app.root.node_id + "/" + path;
        }
        node = &it->second;
    }

    auto class_id = make_class_id(hostname, app_name, id);
    auto [cls, created] = node->classes.try_emplace(id.class_name);
    if (created) {
        cls->second.name = id.class_name;
        cls->second.class_id = class_id;
        class_ids_.insert(class_id);
    }
    cls->second.operations.insert(id.operation_name);
    return class_id;
}

std::size_t Landscape::class_count() const { return class_ids_.size(); }

std::size_t Landscape::package_count() const {
    std::size_t n = 0;
    for (const auto& [_, app] : applications_) n += count_packages(app.root);
    return n;
}

bool Landscape::has_class(const std::string& class_id) const {
    return class_ids_.contains(class_id);
}

}  // namespace citypulse
