#ifndef CESCHED_APP_GRAPH_HPP
#define CESCHED_APP_GRAPH_HPP

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cesched/errors.hpp"

namespace cesched {

struct ServiceSpec {
    int id = 0;
    std::string name;
    double req_cpu = 0;   // cores per instance
    double req_mem = 0;   // MB per instance
    int replicas = 1;     // S_cur
    int max_replicas = 1;
};

// Callees invoked strictly sequentially by one caller. Distinct groups of
// the same caller run in parallel.
struct InvocationGroup {
    int caller = 0;
    std::vector<int> members;
};

struct InstanceRef {
    int service = 0;
    int replica = 0;
    bool operator==(const InstanceRef&) const = default;
};

// Assignment of every service instance to a node: assignment[s][k] is the
// node hosting replica k of service s.
struct Placement {
    std::vector<std::vector<int>> assignment;
};

/// An MSA application: services with replica counts and resource requests,
/// the gateway, and the invocation-group structure. Immutable after parse
/// except through set_replicas.
class AppGraph {
public:
    AppGraph() = default;

    AppGraph(std::vector<ServiceSpec> services, std::vector<InvocationGroup> groups,
             int gateway)
        : services_(std::move(services)), groups_(std::move(groups)), gateway_(gateway) {
        validate();
    }

    static AppGraph from_json(const nlohmann::json& cfg) {
        std::vector<ServiceSpec> services;
        std::map<std::string, int> by_name;
        for (const auto& js : cfg.at("services")) {
            ServiceSpec s;
            s.id = static_cast<int>(services.size());
            s.name = js.at("name").get<std::string>();
            s.req_cpu = js.at("cpu").get<double>();
            s.req_mem = js.at("mem").get<double>();
            s.replicas = js.value("replicas", 1);
            s.max_replicas = js.value("max_replicas", s.replicas);
            if (by_name.count(s.name))
                throw ConfigError("app: duplicate service '" + s.name + "'");
            by_name[s.name] = s.id;
            services.push_back(s);
        }
        auto lookup = [&](const std::string& name) {
            auto it = by_name.find(name);
            if (it == by_name.end())
                throw ConfigError("app: unknown service '" + name + "'");
            return it->second;
        };
        std::vector<InvocationGroup> groups;
        if (cfg.contains("groups")) {
            for (const auto& jg : cfg["groups"]) {
                InvocationGroup g;
                g.caller = lookup(jg.at("caller").get<std::string>());
                for (const auto& m : jg.at("members"))
                    g.members.push_back(lookup(m.get<std::string>()));
                groups.push_back(g);
            }
        }
        if (!cfg.contains("gateway")) throw ConfigError("app: missing gateway");
        return AppGraph(std::move(services), std::move(groups),
                        lookup(cfg["gateway"].get<std::string>()));
    }

    static AppGraph load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("app: cannot open " + path);
        nlohmann::json cfg;
        try {
            in >> cfg;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("app: " + path + ": " + e.what());
        }
        return from_json(cfg);
    }

    int service_count() const { return static_cast<int>(services_.size()); }
    const ServiceSpec& service(int id) const { return services_.at(id); }
    const std::vector<ServiceSpec>& services() const { return services_; }
    const std::vector<InvocationGroup>& groups() const { return groups_; }
    int gateway() const { return gateway_; }

    int service_id(const std::string& name) const {
        for (const auto& s : services_)
            if (s.name == name) return s.id;
        throw ConfigError("app: unknown service '" + name + "'");
    }

    std::vector<const InvocationGroup*> groups_of(int service) const {
        std::vector<const InvocationGroup*> out;
        for (const auto& g : groups_)
            if (g.caller == service) out.push_back(&g);
        return out;
    }

    void set_replicas(int service, int count) {
        ServiceSpec& s = services_.at(service);
        if (count < 1 || count > s.max_replicas)
            throw ConfigError("replicas " + std::to_string(count) + " out of range [1," +
                              std::to_string(s.max_replicas) + "] for '" + s.name + "'");
        s.replicas = count;
    }

    int total_instances() const {
        int n = 0;
        for (const auto& s : services_) n += s.replicas;
        return n;
    }

    int max_total_instances() const {
        int n = 0;
        for (const auto& s : services_) n += s.max_replicas;
        return n;
    }

    // Instances in observation order: services in graph order, replicas by
    // index. Stable across an episode.
    std::vector<InstanceRef> instances() const {
        std::vector<InstanceRef> out;
        for (const auto& s : services_)
            for (int k = 0; k < s.replicas; ++k) out.push_back({s.id, k});
        return out;
    }

private:
    void validate() const {
        if (services_.empty()) return;
        for (const auto& s : services_) {
            if (s.req_cpu <= 0 || s.req_mem <= 0)
                throw ConfigError("app: service '" + s.name + "' has non-positive request");
            if (s.replicas < 1 || s.replicas > s.max_replicas)
                throw ConfigError("app: service '" + s.name + "' replica count invalid");
        }
        if (gateway_ < 0 || gateway_ >= service_count())
            throw ConfigError("app: gateway does not exist");
        for (const auto& g : groups_) {
            if (g.members.empty()) throw ConfigError("app: empty invocation group");
            for (int m : g.members) {
                if (m < 0 || m >= service_count())
                    throw ConfigError("app: group references unknown service");
                if (m == g.caller)
                    throw ConfigError("app: service '" + services_[g.caller].name +
                                      "' invokes itself");
            }
        }
        // Cycle check over the caller -> member relation.
        std::vector<int> color(service_count(), 0); // 0 white, 1 grey, 2 black
        auto dfs = [&](auto&& self, int v) -> void {
            color[v] = 1;
            for (const auto& g : groups_) {
                if (g.caller != v) continue;
                for (int m : g.members) {
                    if (color[m] == 1)
                        throw ConfigError("app: invocation cycle through '" +
                                          services_[m].name + "'");
                    if (color[m] == 0) self(self, m);
                }
            }
            color[v] = 2;
        };
        for (int v = 0; v < service_count(); ++v)
            if (color[v] == 0) dfs(dfs, v);
        // Every service reachable from the gateway.
        std::vector<bool> seen(service_count(), false);
        auto walk = [&](auto&& self, int v) -> void {
            seen[v] = true;
            for (const auto& g : groups_)
                if (g.caller == v)
                    for (int m : g.members)
                        if (!seen[m]) self(self, m);
        };
        walk(walk, gateway_);
        for (int v = 0; v < service_count(); ++v)
            if (!seen[v])
                throw ConfigError("app: service '" + services_[v].name +
                                  "' unreachable from gateway");
    }

    std::vector<ServiceSpec> services_;
    std::vector<InvocationGroup> groups_;
    int gateway_ = -1;
};

inline void check_placement(const AppGraph& app, const Placement& p) {
    if (static_cast<int>(p.assignment.size()) != app.service_count())
        throw ConfigError("placement: service count mismatch");
    for (int s = 0; s < app.service_count(); ++s)
        if (static_cast<int>(p.assignment[s].size()) != app.service(s).replicas)
            throw ConfigError("placement: replica count mismatch for '" +
                              app.service(s).name + "'");
}

} // namespace cesched

#endif // CESCHED_APP_GRAPH_HPP
