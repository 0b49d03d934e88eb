#ifndef CESCHED_PRESETS_HPP
#define CESCHED_PRESETS_HPP

#include <string>
#include <vector>

#include "cesched/app_graph.hpp"
#include "cesched/topology.hpp"

namespace cesched {

// Bundled testbed-style configurations so every experiment is one command.
// Topologies: two cloud/edge domains, 50 ms across domains, 0.5 ms within a
// domain and from user to edge; users reach the cloud over the backbone
// (50 ms). Cloud-A nodes run services 1.5x faster than Edge-A and 2x faster
// than Edge-B.

namespace detail {

inline nlohmann::json topology_json(const std::vector<std::pair<std::string, int>>& counts) {
    // counts: list of (type, how many); capacities per type below.
    nlohmann::json nodes = nlohmann::json::array();
    std::vector<std::string> types;
    int id = 0;
    for (const auto& [type, n] : counts) {
        for (int k = 0; k < n; ++k) {
            double cpu = 0, mem = 0;
            if (type == "Cloud-A") {
                cpu = 8;
                mem = 16384;
            } else if (type == "Edge-A") {
                cpu = 4;
                mem = 8192;
            } else if (type == "Edge-B") {
                cpu = 2;
                mem = 4096;
            }
            nodes.push_back({{"id", id++}, {"type", type}, {"cpu", cpu}, {"mem", mem}});
            types.push_back(type);
        }
    }
    const int n = id;
    auto domain = [&](int i) { return types[i].rfind("Cloud", 0) == 0 ? 0 : 1; };
    nlohmann::json matrix = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < n; ++j)
            row.push_back(i == j ? 0.0 : (domain(i) == domain(j) ? 0.5 : 50.0));
        matrix.push_back(row);
    }
    nlohmann::json user = nlohmann::json::array();
    for (int i = 0; i < n; ++i) user.push_back(domain(i) == 0 ? 50.0 : 0.5);

    nlohmann::json profiles;
    const std::vector<std::pair<std::string, double>> base_ms = {
        {"Front-End", 20.0}, {"ml", 80.0}, {"Back-End", 40.0}, {"DB", 20.0}};
    for (const auto& [svc, ms] : base_ms) {
        profiles[svc]["Cloud-A"] = ms;
        profiles[svc]["Edge-A"] = ms * 1.5;
        profiles[svc]["Edge-B"] = ms * 2.0;
    }

    return {{"nodes", nodes},
            {"latency_matrix", matrix},
            {"user_latency", user},
            {"profiles", profiles},
            {"background_utilization", {0.0, 0.5}}};
}

} // namespace detail

inline nlohmann::json preset_topology_json(const std::string& name) {
    if (name == "paper6")
        return detail::topology_json({{"Cloud-A", 2}, {"Edge-A", 2}, {"Edge-B", 2}});
    if (name == "tiny4")
        return detail::topology_json({{"Cloud-A", 1}, {"Edge-A", 1}, {"Edge-B", 2}});
    if (name == "scale18")
        return detail::topology_json({{"Cloud-A", 6}, {"Edge-A", 6}, {"Edge-B", 6}});
    throw ConfigError("unknown topology preset '" + name +
                      "' (expected paper6, tiny4 or scale18)");
}

inline Topology preset_topology(const std::string& name) {
    return Topology::from_json(preset_topology_json(name));
}

// The three benchmark applications share the same four services and differ
// only in invocation structure:
//   chain    Front-End -> ml -> Back-End -> DB
//   agg-seq  Front-End calls [ml, Back-End] in one sequential group
//   agg-par  Front-End calls ml and Back-End in two parallel groups
// Back-End -> DB in all three. The client is the external user, not a
// deployed service; Front-End is the gateway.
inline nlohmann::json preset_app_json(const std::string& name, int replicas = 0,
                                      int max_replicas = 5) {
    nlohmann::json services = nlohmann::json::array();
    const std::vector<std::tuple<std::string, double, double>> specs = {
        {"Front-End", 0.5, 512.0}, {"ml", 1.0, 1024.0}, {"Back-End", 0.5, 512.0},
        {"DB", 0.25, 256.0}};
    for (const auto& [svc, cpu, mem] : specs)
        services.push_back({{"name", svc},
                            {"cpu", cpu},
                            {"mem", mem},
                            {"replicas", replicas > 0 ? replicas : 1},
                            {"max_replicas", max_replicas}});
    nlohmann::json groups;
    if (name == "chain") {
        groups = {{{"caller", "Front-End"}, {"members", {"ml"}}},
                  {{"caller", "ml"}, {"members", {"Back-End"}}},
                  {{"caller", "Back-End"}, {"members", {"DB"}}}};
    } else if (name == "agg-seq") {
        groups = {{{"caller", "Front-End"}, {"members", {"ml", "Back-End"}}},
                  {{"caller", "Back-End"}, {"members", {"DB"}}}};
    } else if (name == "agg-par") {
        groups = {{{"caller", "Front-End"}, {"members", {"ml"}}},
                  {{"caller", "Front-End"}, {"members", {"Back-End"}}},
                  {{"caller", "Back-End"}, {"members", {"DB"}}}};
    } else {
        throw ConfigError("unknown app preset '" + name +
                          "' (expected chain, agg-seq or agg-par)");
    }
    return {{"services", services}, {"gateway", "Front-End"}, {"groups", groups}};
}

inline AppGraph preset_app(const std::string& name, int replicas = 0, int max_replicas = 5) {
    return AppGraph::from_json(preset_app_json(name, replicas, max_replicas));
}

} // namespace cesched

#endif // CESCHED_PRESETS_HPP
