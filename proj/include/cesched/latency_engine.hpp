#ifndef CESCHED_LATENCY_ENGINE_HPP
#define CESCHED_LATENCY_ENGINE_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cesched/app_graph.hpp"
#include "cesched/topology.hpp"

namespace cesched {

// End-to-end latency model. For a (topology, app, placement) triple the
// per-request latency decomposes as
//
//   T_E[s]      mean execution time over the service's placed instances
//   D_S[i][j]   mean node latency over all instance pairs of an edge
//   T[i][j]     invocation time of edge i->j: D_S + T_S[j]
//   T_G[g]      total of a sequential group: sum of member invocation times
//   T_S[s]      service processing time: T_E + max over the caller's groups
//   d_gateway   mean user latency over gateway instances
//   d_msa       d_gateway + T_S[gateway]
//
// The recursion is evaluated by DFS from the gateway; services shared by
// several callers are evaluated once per placement and their T_S re-used on
// every invocation edge.

struct EngineOptions {
    bool round_trip = false; // double D_S terms (sensitivity studies)
};

struct LatencyReport {
    double d_msa = 0;
    double d_gateway = 0;
    std::vector<double> t_exec;                      // T_E per service
    std::vector<double> t_service;                   // T_S per service
    std::map<std::pair<int, int>, double> d_edge;    // D_S per invocation edge
    std::map<std::pair<int, int>, double> t_edge;    // T_ij per invocation edge
    std::vector<double> t_group;                     // T_G per group index

    nlohmann::json to_json(const AppGraph& app) const {
        nlohmann::json j;
        j["d_msa_ms"] = d_msa;
        j["d_gateway_ms"] = d_gateway;
        for (int s = 0; s < app.service_count(); ++s) {
            const auto& name = app.service(s).name;
            j["t_exec_ms"][name] = t_exec[s];
            j["t_service_ms"][name] = t_service[s];
        }
        for (const auto& [edge, v] : d_edge) {
            const std::string key =
                app.service(edge.first).name + "->" + app.service(edge.second).name;
            j["d_edge_ms"][key] = v;
            j["t_edge_ms"][key] = t_edge.at(edge);
        }
        for (size_t g = 0; g < t_group.size(); ++g) {
            const auto& grp = app.groups()[g];
            nlohmann::json jg;
            jg["caller"] = app.service(grp.caller).name;
            for (int m : grp.members) jg["members"].push_back(app.service(m).name);
            jg["t_group_ms"] = t_group[g];
            j["groups"].push_back(jg);
        }
        return j;
    }
};

inline double avg_exec(int service, const AppGraph& app, const Placement& p,
                       const Topology& topo) {
    const auto& nodes = p.assignment.at(service);
    if (nodes.empty())
        throw InfeasibleError("service '" + app.service(service).name + "' has no instances");
    double sum = 0;
    for (int n : nodes) sum += topo.exec_time(app.service(service).name, n);
    return sum / static_cast<double>(nodes.size());
}

inline double avg_service_latency(int service_i, int service_j, const AppGraph& app,
                                  const Placement& p, const Topology& topo) {
    const auto& ni = p.assignment.at(service_i);
    const auto& nj = p.assignment.at(service_j);
    if (ni.empty() || nj.empty())
        throw InfeasibleError("avg_service_latency: service without instances");
    (void)app;
    double sum = 0;
    for (int a : ni)
        for (int b : nj) sum += topo.latency(a, b);
    return sum / static_cast<double>(ni.size() * nj.size());
}

namespace detail {

// Shared DFS used by both the report path and the scalar fast path.
template <typename EdgeHook, typename GroupHook>
double service_time(int s, const AppGraph& app, const Placement& p, const Topology& topo,
                    const EngineOptions& opt, std::vector<double>& memo,
                    std::vector<double>& te, EdgeHook&& on_edge, GroupHook&& on_group) {
    if (memo[s] >= 0) return memo[s];
    te[s] = avg_exec(s, app, p, topo);
    double best_group = 0;
    const auto& groups = app.groups();
    for (size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].caller != s) continue;
        double tg = 0;
        for (int m : groups[g].members) {
            const double ts_m = service_time(m, app, p, topo, opt, memo, te, on_edge, on_group);
            double ds = avg_service_latency(s, m, app, p, topo);
            if (opt.round_trip) ds *= 2;
            const double tij = ds + ts_m;
            on_edge(s, m, ds, tij);
            tg += tij;
        }
        on_group(static_cast<int>(g), tg);
        best_group = std::max(best_group, tg);
    }
    memo[s] = te[s] + best_group;
    return memo[s];
}

} // namespace detail

/// Full evaluation with all intermediates. Pure: identical inputs give
/// identical reports.
inline LatencyReport end_to_end(const AppGraph& app, const Placement& p,
                                const Topology& topo, const EngineOptions& opt = {}) {
    check_placement(app, p);
    LatencyReport r;
    const int n_services = app.service_count();
    r.t_exec.assign(n_services, 0);
    r.t_service.assign(n_services, 0);
    r.t_group.assign(app.groups().size(), 0);
    std::vector<double> memo(n_services, -1.0);
    const double ts_gateway = detail::service_time(
        app.gateway(), app, p, topo, opt, memo, r.t_exec,
        [&](int i, int j, double ds, double tij) {
            r.d_edge[{i, j}] = ds;
            r.t_edge[{i, j}] = tij;
        },
        [&](int g, double tg) { r.t_group[g] = tg; });
    for (int s = 0; s < n_services; ++s)
        r.t_service[s] = memo[s] >= 0 ? memo[s] : 0;

    const auto& gw_nodes = p.assignment.at(app.gateway());
    double du = 0;
    for (int n : gw_nodes) du += topo.user_latency(n);
    r.d_gateway = du / static_cast<double>(gw_nodes.size());
    r.d_msa = r.d_gateway + ts_gateway;
    return r;
}

/// Scalar fast path for the hot loops (no intermediate collection).
inline double end_to_end_ms(const AppGraph& app, const Placement& p, const Topology& topo,
                            const EngineOptions& opt = {}) {
    const int n_services = app.service_count();
    std::vector<double> memo(n_services, -1.0), te(n_services, 0);
    const double ts_gateway =
        detail::service_time(app.gateway(), app, p, topo, opt, memo, te,
                             [](int, int, double, double) {}, [](int, double) {});
    const auto& gw_nodes = p.assignment.at(app.gateway());
    double du = 0;
    for (int n : gw_nodes) du += topo.user_latency(n);
    return du / static_cast<double>(gw_nodes.size()) + ts_gateway;
}

// Commits the resources of every placed instance onto the topology; throws
// InfeasibleError if Eq. 1 would be violated or a node is dead.
inline void commit_placement(const AppGraph& app, const Placement& p, Topology& topo) {
    check_placement(app, p);
    for (int s = 0; s < app.service_count(); ++s) {
        const auto& spec = app.service(s);
        for (int node : p.assignment[s]) {
            if (!topo.alive(node))
                throw InfeasibleError("placement references dead node " + std::to_string(node));
            if (!topo.can_host(node, spec.req_cpu, spec.req_mem))
                throw InfeasibleError("placement infeasible on node " + std::to_string(node));
            topo.commit(node, spec.req_cpu, spec.req_mem);
        }
    }
}

} // namespace cesched

#endif // CESCHED_LATENCY_ENGINE_HPP
