#ifndef CESCHED_AGENTS_HEURISTICS_HPP
#define CESCHED_AGENTS_HEURISTICS_HPP

#include <string>
#include <vector>

#include "cesched/latency_engine.hpp"
#include "cesched/rng.hpp"

namespace cesched {

// Initial-placement schedulers. Default mimics a resource-fit scheduler
// (uniform among feasible nodes), Cloud-First prefers cloud capacity,
// Latency-Greedy keeps instances close to the user.
enum class SchedPolicy { Default, CloudFirst, LatencyGreedy };

inline SchedPolicy sched_policy_from(const std::string& name) {
    if (name == "default") return SchedPolicy::Default;
    if (name == "cloud_first") return SchedPolicy::CloudFirst;
    if (name == "latency_greedy") return SchedPolicy::LatencyGreedy;
    throw ConfigError("unknown scheduler '" + name + "'");
}

inline std::string to_string(SchedPolicy p) {
    switch (p) {
        case SchedPolicy::Default: return "default";
        case SchedPolicy::CloudFirst: return "cloud_first";
        case SchedPolicy::LatencyGreedy: return "latency_greedy";
    }
    return "?";
}

// A node belongs to the cloud domain iff its type label starts with "Cloud".
inline bool is_cloud_node(const Topology& topo, int node) {
    return topo.spec(node).type.rfind("Cloud", 0) == 0;
}

namespace detail {

inline int pick_node(const Topology& topo, double req_cpu, double req_mem, SchedPolicy policy,
                     Rng& rng) {
    std::vector<int> feasible;
    for (int j = 0; j < topo.node_count(); ++j)
        if (topo.can_host(j, req_cpu, req_mem)) feasible.push_back(j);
    if (feasible.empty()) return -1;
    switch (policy) {
        case SchedPolicy::Default:
            return feasible[uniform_int(rng, 0, static_cast<int>(feasible.size()) - 1)];
        case SchedPolicy::CloudFirst: {
            for (int j : feasible)
                if (is_cloud_node(topo, j)) return j; // lowest id first
            return feasible.front();                  // spill to edge
        }
        case SchedPolicy::LatencyGreedy: {
            int best = feasible.front();
            for (int j : feasible)
                if (topo.user_latency(j) < topo.user_latency(best)) best = j;
            return best; // ties keep the lowest id
        }
    }
    return -1;
}

} // namespace detail

// Places every instance in observation order, committing resources as it
// goes. Throws InfeasibleError when the policy's preference order dead-ends.
inline Placement heuristic_place(const AppGraph& app, Topology& topo, SchedPolicy policy,
                                 Rng& rng) {
    Placement p;
    p.assignment.assign(app.service_count(), {});
    for (const auto& inst : app.instances()) {
        const auto& spec = app.service(inst.service);
        const int node = detail::pick_node(topo, spec.req_cpu, spec.req_mem, policy, rng);
        if (node < 0)
            throw InfeasibleError("scheduler '" + to_string(policy) +
                                  "' found no feasible node for '" + spec.name + "'");
        topo.commit(node, spec.req_cpu, spec.req_mem);
        p.assignment[inst.service].push_back(node);
    }
    return p;
}

// Rehomes the listed instances (already released from their old nodes) via
// the given policy. Used by the self-healing path.
inline void rehome_instances(const AppGraph& app, Topology& topo, Placement& p,
                             const std::vector<InstanceRef>& displaced, SchedPolicy policy,
                             Rng& rng) {
    for (const auto& inst : displaced) {
        const auto& spec = app.service(inst.service);
        const int node = detail::pick_node(topo, spec.req_cpu, spec.req_mem, policy, rng);
        if (node < 0)
            throw InfeasibleError("self-healing: no surviving capacity for '" + spec.name +
                                  "' replica " + std::to_string(inst.replica));
        topo.commit(node, spec.req_cpu, spec.req_mem);
        p.assignment[inst.service][inst.replica] = node;
    }
}

} // namespace cesched

#endif // CESCHED_AGENTS_HEURISTICS_HPP
