#ifndef CESCHED_ORACLE_HPP
#define CESCHED_ORACLE_HPP

#include <cmath>
#include <vector>

#include "cesched/latency_engine.hpp"

namespace cesched {

struct OracleResult {
    std::vector<Placement> best; // all argmin placements
    double optimal_d_msa = 0;
    long feasible_count = 0;
    long enumerated = 0; // complete assignments plus pruned prefixes

    nlohmann::json to_json(const AppGraph& app) const {
        nlohmann::json j;
        j["optimal_d_msa_ms"] = optimal_d_msa;
        j["feasible_count"] = feasible_count;
        j["enumerated"] = enumerated;
        j["tied_optima"] = best.size();
        for (const auto& p : best) {
            nlohmann::json jp;
            for (int s = 0; s < app.service_count(); ++s)
                jp[app.service(s).name] = p.assignment[s];
            j["best_placements"].push_back(jp);
        }
        return j;
    }
};

namespace detail {

inline void check_enumerable(const AppGraph& app, const Topology& topo, long limit) {
    const int m = app.total_instances();
    const double combos = std::pow(static_cast<double>(topo.node_count()), m);
    if (combos > static_cast<double>(limit))
        throw ConfigError("oracle: " + std::to_string(topo.node_count()) + "^" +
                          std::to_string(m) + " placements exceed limit " +
                          std::to_string(limit));
}

} // namespace detail

/// Visits every placement satisfying Eq. 1 exactly once, in mixed-radix
/// order over the flattened instance list, pruning any prefix that
/// over-commits a node. Returns the number of feasible placements.
template <typename Visitor>
long enumerate_feasible(const AppGraph& app, const Topology& topo, Visitor&& visit,
                        long limit = 1000000, long* enumerated = nullptr) {
    detail::check_enumerable(app, topo, limit);
    const auto instances = app.instances();
    const int m = static_cast<int>(instances.size());
    const int n = topo.node_count();
    Topology work = topo;
    Placement p;
    p.assignment.assign(app.service_count(), {});
    for (const auto& s : app.services())
        p.assignment[s.id].assign(s.replicas, -1);

    long feasible = 0, visited = 0;
    auto rec = [&](auto&& self, int i) -> void {
        if (i == m) {
            ++feasible;
            visit(static_cast<const Placement&>(p));
            return;
        }
        const auto& spec = app.service(instances[i].service);
        for (int j = 0; j < n; ++j) {
            ++visited;
            if (!work.can_host(j, spec.req_cpu, spec.req_mem)) continue;
            work.commit(j, spec.req_cpu, spec.req_mem);
            p.assignment[instances[i].service][instances[i].replica] = j;
            self(self, i + 1);
            work.release(j, spec.req_cpu, spec.req_mem);
        }
        p.assignment[instances[i].service][instances[i].replica] = -1;
    };
    rec(rec, 0);
    if (enumerated) *enumerated = visited;
    return feasible;
}

/// Exact minimum of end-to-end latency over all feasible placements, with
/// every argmin retained (1e-9 ms tie tolerance).
inline OracleResult optimal(const AppGraph& app, const Topology& topo, long limit = 1000000,
                            const EngineOptions& opt = {}) {
    OracleResult r;
    double best = std::numeric_limits<double>::infinity();
    r.feasible_count = enumerate_feasible(
        app, topo,
        [&](const Placement& p) {
            const double d = end_to_end_ms(app, p, topo, opt);
            if (d < best) best = d;
        },
        limit, &r.enumerated);
    if (r.feasible_count == 0) throw InfeasibleError("oracle: no feasible placement");
    r.optimal_d_msa = best;
    enumerate_feasible(
        app, topo,
        [&](const Placement& p) {
            if (end_to_end_ms(app, p, topo, opt) <= best + 1e-9) r.best.push_back(p);
        },
        limit);
    return r;
}

} // namespace cesched

#endif // CESCHED_ORACLE_HPP
