#ifndef CESCHED_TESTS_NAIVE_EVAL_HPP
#define CESCHED_TESTS_NAIVE_EVAL_HPP

// Independent latency oracle for cross-checking the engine: a direct,
// unmemoized transcription of the recursive model. Deliberately shares no
// code with cesched::end_to_end beyond the raw topology accessors.

#include "cesched/app_graph.hpp"
#include "cesched/topology.hpp"

namespace cesched_tests {

inline double naive_service_time(int s, const cesched::AppGraph& app,
                                 const cesched::Placement& p, const cesched::Topology& topo,
                                 bool round_trip = false) {
    const auto& nodes = p.assignment.at(s);
    double te = 0;
    for (int n : nodes) te += topo.exec_time(app.service(s).name, n);
    te /= static_cast<double>(nodes.size());

    double best = 0;
    for (const auto& g : app.groups()) {
        if (g.caller != s) continue;
        double tg = 0;
        for (int m : g.members) {
            const auto& mn = p.assignment.at(m);
            double ds = 0;
            for (int a : nodes)
                for (int b : mn) ds += topo.latency(a, b);
            ds /= static_cast<double>(nodes.size() * mn.size());
            if (round_trip) ds *= 2;
            tg += ds + naive_service_time(m, app, p, topo, round_trip);
        }
        if (tg > best) best = tg;
    }
    return te + best;
}

inline double naive_d_msa(const cesched::AppGraph& app, const cesched::Placement& p,
                          const cesched::Topology& topo, bool round_trip = false) {
    const auto& gw = p.assignment.at(app.gateway());
    double du = 0;
    for (int n : gw) du += topo.user_latency(n);
    du /= static_cast<double>(gw.size());
    return du + naive_service_time(app.gateway(), app, p, topo, round_trip);
}

} // namespace cesched_tests

#endif // CESCHED_TESTS_NAIVE_EVAL_HPP
