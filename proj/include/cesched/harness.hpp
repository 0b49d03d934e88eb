#ifndef CESCHED_HARNESS_HPP
#define CESCHED_HARNESS_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cesched/agents/heuristics.hpp"
#include "cesched/agents/reschedule.hpp"
#include "cesched/env.hpp"
#include "cesched/presets.hpp"

namespace cesched {

// Scenario engine: discrete ticks (~1 s each), a closed-loop workload, and
// time-indexed disruptions. Latency is model-driven; observed latency adds
// uniform noise, and RPS follows the closed-loop identity
// rps * latency = threads * 1000.

struct ScenarioEvent {
    int tick = 0;
    std::vector<int> kill_nodes; // node failure
    int set_threads = 0;         // 0 = no change
};

struct Scenario {
    std::string name = "scenario";
    std::string app_preset = "chain";
    int replicas = 1;
    int max_replicas = 5;
    std::string topology_preset = "paper6";
    SchedPolicy initial = SchedPolicy::Default;
    std::string rescheduler_path; // empty = none
    int duration = 120;
    int threads = 1;
    double noise = 0.05;
    std::uint64_t seed = 1;
    bool autoscale = false;
    double autoscale_threshold = 0.5;
    bool reschedule_at_start = true;
    double handover_spike_ms = 0; // one-tick addition while pods move
    int churn_window = 0;         // ticks; 0 = whole run
    std::vector<ScenarioEvent> events;

    static Scenario from_json(const nlohmann::json& j) {
        Scenario s;
        s.name = j.value("name", s.name);
        s.app_preset = j.value("app", s.app_preset);
        s.replicas = j.value("replicas", s.replicas);
        s.max_replicas = j.value("max_replicas", s.max_replicas);
        s.topology_preset = j.value("topology", s.topology_preset);
        s.initial = sched_policy_from(j.value("initial", std::string("default")));
        s.rescheduler_path = j.value("rescheduler", std::string());
        s.duration = j.value("duration", s.duration);
        s.threads = j.value("threads", s.threads);
        s.noise = j.value("noise", s.noise);
        s.seed = j.value("seed", s.seed);
        if (j.contains("autoscale")) {
            s.autoscale = j["autoscale"].value("enabled", false);
            s.autoscale_threshold = j["autoscale"].value("threshold", 0.5);
        }
        s.reschedule_at_start = j.value("reschedule_at_start", s.reschedule_at_start);
        s.handover_spike_ms = j.value("handover_spike_ms", s.handover_spike_ms);
        s.churn_window = j.value("churn_window", s.churn_window);
        if (j.contains("events")) {
            for (const auto& je : j["events"]) {
                ScenarioEvent e;
                e.tick = je.at("tick").get<int>();
                if (je.contains("kill_nodes"))
                    e.kill_nodes = je["kill_nodes"].get<std::vector<int>>();
                e.set_threads = je.value("set_threads", 0);
                s.events.push_back(e);
            }
        }
        if (s.duration <= 0) throw ConfigError("scenario: duration must be positive");
        for (const auto& e : s.events)
            if (e.tick < 0 || e.tick >= s.duration)
                throw ConfigError("scenario: event tick outside duration");
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"name", name},
                         {"app", app_preset},
                         {"replicas", replicas},
                         {"max_replicas", max_replicas},
                         {"topology", topology_preset},
                         {"initial", to_string(initial)},
                         {"rescheduler", rescheduler_path},
                         {"duration", duration},
                         {"threads", threads},
                         {"noise", noise},
                         {"seed", seed},
                         {"autoscale", {{"enabled", autoscale}, {"threshold", autoscale_threshold}}},
                         {"reschedule_at_start", reschedule_at_start},
                         {"handover_spike_ms", handover_spike_ms},
                         {"churn_window", churn_window}};
        for (const auto& e : events) {
            nlohmann::json je{{"tick", e.tick}};
            if (!e.kill_nodes.empty()) je["kill_nodes"] = e.kill_nodes;
            if (e.set_threads > 0) je["set_threads"] = e.set_threads;
            j["events"].push_back(je);
        }
        return j;
    }

    // node-failure: 12-pod chain, one Edge-A and one Cloud-A disabled mid-run.
    // traffic-surge: 4-pod chain with autoscaling, threads 1 -> 6 at t=90.
    static Scenario preset(const std::string& which) {
        Scenario s;
        s.name = which;
        if (which == "node-failure") {
            s.replicas = 3;
            s.initial = SchedPolicy::LatencyGreedy;
            s.duration = 120;
            s.events.push_back({30, {0, 2}, 0}); // one Cloud-A, one Edge-A
        } else if (which == "traffic-surge") {
            s.replicas = 1;
            s.initial = SchedPolicy::Default;
            s.duration = 180;
            s.autoscale = true;
            s.events.push_back({90, {}, 6});
        } else {
            throw ConfigError("unknown scenario preset '" + which +
                              "' (expected node-failure or traffic-surge)");
        }
        return s;
    }
};

struct TimeSeriesRow {
    int tick = 0;
    double d_model = 0;  // engine latency, ms
    double observed = 0; // with noise (and handover spike), ms
    double rps = 0;
    int threads = 1;
    int total_replicas = 0;
    int moves = 0;       // rescheduling actions applied this tick
    int node_failures = 0;
    int scale_events = 0; // net replica changes this tick
    bool autoscale_capped = false;
};

struct TimeSeries {
    std::vector<TimeSeriesRow> rows;
};

struct OverheadReport {
    int non_idle_actions = 0;
    int rollouts = 0;
    bool all_rollouts_idled = true;
    double fraction_moved = 0;       // distinct instances moved / peak pod count
    int max_moves_per_instance = 0;  // within the churn window
    bool churn = false;              // some instance moved more than twice

    nlohmann::json to_json() const {
        return {{"non_idle_actions", non_idle_actions},
                {"rollouts", rollouts},
                {"all_rollouts_idled", all_rollouts_idled},
                {"fraction_moved", fraction_moved},
                {"max_moves_per_instance", max_moves_per_instance},
                {"churn", churn}};
    }
};

struct AutoscaleDecision {
    int service = 0;
    int delta = 0; // +1 / -1
    bool capped = false;
};

/// Threshold autoscaler over the closed-loop CPU model: a service's modeled
/// utilization is threads * T_E / (d_msa * replicas) — the busy fraction
/// each in-flight request keeps one replica at, summed over threads. Scale
/// up on util > threshold, down on util < threshold/2 (strict).
inline std::vector<AutoscaleDecision> autoscale_step(const AppGraph& app,
                                                     const std::vector<double>& t_exec,
                                                     double d_msa, int threads,
                                                     double threshold) {
    std::vector<AutoscaleDecision> out;
    for (int s = 0; s < app.service_count(); ++s) {
        const auto& spec = app.service(s);
        const double util =
            threads * t_exec[s] / (d_msa * static_cast<double>(spec.replicas));
        if (util > threshold) {
            if (spec.replicas >= spec.max_replicas)
                out.push_back({s, 0, true});
            else
                out.push_back({s, +1, false});
        } else if (util < threshold / 2 && spec.replicas > 1) {
            out.push_back({s, -1, false});
        }
    }
    return out;
}

struct Summary {
    double mean = 0;
    double fraction_under_slo = 0;
    double slo_ms = 0;
    int spike_count = 0; // ticks above 2x the series median
    std::vector<double> moving_avg; // trailing window 30

    nlohmann::json to_json() const {
        return {{"mean_ms", mean},
                {"slo_ms", slo_ms},
                {"fraction_under_slo", fraction_under_slo},
                {"spike_count", spike_count}};
    }
};

inline Summary summarize(const std::vector<double>& observed, double slo_ms) {
    if (observed.empty()) throw ConfigError("summarize: empty series");
    Summary s;
    s.slo_ms = slo_ms;
    double sum = 0;
    int under = 0;
    for (double v : observed) {
        sum += v;
        if (v < slo_ms) ++under;
    }
    s.mean = sum / static_cast<double>(observed.size());
    s.fraction_under_slo = static_cast<double>(under) / static_cast<double>(observed.size());
    std::vector<double> sorted = observed;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (double v : observed)
        if (v > 2 * median) ++s.spike_count;
    double wsum = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        wsum += observed[i];
        if (i >= 30) wsum -= observed[i - 30];
        s.moving_avg.push_back(wsum / static_cast<double>(std::min<size_t>(i + 1, 30)));
    }
    return s;
}

struct ScenarioResult {
    TimeSeries series;
    OverheadReport overhead;
    Placement final_placement;
};

/// Runs a scenario tick by tick: apply events, self-heal displaced
/// instances via the initial scheduler, let the rescheduler react to
/// disruptions, then sample the closed-loop observables.
inline ScenarioResult run_scenario(const Scenario& sc, AppGraph app, Topology topo,
                                   const Checkpoint* rescheduler, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    topo.draw_background(rng);
    Placement placement = heuristic_place(app, topo, sc.initial, rng);

    ScenarioResult result;
    auto& overhead = result.overhead;
    std::map<std::pair<int, int>, std::vector<int>> move_ticks; // instance -> ticks moved
    int peak_pods = app.total_instances();
    int threads = sc.threads;
    std::uint64_t env_seq = 0;

    for (int tick = 0; tick < sc.duration; ++tick) {
        TimeSeriesRow row;
        row.tick = tick;
        bool disrupted = false;

        for (const auto& ev : sc.events) {
            if (ev.tick != tick) continue;
            if (!ev.kill_nodes.empty()) {
                std::vector<InstanceRef> displaced;
                for (int node : ev.kill_nodes) {
                    if (node < 0 || node >= topo.node_count())
                        throw ConfigError("scenario: killed node does not exist");
                    for (int s = 0; s < app.service_count(); ++s)
                        for (int k = 0; k < app.service(s).replicas; ++k)
                            if (placement.assignment[s][k] == node)
                                displaced.push_back({s, k});
                    topo.kill(node); // zeroes the dead node's book-keeping
                    ++row.node_failures;
                }
                rehome_instances(app, topo, placement, displaced, sc.initial, rng);
                disrupted = true;
            }
            if (ev.set_threads > 0) {
                threads = ev.set_threads;
                disrupted = true;
            }
        }

        if (sc.autoscale) {
            const LatencyReport rep = end_to_end(app, placement, topo);
            const auto decisions =
                autoscale_step(app, rep.t_exec, rep.d_msa, threads, sc.autoscale_threshold);
            for (const auto& d : decisions) {
                if (d.capped) {
                    row.autoscale_capped = true;
                    continue;
                }
                const auto& spec = app.service(d.service);
                if (d.delta > 0) {
                    const int node = detail::pick_node(topo, spec.req_cpu, spec.req_mem,
                                                       sc.initial, rng);
                    if (node < 0) {
                        row.autoscale_capped = true; // no capacity for a new replica
                        continue;
                    }
                    topo.commit(node, spec.req_cpu, spec.req_mem);
                    app.set_replicas(d.service, spec.replicas + 1);
                    placement.assignment[d.service].push_back(node);
                } else {
                    const int last = placement.assignment[d.service].back();
                    topo.release(last, spec.req_cpu, spec.req_mem);
                    placement.assignment[d.service].pop_back();
                    app.set_replicas(d.service, spec.replicas - 1);
                }
                row.scale_events += d.delta;
                disrupted = true;
            }
            peak_pods = std::max(peak_pods, app.total_instances());
        }

        if (rescheduler && (disrupted || (tick == 0 && sc.reschedule_at_start))) {
            CeEnv env(rescheduler->env_cfg, app, topo, derive_seed(seed, 0xE5C0 + env_seq++));
            env.reset_from(topo, placement);
            const ReschedulePlan plan = reschedule(*rescheduler, env);
            ++overhead.rollouts;
            overhead.all_rollouts_idled &= plan.ended_idle;
            overhead.non_idle_actions += static_cast<int>(plan.moves.size());
            for (const auto& mv : plan.moves)
                move_ticks[{mv.service, mv.replica}].push_back(tick);
            row.moves = static_cast<int>(plan.moves.size());
            placement = env.placement();
            topo = env.topology();
        }

        row.d_model = end_to_end_ms(app, placement, topo);
        const double spike = row.moves > 0 ? sc.handover_spike_ms : 0.0;
        row.observed = (row.d_model + spike) * (1.0 + uniform_real(rng, -sc.noise, sc.noise));
        row.rps = threads * 1000.0 / row.observed;
        row.threads = threads;
        row.total_replicas = app.total_instances();
        result.series.rows.push_back(row);
    }

    int distinct_moved = 0;
    const int window = sc.churn_window > 0 ? sc.churn_window : sc.duration;
    for (const auto& [inst, ticks] : move_ticks) {
        ++distinct_moved;
        // max number of moves of this instance inside any window
        for (size_t i = 0; i < ticks.size(); ++i) {
            int cnt = 0;
            for (size_t j = i; j < ticks.size() && ticks[j] < ticks[i] + window; ++j) ++cnt;
            overhead.max_moves_per_instance = std::max(overhead.max_moves_per_instance, cnt);
        }
    }
    overhead.churn = overhead.max_moves_per_instance > 2;
    overhead.fraction_moved =
        peak_pods > 0 ? static_cast<double>(distinct_moved) / peak_pods : 0.0;
    result.final_placement = placement;
    return result;
}

} // namespace cesched

#endif // CESCHED_HARNESS_HPP
