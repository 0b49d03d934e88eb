// cesched: a desk-scale workbench for latency-aware microservice
// rescheduling on a simulated cloud-edge cluster. Subcommands cover agent
// training, scheduler comparison, latency explanation, the brute-force
// placement oracle, scenario experiments, and rescheduling-plan export.

#include <atomic>
#include <chrono>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cesched/agents/dqn.hpp"
#include "cesched/agents/heuristics.hpp"
#include "cesched/agents/ppo.hpp"
#include "cesched/agents/reschedule.hpp"
#include "cesched/io.hpp"
#include "cesched/oracle.hpp"
#include "cesched/presets.hpp"

namespace {

using namespace cesched;

struct CommonOpts {
    std::string topology_file;
    std::string topology_preset = "paper6";
    std::string app_file;
    std::string app_preset = "chain";
    int max_replicas = 5;
    std::uint64_t seed = 1;
    std::string out;
    bool force = false;
    int workers = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_out = true) {
    cmd->add_option("--topology", o.topology_file, "topology JSON file");
    cmd->add_option("--nodes", o.topology_preset, "topology preset (paper6|tiny4|scale18)");
    cmd->add_option("--app", o.app_file, "application JSON file");
    cmd->add_option("--preset", o.app_preset, "app preset (chain|agg-seq|agg-par)");
    cmd->add_option("--max-replicas", o.max_replicas, "replica cap for preset apps");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--workers", o.workers, "worker threads where supported");
    if (with_out) {
        cmd->add_option("--out", o.out, "output directory");
        cmd->add_flag("--force", o.force, "overwrite existing outputs");
    }
}

Topology resolve_topology(const CommonOpts& o) {
    if (!o.topology_file.empty()) return Topology::load(o.topology_file);
    return preset_topology(o.topology_preset);
}

AppGraph resolve_app(const CommonOpts& o, int replicas = 0) {
    if (!o.app_file.empty()) {
        AppGraph app = AppGraph::load(o.app_file);
        if (replicas > 0)
            for (int s = 0; s < app.service_count(); ++s) app.set_replicas(s, replicas);
        return app;
    }
    return preset_app(o.app_preset, replicas, o.max_replicas);
}

std::map<std::string, std::string> input_map(const CommonOpts& o) {
    return {{"topology", o.topology_file.empty() ? "preset:" + o.topology_preset
                                                 : o.topology_file},
            {"app", o.app_file.empty() ? "preset:" + o.app_preset : o.app_file}};
}

EnvFactory make_factory(const AppGraph& app, const Topology& topo, const EnvConfig& cfg,
                        const std::string& replicas_mode) {
    const bool mix = replicas_mode == "mix";
    int fixed = 0;
    if (!mix) {
        fixed = std::stoi(replicas_mode);
        for (const auto& s : app.services())
            if (fixed < 1 || fixed > s.max_replicas)
                throw ConfigError("--replicas " + replicas_mode + " out of range for '" +
                                  s.name + "'");
    }
    return [app, topo, cfg, mix, fixed](std::uint64_t ep_seed) {
        AppGraph a = app;
        int k = fixed;
        if (mix) {
            Rng r = make_rng(derive_seed(ep_seed, 0x5EEDULL));
            int max_r = a.services().front().max_replicas;
            for (const auto& s : a.services()) max_r = std::min(max_r, s.max_replicas);
            k = uniform_int(r, 1, max_r);
        }
        if (k > 0)
            for (int s = 0; s < a.service_count(); ++s) a.set_replicas(s, k);
        return CeEnv(cfg, a, topo, ep_seed);
    };
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------- train --

int cmd_train(const CommonOpts& o, const std::string& agent, long steps,
              const std::string& replicas_mode, double penalty, int max_steps, int s_max,
              const std::vector<std::string>& raw_args) {
    const auto t0 = std::chrono::steady_clock::now();
    if (agent != "ppo" && agent != "dqn")
        throw ConfigError("unknown agent '" + agent + "' (expected ppo or dqn)");
    const Topology topo = resolve_topology(o);
    const AppGraph app = resolve_app(o);

    EnvConfig cfg;
    cfg.s_max = s_max > 0 ? s_max : app.max_total_instances();
    cfg.penalty_cost = penalty;
    cfg.max_steps = max_steps;
    cfg.bg_lo = topo.background_lo();
    cfg.bg_hi = topo.background_hi();
    const EnvFactory factory = make_factory(app, topo, cfg, replicas_mode);

    Checkpoint ck;
    TrainStats stats;
    if (agent == "ppo") {
        PpoConfig pc;
        pc.total_steps = steps;
        PpoResult r = train_ppo(factory, pc, o.seed);
        ck = std::move(r.checkpoint);
        stats = std::move(r.stats);
    } else {
        DqnConfig dc;
        dc.total_steps = steps;
        DqnResult r = train_dqn(factory, dc, o.seed);
        ck = std::move(r.checkpoint);
        stats = std::move(r.stats);
    }

    RunDir run(o.out.empty() ? "out/train" : o.out, o.force);
    run.write("checkpoint.json", ck.to_json().dump(2) + "\n");
    run.write("curve.csv", train_curve_csv(stats));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.write_manifest("train", raw_args, input_map(o), o.seed, wall);
    std::cout << "trained " << agent << " for " << stats.steps << " steps, "
              << stats.episodes() << " episodes, final 100-episode mean reward "
              << fmt(stats.final_moving_avg()) << "\n";
    return 0;
}

// -------------------------------------------------------------- compare --

int cmd_compare(const CommonOpts& o, const std::vector<std::string>& schedulers,
                const std::vector<int>& replica_counts, int trials,
                const std::string& ppo_ck_path, const std::string& dqn_ck_path,
                const std::vector<std::string>& raw_args) {
    const auto t0 = std::chrono::steady_clock::now();
    if (trials <= 0) throw ConfigError("--trials must be positive");
    const Topology topo = resolve_topology(o);

    std::optional<Checkpoint> ppo_ck, dqn_ck;
    for (const auto& s : schedulers) {
        if (s == "ppo") {
            if (ppo_ck_path.empty()) throw ConfigError("scheduler 'ppo' needs --ppo-checkpoint");
            ppo_ck = Checkpoint::load(ppo_ck_path);
        } else if (s == "dqn") {
            if (dqn_ck_path.empty()) throw ConfigError("scheduler 'dqn' needs --dqn-checkpoint");
            dqn_ck = Checkpoint::load(dqn_ck_path);
        } else {
            sched_policy_from(s); // validates
        }
    }

    struct Task {
        std::string scheduler;
        int replicas;
        int trial;
        double d = 0;
    };
    std::vector<Task> tasks;
    for (const auto& s : schedulers)
        for (int r : replica_counts)
            for (int t = 0; t < trials; ++t) tasks.push_back({s, r, t});

    parallel_for(static_cast<int>(tasks.size()), o.workers, [&](int i) {
        Task& task = tasks[i];
        const std::uint64_t s =
            derive_seed(o.seed, static_cast<std::uint64_t>(i) + 0xC0'0000ULL);
        Rng rng = make_rng(s);
        AppGraph app = resolve_app(o, task.replicas);
        Topology t = topo;
        t.draw_background(rng);
        if (task.scheduler == "ppo" || task.scheduler == "dqn") {
            const Checkpoint& ck = task.scheduler == "ppo" ? *ppo_ck : *dqn_ck;
            Topology placed = t;
            const Placement p0 = heuristic_place(app, placed, SchedPolicy::Default, rng);
            CeEnv env(ck.env_cfg, app, t, derive_seed(s, 1));
            env.reset_from(placed, p0);
            const ReschedulePlan plan = reschedule(ck, env);
            task.d = plan.moves.empty() ? plan.d_initial : plan.d_final;
        } else {
            const Placement p = heuristic_place(app, t, sched_policy_from(task.scheduler), rng);
            task.d = end_to_end_ms(app, p, t);
        }
    });

    std::ostringstream csv;
    csv << "scheduler,replicas,pods,trials,mean_d_msa_ms\n";
    const AppGraph base_app = resolve_app(o);
    for (const auto& s : schedulers) {
        for (int r : replica_counts) {
            double sum = 0;
            int n = 0;
            for (const auto& t : tasks)
                if (t.scheduler == s && t.replicas == r) {
                    sum += t.d;
                    ++n;
                }
            csv << s << ',' << r << ',' << base_app.service_count() * r << ',' << n << ','
                << fmt(sum / n) << '\n';
        }
    }
    RunDir run(o.out.empty() ? "out/compare" : o.out, o.force);
    run.write("compare.csv", csv.str());
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.write_manifest("compare", raw_args, input_map(o), o.seed, wall);
    std::cout << csv.str();
    return 0;
}

// -------------------------------------------------------------- explain --

int cmd_explain(const CommonOpts& o, const std::string& placement_file, bool round_trip,
                const std::vector<std::string>& raw_args) {
    Topology topo = resolve_topology(o);
    const AppGraph app = resolve_app(o);
    const Placement p = load_placement(placement_file, app);
    commit_placement(app, p, topo); // validates liveness and Eq. 1
    EngineOptions opt;
    opt.round_trip = round_trip;
    const LatencyReport report = end_to_end(app, p, topo, opt);
    const std::string text = report.to_json(app).dump(2) + "\n";
    if (!o.out.empty()) {
        RunDir run(o.out, o.force);
        run.write("report.json", text);
        run.write_manifest("explain", raw_args, input_map(o), o.seed, 0);
    }
    std::cout << text;
    return 0;
}

// --------------------------------------------------------------- oracle --

int cmd_oracle(const CommonOpts& o, long limit, const std::vector<std::string>& raw_args) {
    const Topology topo = resolve_topology(o);
    const AppGraph app = resolve_app(o);
    const OracleResult r = optimal(app, topo, limit);
    const std::string text = r.to_json(app).dump(2) + "\n";
    if (!o.out.empty()) {
        RunDir run(o.out, o.force);
        run.write("oracle.json", text);
        run.write_manifest("oracle", raw_args, input_map(o), o.seed, 0);
    }
    std::cout << text;
    return 0;
}

// ------------------------------------------------------------- scenario --

int cmd_scenario(const CommonOpts& o, const std::string& file, const std::string& preset,
                 const std::string& rescheduler, double slo_ms, bool plot_data,
                 bool seed_given, const std::vector<std::string>& raw_args) {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario sc;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw ConfigError("scenario: cannot open " + file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("scenario: ") + e.what());
        }
        sc = Scenario::from_json(j);
    } else {
        sc = Scenario::preset(preset);
    }
    if (!rescheduler.empty()) sc.rescheduler_path = rescheduler == "none" ? "" : rescheduler;
    if (seed_given) sc.seed = o.seed;

    const Topology topo = preset_topology(sc.topology_preset);
    const AppGraph app = preset_app(sc.app_preset, sc.replicas, sc.max_replicas);
    std::optional<Checkpoint> ck;
    if (!sc.rescheduler_path.empty()) ck = Checkpoint::load(sc.rescheduler_path);

    const ScenarioResult r =
        run_scenario(sc, app, topo, ck ? &*ck : nullptr, sc.seed);
    std::vector<double> observed;
    for (const auto& row : r.series.rows) observed.push_back(row.observed);
    const Summary summary = summarize(observed, slo_ms);

    nlohmann::json js;
    js["scenario"] = sc.to_json();
    js["summary"] = summary.to_json();
    js["overhead"] = r.overhead.to_json();

    RunDir run(o.out.empty() ? "out/scenario" : o.out, o.force);
    run.write("series.csv", time_series_csv(r.series));
    run.write("summary.json", js.dump(2) + "\n");
    if (plot_data) run.write("plot.csv", plot_data_csv(r.series));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.write_manifest("scenario", raw_args, input_map(o), sc.seed, wall);
    std::cout << js.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------- export-plan --

int cmd_export_plan(const CommonOpts& o, const std::string& ck_path,
                    const std::string& placement_file, const std::string& traj_log,
                    const std::vector<std::string>& raw_args) {
    const Checkpoint ck = Checkpoint::load(ck_path);
    Topology topo = resolve_topology(o);
    const AppGraph app = resolve_app(o);
    const Placement p = load_placement(placement_file, app);
    Topology committed = topo;
    commit_placement(app, p, committed);

    CeEnv env(ck.env_cfg, app, topo, o.seed);
    env.reset_from(committed, p);
    std::optional<TrajectoryLog> log;
    if (!traj_log.empty()) log.emplace(traj_log);
    const ReschedulePlan plan = reschedule(ck, env, log ? &*log : nullptr);

    nlohmann::json j;
    j["initial_d_msa_ms"] = plan.d_initial;
    j["final_d_msa_ms"] = plan.d_final;
    j["ended_idle"] = plan.ended_idle;
    j["truncated"] = plan.truncated;
    j["moves"] = nlohmann::json::array();
    for (const auto& m : plan.moves)
        j["moves"].push_back({{"instance",
                               {{"service", app.service(m.service).name},
                                {"replica", m.replica}}},
                              {"from", m.from},
                              {"to", m.to},
                              {"predicted_d_msa_ms", m.d_after}});
    j["final_placement"] = placement_to_json(env.placement(), app);

    const std::string text = j.dump(2) + "\n";
    if (!o.out.empty()) {
        RunDir run(o.out, o.force);
        run.write("plan.json", text);
        run.write_manifest("export-plan", raw_args, input_map(o), o.seed, 0);
    }
    std::cout << text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"cloud-edge microservice rescheduling workbench"};
    cli.require_subcommand(1);
    std::vector<std::string> raw_args(argv + 1, argv + argc);

    CommonOpts train_o, compare_o, explain_o, oracle_o, scenario_o, plan_o;

    auto* train = cli.add_subcommand("train", "train a rescheduling agent");
    add_common(train, train_o);
    std::string agent = "ppo", replicas_mode = "mix";
    long steps = 100000;
    double penalty = 2.0;
    int max_steps = 50, s_max = 0;
    train->add_option("--agent", agent, "ppo or dqn");
    train->add_option("--steps", steps, "environment step budget");
    train->add_option("--replicas", replicas_mode, "per-episode replicas: integer or 'mix'");
    train->add_option("--penalty", penalty, "per-move penalty in the reward");
    train->add_option("--max-steps", max_steps, "episode step limit");
    train->add_option("--s-max", s_max, "instance slots (default: app maximum)");

    auto* compare = cli.add_subcommand("compare", "mean latency per scheduler and size");
    add_common(compare, compare_o);
    std::vector<std::string> schedulers = {"default", "cloud_first", "latency_greedy"};
    std::vector<int> replica_counts = {1, 3, 5};
    int trials = 10;
    std::string ppo_ck_path, dqn_ck_path;
    compare->add_option("--schedulers", schedulers, "subset of default, cloud_first, latency_greedy, ppo, dqn")
        ->delimiter(',');
    compare->add_option("--replicas", replica_counts, "replica counts")->delimiter(',');
    compare->add_option("--trials", trials, "random trials per cell");
    compare->add_option("--ppo-checkpoint", ppo_ck_path, "checkpoint for the ppo row");
    compare->add_option("--dqn-checkpoint", dqn_ck_path, "checkpoint for the dqn row");

    auto* explain = cli.add_subcommand("explain", "latency report for a placement");
    add_common(explain, explain_o);
    std::string placement_file;
    bool round_trip = false;
    explain->add_option("--placement", placement_file, "placement JSON file")->required();
    explain->add_flag("--round-trip", round_trip, "double inter-service latency terms");

    auto* oracle_cmd = cli.add_subcommand("oracle", "brute-force optimal placement");
    add_common(oracle_cmd, oracle_o);
    long limit = 1000000;
    oracle_cmd->add_option("--limit", limit, "enumeration limit");

    auto* scenario = cli.add_subcommand("scenario", "run a scenario experiment");
    add_common(scenario, scenario_o);
    std::string sc_file, sc_preset = "node-failure", rescheduler;
    double slo_ms = 250;
    bool plot_data = false;
    scenario->add_option("--file", sc_file, "scenario JSON file");
    scenario->add_option("--scenario", sc_preset, "preset (node-failure|traffic-surge)");
    scenario->add_option("--rescheduler", rescheduler, "checkpoint path or 'none'");
    scenario->add_option("--slo", slo_ms, "SLO for the summary, ms");
    scenario->add_flag("--plot-data", plot_data, "also write long-format plot.csv");

    auto* plan = cli.add_subcommand("export-plan", "export a rescheduling plan");
    add_common(plan, plan_o);
    std::string plan_ck, plan_placement, traj_log;
    plan->add_option("--checkpoint", plan_ck, "trained agent checkpoint")->required();
    plan->add_option("--placement", plan_placement, "current placement JSON")->required();
    plan->add_option("--traj-log", traj_log, "write a JSON-lines trajectory log");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*train)
            return cmd_train(train_o, agent, steps, replicas_mode, penalty, max_steps, s_max,
                             raw_args);
        if (*compare)
            return cmd_compare(compare_o, schedulers, replica_counts, trials, ppo_ck_path,
                               dqn_ck_path, raw_args);
        if (*explain) return cmd_explain(explain_o, placement_file, round_trip, raw_args);
        if (*oracle_cmd) return cmd_oracle(oracle_o, limit, raw_args);
        if (*scenario)
            return cmd_scenario(scenario_o, sc_file, sc_preset, rescheduler, slo_ms,
                                plot_data, scenario->count("--seed") > 0, raw_args);
        if (*plan) return cmd_export_plan(plan_o, plan_ck, plan_placement, traj_log, raw_args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
