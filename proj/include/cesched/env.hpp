#ifndef CESCHED_ENV_HPP
#define CESCHED_ENV_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cesched/latency_engine.hpp"
#include "cesched/rng.hpp"

namespace cesched {

struct EnvConfig {
    int s_max = 20;               // instance slots in the observation/action space
    int max_steps = 50;           // per-episode cap
    double penalty_cost = 2.0;    // per-move overhead term of the reward
    double invalid_penalty = -100.0;
    bool masking = true;
    double bg_lo = 0.0, bg_hi = 0.5; // background utilization draw range
    int reset_retries = 1000;

    nlohmann::json to_json() const {
        return {{"s_max", s_max},
                {"max_steps", max_steps},
                {"penalty_cost", penalty_cost},
                {"invalid_penalty", invalid_penalty},
                {"masking", masking},
                {"background_utilization", {bg_lo, bg_hi}},
                {"reset_retries", reset_retries}};
    }
    static EnvConfig from_json(const nlohmann::json& j) {
        EnvConfig c;
        c.s_max = j.value("s_max", c.s_max);
        c.max_steps = j.value("max_steps", c.max_steps);
        c.penalty_cost = j.value("penalty_cost", c.penalty_cost);
        c.invalid_penalty = j.value("invalid_penalty", c.invalid_penalty);
        c.masking = j.value("masking", c.masking);
        if (j.contains("background_utilization")) {
            c.bg_lo = j["background_utilization"].at(0).get<double>();
            c.bg_hi = j["background_utilization"].at(1).get<double>();
        }
        c.reset_retries = j.value("reset_retries", c.reset_retries);
        return c;
    }
};

struct StepInfo {
    double d_before = 0;
    double d_after = 0;
    bool valid = true;
    bool idle = false;
};

struct StepResult {
    std::vector<double> observation;
    double reward = 0;
    bool terminated = false;
    StepInfo info;
};

/// Step-based rescheduling environment over the latency model.
///
/// Action index i*N + j moves instance slot i to node j; index s_max*N is
/// Idle. The observation concatenates normalized availability/capacity
/// vectors, per-slot resource requests, and per-slot placement one-hots;
/// every entry lies in [0,1].
class CeEnv {
public:
    CeEnv(EnvConfig cfg, AppGraph app, Topology topo, std::uint64_t seed)
        : cfg_(cfg), app_(std::move(app)), pristine_(std::move(topo)), rng_(seed) {
        n_nodes_ = pristine_.node_count();
        if (cfg_.s_max < app_.total_instances())
            throw ConfigError("env: s_max " + std::to_string(cfg_.s_max) +
                              " < total instances " + std::to_string(app_.total_instances()));
        norm_cpu_ = pristine_.max_cpu_capacity();
        norm_mem_ = pristine_.max_mem_capacity();
        instances_ = app_.instances();
    }

    int node_count() const { return n_nodes_; }
    int action_count() const { return cfg_.s_max * n_nodes_ + 1; }
    int idle_action() const { return cfg_.s_max * n_nodes_; }
    int obs_size() const { return 4 * n_nodes_ + 2 * cfg_.s_max + cfg_.s_max * n_nodes_; }

    const EnvConfig& config() const { return cfg_; }
    const AppGraph& app() const { return app_; }
    const Topology& topology() const { return topo_; }
    const Placement& placement() const { return placement_; }
    double current_d_msa() const { return d_cur_; }
    bool terminated() const { return done_; }
    int steps_taken() const { return steps_; }
    std::vector<double> observation() const { return encode(); }

    // Random episode start: fresh background utilization, then every
    // instance placed uniformly among nodes that can host it.
    std::vector<double> reset() {
        for (int attempt = 0; attempt < cfg_.reset_retries; ++attempt) {
            topo_ = pristine_;
            topo_.draw_background(rng_, cfg_.bg_lo, cfg_.bg_hi);
            if (try_random_placement()) {
                begin_episode();
                return encode();
            }
        }
        throw InfeasibleError("env: no feasible random placement after " +
                              std::to_string(cfg_.reset_retries) + " attempts");
    }

    // Episode start from an explicit state. The topology must already carry
    // background load and the committed resources of `p`.
    std::vector<double> reset_from(Topology topo, Placement p) {
        check_placement(app_, p);
        if (topo.node_count() != n_nodes_)
            throw ConfigError("env: topology node count changed");
        for (int s = 0; s < app_.service_count(); ++s)
            for (int node : p.assignment[s])
                if (!topo.alive(node))
                    throw InfeasibleError("env: placement references dead node");
        topo_ = std::move(topo);
        placement_ = std::move(p);
        begin_episode();
        return encode();
    }

    std::vector<std::uint8_t> action_mask() const {
        std::vector<std::uint8_t> mask(action_count(), 0);
        mask[idle_action()] = 1;
        for (int i = 0; i < static_cast<int>(instances_.size()); ++i) {
            const auto& inst = instances_[i];
            const auto& spec = app_.service(inst.service);
            const int cur = placement_.assignment[inst.service][inst.replica];
            for (int j = 0; j < n_nodes_; ++j) {
                if (j == cur) continue;
                if (topo_.can_host(j, spec.req_cpu, spec.req_mem))
                    mask[i * n_nodes_ + j] = 1;
            }
        }
        return mask;
    }

    StepResult step(int action) {
        if (done_) throw std::logic_error("env: step on terminated episode");
        if (action < 0 || action >= action_count())
            throw std::out_of_range("env: action index " + std::to_string(action));
        ++steps_;
        StepResult r;
        r.info.d_before = d_cur_;
        if (action == idle_action()) {
            r.reward = 0;
            r.info.idle = true;
            r.info.d_after = d_cur_;
            done_ = true;
        } else {
            const int slot = action / n_nodes_;
            const int target = action % n_nodes_;
            if (!is_valid_move(slot, target)) {
                r.reward = cfg_.invalid_penalty;
                r.info.valid = false;
                r.info.d_after = d_cur_;
                done_ = true;
            } else {
                apply_move(slot, target);
                const double after = end_to_end_ms(app_, placement_, topo_);
                r.reward = d_cur_ - after - cfg_.penalty_cost;
                r.info.d_after = after;
                d_cur_ = after;
                done_ = steps_ >= cfg_.max_steps;
            }
        }
        r.terminated = done_;
        r.observation = encode();
        return r;
    }

private:
    bool is_valid_move(int slot, int target) const {
        if (slot >= static_cast<int>(instances_.size())) return false;
        const auto& inst = instances_[slot];
        const auto& spec = app_.service(inst.service);
        const int cur = placement_.assignment[inst.service][inst.replica];
        if (target == cur) return false;
        return topo_.can_host(target, spec.req_cpu, spec.req_mem);
    }

    // Atomic relocation: release + commit together, no transient double count.
    void apply_move(int slot, int target) {
        const auto& inst = instances_[slot];
        const auto& spec = app_.service(inst.service);
        int& node = placement_.assignment[inst.service][inst.replica];
        topo_.release(node, spec.req_cpu, spec.req_mem);
        topo_.commit(target, spec.req_cpu, spec.req_mem);
        node = target;
    }

    bool try_random_placement() {
        placement_.assignment.assign(app_.service_count(), {});
        std::vector<int> feasible;
        for (const auto& inst : instances_) {
            const auto& spec = app_.service(inst.service);
            feasible.clear();
            for (int j = 0; j < n_nodes_; ++j)
                if (topo_.can_host(j, spec.req_cpu, spec.req_mem)) feasible.push_back(j);
            if (feasible.empty()) return false;
            const int pick = feasible[uniform_int(rng_, 0, static_cast<int>(feasible.size()) - 1)];
            topo_.commit(pick, spec.req_cpu, spec.req_mem);
            placement_.assignment[inst.service].push_back(pick);
        }
        return true;
    }

    void begin_episode() {
        instances_ = app_.instances();
        steps_ = 0;
        done_ = false;
        d_cur_ = end_to_end_ms(app_, placement_, topo_);
    }

    std::vector<double> encode() const {
        std::vector<double> obs;
        obs.reserve(obs_size());
        for (int i = 0; i < n_nodes_; ++i)
            obs.push_back(topo_.alive(i) ? topo_.available_cpu(i) / norm_cpu_ : 0.0);
        for (int i = 0; i < n_nodes_; ++i)
            obs.push_back(topo_.alive(i) ? topo_.available_mem(i) / norm_mem_ : 0.0);
        for (int i = 0; i < n_nodes_; ++i)
            obs.push_back(topo_.spec(i).cpu_capacity / norm_cpu_);
        for (int i = 0; i < n_nodes_; ++i)
            obs.push_back(topo_.spec(i).mem_capacity / norm_mem_);
        for (int s = 0; s < cfg_.s_max; ++s)
            obs.push_back(s < static_cast<int>(instances_.size())
                              ? app_.service(instances_[s].service).req_cpu / norm_cpu_
                              : 0.0);
        for (int s = 0; s < cfg_.s_max; ++s)
            obs.push_back(s < static_cast<int>(instances_.size())
                              ? app_.service(instances_[s].service).req_mem / norm_mem_
                              : 0.0);
        for (int s = 0; s < cfg_.s_max; ++s) {
            int node = -1;
            if (s < static_cast<int>(instances_.size())) {
                const auto& inst = instances_[s];
                node = placement_.assignment[inst.service][inst.replica];
            }
            for (int j = 0; j < n_nodes_; ++j) obs.push_back(j == node ? 1.0 : 0.0);
        }
        return obs;
    }

    EnvConfig cfg_;
    AppGraph app_;
    Topology pristine_; // as loaded, before background/instances
    Topology topo_;     // working copy
    Placement placement_;
    std::vector<InstanceRef> instances_;
    Rng rng_;
    int n_nodes_ = 0;
    int steps_ = 0;
    bool done_ = true;
    double d_cur_ = 0;
    double norm_cpu_ = 1, norm_mem_ = 1;
};

// JSON-lines trajectory log: one record per step.
class TrajectoryLog {
public:
    explicit TrajectoryLog(const std::string& path) : out_(path) {
        if (!out_) throw ConfigError("trajectory log: cannot open " + path);
    }

    void record(int step, const std::vector<double>& obs, int action, double reward,
                double d_msa) {
        nlohmann::json j{{"step", step},
                         {"obs_hash", obs_hash(obs)},
                         {"action", action},
                         {"reward", reward},
                         {"d_msa", d_msa}};
        out_ << j.dump() << '\n';
    }

    static std::string obs_hash(const std::vector<double>& obs) {
        // FNV-1a over the raw observation bytes
        std::uint64_t h = 1469598103934665603ULL;
        const auto* bytes = reinterpret_cast<const unsigned char*>(obs.data());
        for (size_t i = 0; i < obs.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
        char buf[17];
        snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

private:
    std::ofstream out_;
};

} // namespace cesched

#endif // CESCHED_ENV_HPP
