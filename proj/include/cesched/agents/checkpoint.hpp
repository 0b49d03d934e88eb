#ifndef CESCHED_AGENTS_CHECKPOINT_HPP
#define CESCHED_AGENTS_CHECKPOINT_HPP

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "cesched/env.hpp"
#include "cesched/nnet.hpp"

namespace cesched {

inline int argmax_masked(const VectorXd& scores, const std::vector<std::uint8_t>& mask) {
    int best = -1;
    for (int a = 0; a < scores.size(); ++a) {
        if (!mask[a]) continue;
        if (best < 0 || scores[a] > scores[best]) best = a;
    }
    if (best < 0) throw std::logic_error("argmax_masked: empty mask");
    return best;
}

/// Versioned agent checkpoint: network parameters plus the environment
/// dimensions they were trained against.
struct Checkpoint {
    std::string kind;     // "ppo" or "dqn"
    int s_max = 0;
    int n_nodes = 0;
    int obs_dim = 0;
    int act_dim = 0;
    EnvConfig env_cfg;
    Mlp policy;                // ppo: logits net; dqn: Q network
    std::optional<Mlp> value;  // ppo only

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = 1;
        j["kind"] = kind;
        j["s_max"] = s_max;
        j["n_nodes"] = n_nodes;
        j["obs_dim"] = obs_dim;
        j["act_dim"] = act_dim;
        j["env"] = env_cfg.to_json();
        j["policy"] = policy.to_json();
        if (value) j["value"] = value->to_json();
        return j;
    }

    static Checkpoint from_json(const nlohmann::json& j) {
        if (j.value("version", 0) != 1)
            throw ConfigError("checkpoint: unsupported version");
        Checkpoint c;
        c.kind = j.at("kind").get<std::string>();
        if (c.kind != "ppo" && c.kind != "dqn")
            throw ConfigError("checkpoint: unknown kind '" + c.kind + "'");
        c.s_max = j.at("s_max").get<int>();
        c.n_nodes = j.at("n_nodes").get<int>();
        c.obs_dim = j.at("obs_dim").get<int>();
        c.act_dim = j.at("act_dim").get<int>();
        c.env_cfg = EnvConfig::from_json(j.at("env"));
        c.policy = Mlp::from_json(j.at("policy"));
        if (j.contains("value")) c.value = Mlp::from_json(j["value"]);
        if (c.policy.in_dim() != c.obs_dim || c.policy.out_dim() != c.act_dim)
            throw ConfigError("checkpoint: network does not match recorded dimensions");
        return c;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw ConfigError("checkpoint: cannot write " + path);
        out << to_json().dump(2) << '\n';
    }

    static Checkpoint load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("checkpoint: cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("checkpoint: " + path + ": " + e.what());
        }
        return from_json(j);
    }

    // Checks the checkpoint against an environment before rollout.
    void check_compatible(const CeEnv& env) const {
        if (env.obs_size() != obs_dim || env.action_count() != act_dim)
            throw ConfigError("checkpoint: dimension mismatch (obs " +
                              std::to_string(env.obs_size()) + " vs " +
                              std::to_string(obs_dim) + ", actions " +
                              std::to_string(env.action_count()) + " vs " +
                              std::to_string(act_dim) + ")");
    }

    int greedy_action(const std::vector<double>& obs,
                      const std::vector<std::uint8_t>& mask) const {
        const VectorXd x = Eigen::Map<const VectorXd>(obs.data(), obs.size());
        return argmax_masked(policy.forward(x), mask);
    }
};

} // namespace cesched

#endif // CESCHED_AGENTS_CHECKPOINT_HPP
