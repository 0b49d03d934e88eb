#ifndef CESCHED_AGENTS_DQN_HPP
#define CESCHED_AGENTS_DQN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "cesched/agents/checkpoint.hpp"
#include "cesched/agents/stats.hpp"

namespace cesched {

struct DqnConfig {
    double lr = 3e-4;
    double gamma = 0.99;
    double exploration_fraction = 0.1; // budget fraction over which eps anneals
    double final_eps = 0.02;
    double max_grad_norm = 10.0;
    int replay_capacity = 100000;
    int batch = 64;
    int target_sync = 1000; // env steps between hard target copies (tau = 1)
    int train_freq = 4;
    int hidden = 64;
    long total_steps = 0;
};

// TD target with the max restricted to unmasked next-state actions.
inline double dqn_target(const VectorXd& q_next, const std::vector<std::uint8_t>& next_mask,
                         double reward, bool done, double gamma) {
    if (done) return reward;
    return reward + gamma * q_next[argmax_masked(q_next, next_mask)];
}

inline double dqn_epsilon(long step, const DqnConfig& cfg) {
    const double horizon =
        std::max(1.0, cfg.exploration_fraction * static_cast<double>(cfg.total_steps));
    const double frac = std::min(1.0, static_cast<double>(step) / horizon);
    return 1.0 + frac * (cfg.final_eps - 1.0);
}

// eps-greedy restricted to unmasked actions.
inline int dqn_act(const Mlp& q, const std::vector<double>& obs,
                   const std::vector<std::uint8_t>& mask, double eps, Rng& rng) {
    if (uniform_real(rng, 0.0, 1.0) < eps) {
        std::vector<int> unmasked;
        for (int a = 0; a < static_cast<int>(mask.size()); ++a)
            if (mask[a]) unmasked.push_back(a);
        return unmasked[uniform_int(rng, 0, static_cast<int>(unmasked.size()) - 1)];
    }
    const VectorXd x = Eigen::Map<const VectorXd>(obs.data(), obs.size());
    return argmax_masked(q.forward(x), mask);
}

namespace detail {

// Ring-buffer replay. Observations are stored as float to keep the default
// 100k capacity within a few hundred MB.
struct Replay {
    struct Transition {
        std::vector<float> obs, next_obs;
        std::vector<std::uint8_t> next_mask;
        int action = 0;
        float reward = 0;
        bool done = false;
    };

    explicit Replay(int capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (static_cast<int>(buf_.size()) < capacity_) {
            buf_.push_back(std::move(t));
        } else {
            buf_[head_] = std::move(t);
        }
        head_ = (head_ + 1) % capacity_;
    }

    int size() const { return static_cast<int>(buf_.size()); }
    const Transition& at(int i) const { return buf_[i]; }

private:
    int capacity_;
    int head_ = 0;
    std::vector<Transition> buf_;
};

} // namespace detail

struct DqnResult {
    Checkpoint checkpoint;
    TrainStats stats;
};

/// Replay-buffer Q-learning over the masked action space: annealed
/// eps-greedy behaviour policy, TD(0) targets from a hard-synced target
/// network, MSE loss on the taken action.
inline DqnResult train_dqn(const EnvFactory& factory, const DqnConfig& cfg,
                           std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(derive_seed(seed, 0xD9D9'0000ULL));
    std::uint64_t episode = 0;
    CeEnv env = factory(derive_seed(seed, episode));
    std::vector<double> obs = env.reset();
    std::vector<std::uint8_t> mask = env.action_mask();

    const int obs_dim = env.obs_size(), act_dim = env.action_count();
    Mlp q({obs_dim, cfg.hidden, cfg.hidden, cfg.hidden, act_dim}, rng, 1.0);
    Mlp target = q;
    Adam opt(q, cfg.lr);
    detail::Replay replay(cfg.replay_capacity);

    DqnResult result;
    double ep_reward = 0;

    auto to_float = [](const std::vector<double>& v) {
        return std::vector<float>(v.begin(), v.end());
    };

    while (result.stats.steps < cfg.total_steps) {
        const double eps = dqn_epsilon(result.stats.steps, cfg);
        const int action = dqn_act(q, obs, mask, eps, rng);
        if (!mask[action]) throw std::logic_error("train_dqn: picked a masked action");
        const StepResult sr = env.step(action);
        ++result.stats.steps;
        ep_reward += sr.reward;

        detail::Replay::Transition tr;
        tr.obs = to_float(obs);
        tr.next_obs = to_float(sr.observation);
        tr.action = action;
        tr.reward = static_cast<float>(sr.reward);
        tr.done = sr.terminated;
        if (sr.terminated) {
            tr.next_mask.assign(act_dim, 0); // unused when done
            result.stats.add_episode(result.stats.steps, ep_reward);
            ep_reward = 0;
            ++episode;
            env = factory(derive_seed(seed, episode));
            obs = env.reset();
        } else {
            obs = sr.observation;
        }
        mask = env.action_mask();
        if (!tr.done) tr.next_mask = mask;
        replay.push(std::move(tr));

        // warmup: no updates until one batch is buffered
        if (replay.size() >= cfg.batch && result.stats.steps % cfg.train_freq == 0) {
            const int B = cfg.batch;
            MatrixXd X(obs_dim, B), Xn(obs_dim, B);
            std::vector<int> acts(B);
            std::vector<double> targets(B);
            std::vector<int> picks(B);
            for (int k = 0; k < B; ++k) picks[k] = uniform_int(rng, 0, replay.size() - 1);
            for (int k = 0; k < B; ++k) {
                const auto& t = replay.at(picks[k]);
                for (int i = 0; i < obs_dim; ++i) X(i, k) = t.obs[i];
                for (int i = 0; i < obs_dim; ++i) Xn(i, k) = t.next_obs[i];
                acts[k] = t.action;
            }
            const MatrixXd qn = target.forward_batch(Xn);
            for (int k = 0; k < B; ++k) {
                const auto& t = replay.at(picks[k]);
                targets[k] = dqn_target(qn.col(k), t.next_mask, t.reward, t.done, cfg.gamma);
            }
            Mlp::Cache cache;
            const MatrixXd qv = q.forward_batch(X, &cache);
            MatrixXd dq = MatrixXd::Zero(act_dim, B);
            double loss = 0;
            for (int k = 0; k < B; ++k) {
                const double err = qv(acts[k], k) - targets[k];
                loss += 0.5 * err * err;
                dq(acts[k], k) = err / B;
            }
            if (!std::isfinite(loss))
                throw NumericError("train_dqn: non-finite TD loss");
            Grads g = q.backward_batch(cache, dq);
            clip_grad_norm({&g}, cfg.max_grad_norm);
            opt.step(q, g);
        }
        if (result.stats.steps % cfg.target_sync == 0) target = q;
    }

    result.checkpoint.kind = "dqn";
    result.checkpoint.s_max = env.config().s_max;
    result.checkpoint.n_nodes = env.node_count();
    result.checkpoint.obs_dim = obs_dim;
    result.checkpoint.act_dim = act_dim;
    result.checkpoint.env_cfg = env.config();
    result.checkpoint.policy = std::move(q);
    result.stats.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

} // namespace cesched

#endif // CESCHED_AGENTS_DQN_HPP
