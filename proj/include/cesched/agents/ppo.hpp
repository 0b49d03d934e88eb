#ifndef CESCHED_AGENTS_PPO_HPP
#define CESCHED_AGENTS_PPO_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "cesched/agents/checkpoint.hpp"
#include "cesched/agents/stats.hpp"

namespace cesched {

struct PpoConfig {
    double lr = 3e-4;
    double gamma = 0.99;
    double clip = 0.2;
    double ent_coef = 0.0;
    double vf_coef = 0.5;
    double gae_lambda = 0.95;
    double max_grad_norm = 0.5;
    int rollout_len = 2048;
    int epochs = 10;
    int minibatch = 64;
    int hidden = 64;
    long total_steps = 0;
};

struct ActResult {
    int action = 0;
    double logprob = 0;
    double value = 0;
};

// log-softmax of logits restricted to unmasked entries; masked entries get
// -inf so their probability is exactly zero.
inline VectorXd masked_log_softmax(const VectorXd& logits,
                                   const std::vector<std::uint8_t>& mask) {
    const double kNegInf = -std::numeric_limits<double>::infinity();
    double mx = kNegInf;
    for (int a = 0; a < logits.size(); ++a)
        if (mask[a]) mx = std::max(mx, logits[a]);
    double z = 0;
    for (int a = 0; a < logits.size(); ++a)
        if (mask[a]) z += std::exp(logits[a] - mx);
    const double logz = mx + std::log(z);
    VectorXd out(logits.size());
    for (int a = 0; a < logits.size(); ++a) out[a] = mask[a] ? logits[a] - logz : kNegInf;
    return out;
}

/// Samples (or argmaxes) from the mask-adjusted categorical over actions.
inline ActResult ppo_act(const Mlp& policy, const Mlp& value, const std::vector<double>& obs,
                         const std::vector<std::uint8_t>& mask, Rng& rng, bool greedy) {
    const VectorXd x = Eigen::Map<const VectorXd>(obs.data(), obs.size());
    const VectorXd logits = policy.forward(x);
    const VectorXd logp = masked_log_softmax(logits, mask);
    ActResult r;
    if (greedy) {
        r.action = argmax_masked(logits, mask);
    } else {
        const double u = uniform_real(rng, 0.0, 1.0);
        double cum = 0;
        int last_unmasked = -1;
        r.action = -1;
        for (int a = 0; a < logits.size(); ++a) {
            if (!mask[a]) continue;
            last_unmasked = a;
            cum += std::exp(logp[a]);
            if (u < cum) {
                r.action = a;
                break;
            }
        }
        if (r.action < 0) r.action = last_unmasked; // u landed in rounding tail
    }
    r.logprob = logp[r.action];
    r.value = value.forward(x)[0];
    return r;
}

// Generalized advantage estimation over a rollout segment. `terminals[t]`
// marks transitions that ended an episode; `next_value` bootstraps the value
// beyond the final transition when it did not terminate.
inline std::pair<std::vector<double>, std::vector<double>> gae(
    const std::vector<double>& rewards, const std::vector<double>& values,
    const std::vector<std::uint8_t>& terminals, double next_value, double gamma,
    double lambda) {
    if (rewards.size() != values.size() || rewards.size() != terminals.size())
        throw ConfigError("gae: length mismatch");
    const int n = static_cast<int>(rewards.size());
    std::vector<double> adv(n, 0), ret(n, 0);
    double last = 0;
    for (int t = n - 1; t >= 0; --t) {
        const double nonterminal = terminals[t] ? 0.0 : 1.0;
        const double v_next = (t == n - 1) ? next_value : values[t + 1];
        const double delta = rewards[t] + gamma * v_next * nonterminal - values[t];
        last = delta + gamma * lambda * nonterminal * last;
        adv[t] = last;
        ret[t] = adv[t] + values[t];
    }
    return {adv, ret};
}

struct RolloutBatch {
    MatrixXd obs;   // obs_dim x B
    MatrixXd mask;  // act_dim x B, entries 0/1
    std::vector<int> actions;
    VectorXd old_logprob;
    VectorXd advantages;
    VectorXd returns;
};

struct LossStats {
    double policy_loss = 0;
    double value_loss = 0;
    double entropy = 0;
    double approx_kl = 0;
    double clip_frac = 0;
};

/// Clipped-surrogate update: `epochs` passes of shuffled minibatches over
/// the batch. Advantages are normalized once per batch. Returns per-epoch
/// mean loss statistics.
inline std::vector<LossStats> ppo_update(Mlp& policy, Mlp& value, Adam& opt_policy,
                                         Adam& opt_value, const RolloutBatch& batch,
                                         const PpoConfig& cfg, Rng& rng) {
    const int B = static_cast<int>(batch.actions.size());
    if (B == 0) throw ConfigError("ppo_update: empty batch");
    VectorXd adv = batch.advantages;
    const double mean = adv.mean();
    const double stdev = std::sqrt((adv.array() - mean).square().mean());
    adv = ((adv.array() - mean) / (stdev + 1e-8)).matrix();

    std::vector<int> idx(B);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<LossStats> out;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        LossStats ep{};
        int n_mb = 0;
        for (int start = 0; start < B; start += cfg.minibatch) {
            const int b = std::min(cfg.minibatch, B - start);
            MatrixXd X(batch.obs.rows(), b), M(batch.mask.rows(), b);
            for (int k = 0; k < b; ++k) {
                X.col(k) = batch.obs.col(idx[start + k]);
                M.col(k) = batch.mask.col(idx[start + k]);
            }
            Mlp::Cache pc, vc;
            MatrixXd logits = policy.forward_batch(X, &pc);
            const MatrixXd v = value.forward_batch(X, &vc);

            // masked log-softmax per column
            MatrixXd logp(logits.rows(), b);
            for (int k = 0; k < b; ++k) {
                double mx = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < logits.rows(); ++a)
                    if (M(a, k) > 0.5) mx = std::max(mx, logits(a, k));
                double z = 0;
                for (int a = 0; a < logits.rows(); ++a)
                    if (M(a, k) > 0.5) z += std::exp(logits(a, k) - mx);
                const double logz = mx + std::log(z);
                for (int a = 0; a < logits.rows(); ++a)
                    logp(a, k) = M(a, k) > 0.5
                                     ? logits(a, k) - logz
                                     : -std::numeric_limits<double>::infinity();
            }

            MatrixXd dlogits = MatrixXd::Zero(logits.rows(), b);
            MatrixXd dv = MatrixXd::Zero(1, b);
            LossStats mb{};
            for (int k = 0; k < b; ++k) {
                const int i = idx[start + k];
                const int a = batch.actions[i];
                const double lr_new = logp(a, k);
                const double logratio = lr_new - batch.old_logprob[i];
                const double ratio = std::exp(logratio);
                const double A = adv[i];
                const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
                const double pg1 = -A * ratio, pg2 = -A * clipped;
                mb.policy_loss += std::max(pg1, pg2);
                mb.approx_kl += (ratio - 1.0) - logratio;
                if (std::abs(ratio - 1.0) > cfg.clip) mb.clip_frac += 1.0;
                if (pg1 >= pg2) {
                    // gradient flows through the unclipped ratio
                    const double coeff = -A * ratio / b;
                    for (int ai = 0; ai < logits.rows(); ++ai) {
                        if (M(ai, k) < 0.5) continue;
                        const double p = std::exp(logp(ai, k));
                        dlogits(ai, k) += coeff * ((ai == a ? 1.0 : 0.0) - p);
                    }
                }
                double H = 0;
                for (int ai = 0; ai < logits.rows(); ++ai)
                    if (M(ai, k) > 0.5) H -= std::exp(logp(ai, k)) * logp(ai, k);
                mb.entropy += H;
                // entropy bonus gradient (coefficient is 0 in the paper's
                // setting; kept for completeness)
                if (cfg.ent_coef != 0.0) {
                    for (int ai = 0; ai < logits.rows(); ++ai) {
                        if (M(ai, k) < 0.5) continue;
                        const double p = std::exp(logp(ai, k));
                        dlogits(ai, k) += cfg.ent_coef / b * p * (logp(ai, k) + H);
                    }
                }
                const double verr = v(0, k) - batch.returns[i];
                mb.value_loss += 0.5 * verr * verr;
                dv(0, k) = cfg.vf_coef * verr / b;
            }
            mb.policy_loss /= b;
            mb.value_loss /= b;
            mb.entropy /= b;
            mb.approx_kl /= b;
            mb.clip_frac /= b;
            if (!std::isfinite(mb.policy_loss) || !std::isfinite(mb.value_loss))
                throw NumericError("ppo_update: non-finite loss (policy " +
                                   std::to_string(mb.policy_loss) + ", value " +
                                   std::to_string(mb.value_loss) + ")");

            Grads gp = policy.backward_batch(pc, dlogits);
            Grads gv = value.backward_batch(vc, dv);
            clip_grad_norm({&gp, &gv}, cfg.max_grad_norm);
            opt_policy.step(policy, gp);
            opt_value.step(value, gv);

            ep.policy_loss += mb.policy_loss;
            ep.value_loss += mb.value_loss;
            ep.entropy += mb.entropy;
            ep.approx_kl += mb.approx_kl;
            ep.clip_frac += mb.clip_frac;
            ++n_mb;
        }
        ep.policy_loss /= n_mb;
        ep.value_loss /= n_mb;
        ep.entropy /= n_mb;
        ep.approx_kl /= n_mb;
        ep.clip_frac /= n_mb;
        out.push_back(ep);
    }
    return out;
}

struct PpoResult {
    Checkpoint checkpoint;
    TrainStats stats;
};

/// Rollout/update loop to the step budget. Deterministic for a fixed seed
/// (single worker). A zero budget returns the freshly initialized nets.
inline PpoResult train_ppo(const EnvFactory& factory, const PpoConfig& cfg,
                           std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng = make_rng(derive_seed(seed, 0x9907'0000ULL));
    std::uint64_t episode = 0;
    CeEnv env = factory(derive_seed(seed, episode));
    std::vector<double> obs = env.reset();
    std::vector<std::uint8_t> mask = env.action_mask();

    const int obs_dim = env.obs_size(), act_dim = env.action_count();
    Mlp policy({obs_dim, cfg.hidden, cfg.hidden, act_dim}, rng, 0.01);
    Mlp value({obs_dim, cfg.hidden, cfg.hidden, 1}, rng, 1.0);
    Adam opt_policy(policy, cfg.lr), opt_value(value, cfg.lr);

    PpoResult result;
    result.stats.steps = 0;
    double ep_reward = 0;

    while (result.stats.steps < cfg.total_steps) {
        const int len = static_cast<int>(
            std::min<long>(cfg.rollout_len, cfg.total_steps - result.stats.steps));
        RolloutBatch batch;
        batch.obs.resize(obs_dim, len);
        batch.mask.resize(act_dim, len);
        batch.actions.resize(len);
        batch.old_logprob.resize(len);
        std::vector<double> rewards(len), values(len);
        std::vector<std::uint8_t> terminals(len);
        bool last_done = false;

        for (int t = 0; t < len; ++t) {
            const ActResult act = ppo_act(policy, value, obs, mask, rng, false);
            if (!mask[act.action])
                throw std::logic_error("train_ppo: sampled a masked action");
            batch.obs.col(t) = Eigen::Map<const VectorXd>(obs.data(), obs.size());
            for (int a = 0; a < act_dim; ++a) batch.mask(a, t) = mask[a] ? 1.0 : 0.0;
            batch.actions[t] = act.action;
            batch.old_logprob[t] = act.logprob;
            values[t] = act.value;

            const StepResult sr = env.step(act.action);
            rewards[t] = sr.reward;
            terminals[t] = sr.terminated ? 1 : 0;
            ep_reward += sr.reward;
            ++result.stats.steps;
            last_done = sr.terminated;
            if (sr.terminated) {
                result.stats.add_episode(result.stats.steps, ep_reward);
                ep_reward = 0;
                ++episode;
                env = factory(derive_seed(seed, episode));
                obs = env.reset();
            } else {
                obs = sr.observation;
            }
            mask = env.action_mask();
        }

        double next_value = 0;
        if (!last_done) {
            const VectorXd x = Eigen::Map<const VectorXd>(obs.data(), obs.size());
            next_value = value.forward(x)[0];
        }
        auto [adv, ret] = gae(rewards, values, terminals, next_value, cfg.gamma,
                              cfg.gae_lambda);
        batch.advantages = Eigen::Map<VectorXd>(adv.data(), adv.size());
        batch.returns = Eigen::Map<VectorXd>(ret.data(), ret.size());
        ppo_update(policy, value, opt_policy, opt_value, batch, cfg, rng);
    }

    result.checkpoint.kind = "ppo";
    result.checkpoint.s_max = env.config().s_max;
    result.checkpoint.n_nodes = env.node_count();
    result.checkpoint.obs_dim = obs_dim;
    result.checkpoint.act_dim = act_dim;
    result.checkpoint.env_cfg = env.config();
    result.checkpoint.policy = std::move(policy);
    result.checkpoint.value = std::move(value);
    result.stats.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

} // namespace cesched

#endif // CESCHED_AGENTS_PPO_HPP
