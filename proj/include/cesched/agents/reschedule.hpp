#ifndef CESCHED_AGENTS_RESCHEDULE_HPP
#define CESCHED_AGENTS_RESCHEDULE_HPP

#include <vector>

#include "cesched/agents/checkpoint.hpp"

namespace cesched {

struct PlanMove {
    int service = 0, replica = 0, from = 0, to = 0;
    double d_after = 0;
};

struct ReschedulePlan {
    std::vector<PlanMove> moves;
    std::vector<int> actions; // includes the final Idle when present
    bool ended_idle = false;
    bool truncated = false; // hit the episode step limit before Idle
    double d_initial = 0, d_final = 0;
};

/// Greedy policy rollout from the environment's current state; the ordered
/// move list a rescheduling plan is built from. The env must be freshly
/// reset (reset() or reset_from()).
inline ReschedulePlan reschedule(const Checkpoint& ck, CeEnv& env,
                                 TrajectoryLog* log = nullptr) {
    ck.check_compatible(env);
    if (env.terminated()) throw std::logic_error("reschedule: env not reset");
    ReschedulePlan plan;
    plan.d_initial = env.current_d_msa();
    plan.d_final = plan.d_initial;
    std::vector<double> obs = env.observation();
    const auto instances = env.app().instances();
    while (!env.terminated()) {
        const auto mask = env.action_mask();
        const int action = ck.greedy_action(obs, mask);
        if (!mask[action]) throw std::logic_error("reschedule: picked a masked action");
        if (action == env.idle_action()) {
            const StepResult sr = env.step(action);
            plan.actions.push_back(action);
            if (log) log->record(env.steps_taken(), sr.observation, action, sr.reward,
                                 sr.info.d_after);
            plan.ended_idle = true;
            break;
        }
        const auto& inst = instances[action / env.node_count()];
        const int from = env.placement().assignment[inst.service][inst.replica];
        const StepResult sr = env.step(action);
        plan.actions.push_back(action);
        if (log) log->record(env.steps_taken(), sr.observation, action, sr.reward,
                             sr.info.d_after);
        plan.moves.push_back({inst.service, inst.replica, from,
                              action % env.node_count(), sr.info.d_after});
        plan.d_final = sr.info.d_after;
        obs = sr.observation;
    }
    plan.truncated = !plan.ended_idle;
    return plan;
}

} // namespace cesched

#endif // CESCHED_AGENTS_RESCHEDULE_HPP
