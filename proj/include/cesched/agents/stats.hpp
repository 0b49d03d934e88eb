#ifndef CESCHED_AGENTS_STATS_HPP
#define CESCHED_AGENTS_STATS_HPP

#include <deque>
#include <functional>
#include <vector>

#include "cesched/env.hpp"

namespace cesched {

/// Per-episode training curve with a window-100 moving average.
struct TrainStats {
    std::vector<long> episode_step;      // global env step at episode end
    std::vector<double> episode_reward;  // cumulative reward of the episode
    std::vector<double> moving_avg;      // mean of the trailing <=100 episodes
    long steps = 0;
    double wall_clock_s = 0;

    void add_episode(long step, double reward) {
        episode_step.push_back(step);
        episode_reward.push_back(reward);
        window_.push_back(reward);
        window_sum_ += reward;
        if (window_.size() > 100) {
            window_sum_ -= window_.front();
            window_.pop_front();
        }
        moving_avg.push_back(window_sum_ / static_cast<double>(window_.size()));
    }

    double final_moving_avg() const { return moving_avg.empty() ? 0.0 : moving_avg.back(); }
    size_t episodes() const { return episode_reward.size(); }

private:
    std::deque<double> window_;
    double window_sum_ = 0;
};

// Builds a fresh environment for each episode; the seed argument is derived
// deterministically from (run seed, episode index). Factories may vary the
// app's replica counts between episodes as long as s_max and the topology
// stay fixed.
using EnvFactory = std::function<CeEnv(std::uint64_t episode_seed)>;

} // namespace cesched

#endif // CESCHED_AGENTS_STATS_HPP
