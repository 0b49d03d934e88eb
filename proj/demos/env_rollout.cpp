// Steps the rescheduling environment with random unmasked actions and
// prints the latency trajectory of one episode.

#include <iostream>

#include "cesched/env.hpp"
#include "cesched/presets.hpp"

int main() {
    using namespace cesched;
    EnvConfig cfg;
    cfg.s_max = 20;
    CeEnv env(cfg, preset_app("chain", 3), preset_topology("paper6"), 7);
    env.reset();
    Rng rng = make_rng(7);

    std::cout << "start d_msa = " << env.current_d_msa() << " ms\n";
    while (!env.terminated()) {
        const auto mask = env.action_mask();
        std::vector<int> unmasked;
        for (int a = 0; a < static_cast<int>(mask.size()); ++a)
            if (mask[a]) unmasked.push_back(a);
        const int action = unmasked[uniform_int(rng, 0, static_cast<int>(unmasked.size()) - 1)];
        const StepResult r = env.step(action);
        std::cout << "action " << action << "  reward " << r.reward << "  d_msa "
                  << r.info.d_after << " ms\n";
        if (env.steps_taken() >= 8) break;
    }
    return 0;
}
