// Evaluates the bundled chain application on the 6-node topology and prints
// the full latency breakdown for a hand-picked placement.

#include <iostream>

#include "cesched/latency_engine.hpp"
#include "cesched/presets.hpp"

int main() {
    using namespace cesched;
    Topology topo = preset_topology("paper6");
    AppGraph app = preset_app("chain", 1);

    // Front-End on an edge node, the heavier services on one cloud node.
    Placement p;
    p.assignment = {{2}, {0}, {0}, {0}};
    commit_placement(app, p, topo);

    const LatencyReport report = end_to_end(app, p, topo);
    std::cout << report.to_json(app).dump(2) << "\n";
    return 0;
}
