#ifndef CESCHED_TOPOLOGY_HPP
#define CESCHED_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cesched/errors.hpp"
#include "cesched/rng.hpp"

namespace cesched {

using json = nlohmann::json;

// Units throughout: milliseconds, CPU cores (fractional), megabytes.

struct NodeSpec {
    int id = 0;
    std::string type;        // e.g. "Cloud-A", "Edge-A", "Edge-B"
    double cpu_capacity = 0; // cores
    double mem_capacity = 0; // MB
};

struct NodeState {
    double requested_cpu = 0;
    double requested_mem = 0;
    bool alive = true;
};

// Per-service execution times, keyed by node type with optional per-node
// overrides.
struct ExecutionProfile {
    std::map<std::string, std::map<std::string, double>> by_type; // service -> type -> ms
    std::map<std::string, std::map<int, double>> by_node;         // service -> node id -> ms
};

/// The heterogeneous cloud-edge continuum: node capacities and liveness,
/// inter-node and user-to-node latencies, and execution-time profiles.
/// A Topology is a value; copy it per environment instance before mutating.
class Topology {
public:
    Topology() = default;

    static Topology from_json(const json& cfg) {
        Topology t;
        if (!cfg.contains("nodes") || !cfg["nodes"].is_array() || cfg["nodes"].empty())
            throw ConfigError("topology: missing or empty 'nodes'");
        for (const auto& jn : cfg["nodes"]) {
            NodeSpec spec;
            spec.id = jn.at("id").get<int>();
            spec.type = jn.at("type").get<std::string>();
            spec.cpu_capacity = jn.at("cpu").get<double>();
            spec.mem_capacity = jn.at("mem").get<double>();
            if (spec.cpu_capacity <= 0 || spec.mem_capacity <= 0)
                throw ConfigError("topology: node " + std::to_string(spec.id) +
                                  " has non-positive capacity");
            t.specs_.push_back(spec);
        }
        const int n = static_cast<int>(t.specs_.size());
        for (int i = 0; i < n; ++i)
            if (t.specs_[i].id != i)
                throw ConfigError("topology: node ids must be dense 0..N-1");
        t.states_.assign(n, NodeState{});

        const auto& jm = cfg.at("latency_matrix");
        if (static_cast<int>(jm.size()) != n)
            throw ConfigError("topology: latency_matrix is not N x N");
        t.latency_.assign(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(jm[i].size()) != n)
                throw ConfigError("topology: latency_matrix is not square");
            for (int j = 0; j < n; ++j) {
                t.latency_[i][j] = jm[i][j].get<double>();
                if (t.latency_[i][j] < 0)
                    throw ConfigError("topology: negative latency entry");
            }
            if (t.latency_[i][i] != 0)
                throw ConfigError("topology: latency_matrix diagonal must be zero");
        }
        const bool asymmetric = cfg.value("asymmetric", false);
        if (!asymmetric) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (t.latency_[i][j] != t.latency_[j][i])
                        throw ConfigError("topology: latency_matrix not symmetric "
                                          "(set asymmetric: true to allow)");
        }

        const auto& ju = cfg.at("user_latency");
        if (static_cast<int>(ju.size()) != n)
            throw ConfigError("topology: user_latency length != N");
        t.user_.resize(n);
        for (int i = 0; i < n; ++i) {
            t.user_[i] = ju[i].get<double>();
            if (t.user_[i] < 0) throw ConfigError("topology: negative user latency");
        }

        if (cfg.contains("profiles")) {
            for (auto it = cfg["profiles"].begin(); it != cfg["profiles"].end(); ++it) {
                for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
                    double ms = jt.value().get<double>();
                    if (ms <= 0)
                        throw ConfigError("topology: profile entries must be > 0");
                    t.profile_.by_type[it.key()][jt.key()] = ms;
                }
            }
        }
        if (cfg.contains("profile_overrides")) {
            for (auto it = cfg["profile_overrides"].begin();
                 it != cfg["profile_overrides"].end(); ++it) {
                for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
                    double ms = jt.value().get<double>();
                    if (ms <= 0)
                        throw ConfigError("topology: profile overrides must be > 0");
                    t.profile_.by_node[it.key()][std::stoi(jt.key())] = ms;
                }
            }
        }

        // Fixed per-node background load, committed at load time.
        if (cfg.contains("background")) {
            const auto& jb = cfg["background"];
            if (static_cast<int>(jb.size()) != n)
                throw ConfigError("topology: background length != N");
            for (int i = 0; i < n; ++i)
                t.commit(i, jb[i].at("cpu").get<double>(), jb[i].at("mem").get<double>());
        }
        // Range for randomly drawn background utilization (fraction of capacity).
        if (cfg.contains("background_utilization")) {
            const auto& jr = cfg["background_utilization"];
            t.bg_lo_ = jr.at(0).get<double>();
            t.bg_hi_ = jr.at(1).get<double>();
            if (t.bg_lo_ < 0 || t.bg_hi_ < t.bg_lo_ || t.bg_hi_ >= 1.0)
                throw ConfigError("topology: background_utilization range invalid");
        }
        return t;
    }

    static Topology load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("topology: cannot open " + path);
        json cfg;
        try {
            in >> cfg;
        } catch (const json::exception& e) {
            throw ConfigError("topology: " + path + ": " + e.what());
        }
        return from_json(cfg);
    }

    int node_count() const { return static_cast<int>(specs_.size()); }

    const NodeSpec& spec(int node) const { return specs_.at(node); }
    const NodeState& state(int node) const { return states_.at(node); }

    double available_cpu(int node) const {
        return specs_.at(node).cpu_capacity - states_.at(node).requested_cpu;
    }
    double available_mem(int node) const {
        return specs_.at(node).mem_capacity - states_.at(node).requested_mem;
    }
    bool alive(int node) const { return states_.at(node).alive; }

    // Eq. 1 feasibility: alive and enough headroom for the request.
    bool can_host(int node, double req_cpu, double req_mem) const {
        check_node(node);
        const NodeState& st = states_[node];
        if (!st.alive) return false;
        return available_cpu(node) >= req_cpu - kSlack &&
               available_mem(node) >= req_mem - kSlack;
    }

    void commit(int node, double dcpu, double dmem) {
        check_node(node);
        NodeState& st = states_[node];
        if (st.requested_cpu + dcpu > specs_[node].cpu_capacity + kSlack ||
            st.requested_mem + dmem > specs_[node].mem_capacity + kSlack)
            throw InfeasibleError("commit exceeds capacity on node " + std::to_string(node));
        if (st.requested_cpu + dcpu < -kSlack || st.requested_mem + dmem < -kSlack)
            throw InfeasibleError("release below zero on node " + std::to_string(node));
        st.requested_cpu += dcpu;
        st.requested_mem += dmem;
    }

    void release(int node, double dcpu, double dmem) { commit(node, -dcpu, -dmem); }

    // Node failure. Callers rehome (and release) hosted instances first; a
    // dead node keeps no requests on the books.
    void kill(int node) {
        check_node(node);
        states_[node].alive = false;
        states_[node].requested_cpu = 0;
        states_[node].requested_mem = 0;
    }

    double latency(int i, int j) const { return latency_.at(i).at(j); }
    double user_latency(int node) const { return user_.at(node); }

    // E_j^i resolved through the node's type; per-node overrides win.
    double exec_time(const std::string& service, int node) const {
        check_node(node);
        auto ito = profile_.by_node.find(service);
        if (ito != profile_.by_node.end()) {
            auto itn = ito->second.find(node);
            if (itn != ito->second.end()) return itn->second;
        }
        auto its = profile_.by_type.find(service);
        if (its == profile_.by_type.end())
            throw ConfigError("no execution profile for service '" + service + "'");
        auto itt = its->second.find(specs_[node].type);
        if (itt == its->second.end())
            throw ConfigError("no execution profile for service '" + service +
                              "' on node type '" + specs_[node].type + "'");
        return itt->second;
    }

    bool has_profile(const std::string& service, int node) const {
        auto ito = profile_.by_node.find(service);
        if (ito != profile_.by_node.end() && ito->second.count(node)) return true;
        auto its = profile_.by_type.find(service);
        return its != profile_.by_type.end() && its->second.count(specs_[node].type);
    }

    // Draws non-MSA background load uniformly in [lo,hi] x capacity per
    // node and resource, on top of any fixed background.
    void draw_background(Rng& rng) { draw_background(rng, bg_lo_, bg_hi_); }
    void draw_background(Rng& rng, double lo, double hi) {
        for (int i = 0; i < node_count(); ++i) {
            if (!states_[i].alive) continue;
            const double fcpu = uniform_real(rng, lo, hi);
            const double fmem = uniform_real(rng, lo, hi);
            commit(i, fcpu * specs_[i].cpu_capacity, fmem * specs_[i].mem_capacity);
        }
    }

    double background_lo() const { return bg_lo_; }
    double background_hi() const { return bg_hi_; }

    double max_cpu_capacity() const {
        double m = 0;
        for (const auto& s : specs_) m = std::max(m, s.cpu_capacity);
        return m;
    }
    double max_mem_capacity() const {
        double m = 0;
        for (const auto& s : specs_) m = std::max(m, s.mem_capacity);
        return m;
    }

private:
    // Tolerance for accumulated floating-point drift in resource bookkeeping.
    static constexpr double kSlack = 1e-9;

    void check_node(int node) const {
        if (node < 0 || node >= node_count())
            throw ConfigError("unknown node id " + std::to_string(node));
    }

    std::vector<NodeSpec> specs_;
    std::vector<NodeState> states_;
    std::vector<std::vector<double>> latency_;
    std::vector<double> user_;
    ExecutionProfile profile_;
    double bg_lo_ = 0.0, bg_hi_ = 0.0;
};

} // namespace cesched

#endif // CESCHED_TOPOLOGY_HPP
