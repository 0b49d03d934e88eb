#ifndef CESCHED_IO_HPP
#define CESCHED_IO_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cesched/agents/stats.hpp"
#include "cesched/harness.hpp"

namespace cesched {

// Deterministic number formatting for CSV output (fixed 6 decimals).
inline std::string fmt(double v) {
    char buf[64];
    snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// step, episode, reward, moving_avg — wall-clock lives in the run manifest.
inline std::string train_curve_csv(const TrainStats& stats) {
    std::ostringstream out;
    out << "step,episode,reward,moving_avg\n";
    for (size_t i = 0; i < stats.episode_reward.size(); ++i)
        out << stats.episode_step[i] << ',' << (i + 1) << ',' << fmt(stats.episode_reward[i])
            << ',' << fmt(stats.moving_avg[i]) << '\n';
    return out.str();
}

inline std::string time_series_csv(const TimeSeries& ts) {
    std::ostringstream out;
    out << "tick,d_model_ms,observed_ms,rps,threads,total_replicas,moves,"
           "node_failures,scale_events,autoscale_capped\n";
    for (const auto& r : ts.rows)
        out << r.tick << ',' << fmt(r.d_model) << ',' << fmt(r.observed) << ',' << fmt(r.rps)
            << ',' << r.threads << ',' << r.total_replicas << ',' << r.moves << ','
            << r.node_failures << ',' << r.scale_events << ',' << (r.autoscale_capped ? 1 : 0)
            << '\n';
    return out.str();
}

// Long-format (tick, series, value) table for plotting tools.
inline std::string plot_data_csv(const TimeSeries& ts) {
    std::ostringstream out;
    out << "tick,series,value\n";
    for (const auto& r : ts.rows) {
        out << r.tick << ",observed_ms," << fmt(r.observed) << '\n';
        out << r.tick << ",d_model_ms," << fmt(r.d_model) << '\n';
        out << r.tick << ",rps," << fmt(r.rps) << '\n';
        if (r.moves > 0) out << r.tick << ",reschedule_marker," << r.moves << '\n';
        if (r.node_failures > 0) out << r.tick << ",failure_marker," << r.node_failures << '\n';
        if (r.scale_events != 0) out << r.tick << ",scale_marker," << r.scale_events << '\n';
    }
    return out.str();
}

/// Output directory with overwrite protection and a manifest tying the run
/// together: command, inputs, seed, and a combined hash of every artifact.
class RunDir {
public:
    RunDir(std::string dir, bool force) : dir_(std::move(dir)), force_(force) {
        std::filesystem::create_directories(dir_);
    }

    std::string path(const std::string& name) const {
        return (std::filesystem::path(dir_) / name).string();
    }

    void write(const std::string& name, const std::string& content) {
        const std::string p = path(name);
        if (!force_ && std::filesystem::exists(p))
            throw ConfigError(p + " exists (pass --force to overwrite)");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + p);
        out << content;
        hashes_[name] = hex64(fnv1a64(content));
    }

    void write_manifest(const std::string& command, const std::vector<std::string>& args,
                        const std::map<std::string, std::string>& inputs,
                        std::uint64_t seed, double wall_clock_s) {
        nlohmann::json j;
        j["command"] = command;
        j["args"] = args;
        j["inputs"] = inputs;
        j["seed"] = seed;
        j["out_dir"] = dir_;
        j["wall_clock_s"] = wall_clock_s;
        j["created_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count();
        std::uint64_t combined = 1469598103934665603ULL;
        for (const auto& [name, h] : hashes_) {
            j["outputs"][name] = h;
            combined = fnv1a64(hex64(combined) + name + h);
        }
        j["artifact_hash"] = hex64(combined);
        const std::string p = path("manifest.json");
        std::ofstream out(p);
        if (!out) throw ConfigError("cannot write " + p);
        out << j.dump(2) << '\n';
    }

private:
    std::string dir_;
    bool force_;
    std::map<std::string, std::string> hashes_;
};

// Placement file format: {"assignment": {"service-name": [node, ...], ...}}
inline Placement placement_from_json(const nlohmann::json& j, const AppGraph& app) {
    Placement p;
    p.assignment.assign(app.service_count(), {});
    const auto& ja = j.contains("assignment") ? j["assignment"] : j;
    for (int s = 0; s < app.service_count(); ++s) {
        const auto& name = app.service(s).name;
        if (!ja.contains(name))
            throw ConfigError("placement: missing service '" + name + "'");
        p.assignment[s] = ja[name].get<std::vector<int>>();
    }
    check_placement(app, p);
    return p;
}

inline nlohmann::json placement_to_json(const Placement& p, const AppGraph& app) {
    nlohmann::json ja;
    for (int s = 0; s < app.service_count(); ++s)
        ja[app.service(s).name] = p.assignment[s];
    return {{"assignment", ja}};
}

inline Placement load_placement(const std::string& path, const AppGraph& app) {
    std::ifstream in(path);
    if (!in) throw ConfigError("placement: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("placement: " + path + ": " + e.what());
    }
    return placement_from_json(j, app);
}

} // namespace cesched

#endif // CESCHED_IO_HPP
