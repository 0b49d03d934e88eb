#include <catch2/catch_amalgamated.hpp>

#include "cesched/presets.hpp"
#include "cesched/topology.hpp"
#include "support/builders.hpp"

using namespace cesched;
using cesched_tests::make_topology;
using cesched_tests::zero_matrix;

TEST_CASE("testbed topology preset loads with six worker nodes") {
    Topology t = preset_topology("paper6");
    REQUIRE(t.node_count() == 6);
    CHECK(t.spec(0).type == "Cloud-A");
    CHECK(t.spec(0).cpu_capacity == 8);
    CHECK(t.spec(0).mem_capacity == 16384);
    CHECK(t.spec(2).type == "Edge-A");
    CHECK(t.spec(2).cpu_capacity == 4);
    CHECK(t.spec(4).type == "Edge-B");
    CHECK(t.spec(4).cpu_capacity == 2);
    // cross-domain 50 ms, intra-domain 0.5 ms
    CHECK(t.latency(0, 1) == 0.5);
    CHECK(t.latency(0, 2) == 50.0);
    CHECK(t.latency(2, 4) == 0.5);
    CHECK(t.latency(3, 3) == 0.0);
    // users sit next to the edge
    CHECK(t.user_latency(0) == 50.0);
    CHECK(t.user_latency(3) == 0.5);
}

TEST_CASE("single-node zero-latency topology is valid") {
    Topology t = make_topology({0}, zero_matrix(1), {{"svc", {{"T0", 1.0}}}});
    CHECK(t.node_count() == 1);
    CHECK(t.exec_time("svc", 0) == 1.0);
}

TEST_CASE("malformed topology configs are rejected") {
    json good = preset_topology_json("paper6");

    json bad = good;
    bad["nodes"][1]["mem"] = -1;
    CHECK_THROWS_AS(Topology::from_json(bad), ConfigError);

    bad = good;
    bad["latency_matrix"][0].push_back(1.0);
    CHECK_THROWS_AS(Topology::from_json(bad), ConfigError);

    bad = good;
    bad["latency_matrix"][0][1] = -5.0;
    CHECK_THROWS_AS(Topology::from_json(bad), ConfigError);

    bad = good;
    bad["nodes"][2]["id"] = 7;
    CHECK_THROWS_AS(Topology::from_json(bad), ConfigError);

    SECTION("asymmetry needs the explicit flag") {
        json asym = good;
        asym["latency_matrix"][0][1] = 3.0;
        CHECK_THROWS_AS(Topology::from_json(asym), ConfigError);
        asym["asymmetric"] = true;
        Topology t = Topology::from_json(asym);
        CHECK(t.latency(0, 1) == 3.0);
        CHECK(t.latency(1, 0) == 0.5);
    }
}

TEST_CASE("can_host admits boundary equality and excludes dead nodes") {
    Topology t = make_topology({0}, zero_matrix(1), {{"svc", {{"T0", 1.0}}}}, 1.0, 1024);
    t.commit(0, 0.5, 512);
    CHECK(t.can_host(0, 0.5, 256));
    CHECK_FALSE(t.can_host(0, 0.6, 256));
    CHECK_FALSE(t.can_host(0, 0.5, 513));
    t.kill(0);
    CHECK_FALSE(t.can_host(0, 0.1, 1));
    CHECK_THROWS_AS(t.can_host(3, 0.1, 1), ConfigError);
}

TEST_CASE("commit and release book-keeping") {
    Topology t = make_topology({0}, zero_matrix(1), {{"svc", {{"T0", 1.0}}}}, 1.0, 1024);
    t.commit(0, 0.5, 100);
    CHECK(t.available_cpu(0) == Catch::Approx(0.5));
    CHECK_THROWS_AS(t.commit(0, 0.6, 0), InfeasibleError);
    t.release(0, 0.5, 100);
    CHECK(t.available_cpu(0) == Catch::Approx(1.0));
    CHECK(t.available_mem(0) == Catch::Approx(1024));
    CHECK_THROWS_AS(t.release(0, 0.1, 0), InfeasibleError);
}

TEST_CASE("capacity constraint holds under random commit/release sequences") {
    Rng rng = make_rng(42);
    Topology t = make_topology({0, 0}, zero_matrix(2), {{"svc", {{"T0", 1}, {"T1", 1}}}},
                               4.0, 4096);
    std::vector<std::pair<double, double>> held[2];
    for (int step = 0; step < 500; ++step) {
        const int node = uniform_int(rng, 0, 1);
        if (uniform_int(rng, 0, 1) == 0 || held[node].empty()) {
            const double c = uniform_real(rng, 0.01, 1.0), m = uniform_real(rng, 1, 1000);
            if (t.can_host(node, c, m)) {
                t.commit(node, c, m);
                held[node].push_back({c, m});
            } else {
                CHECK_THROWS_AS(t.commit(node, 5.0, 0), InfeasibleError);
            }
        } else {
            auto [c, m] = held[node].back();
            held[node].pop_back();
            t.release(node, c, m);
        }
        for (int i = 0; i < 2; ++i) {
            CHECK(t.state(i).requested_cpu <= t.spec(i).cpu_capacity + 1e-9);
            CHECK(t.state(i).requested_mem <= t.spec(i).mem_capacity + 1e-9);
            CHECK(t.state(i).requested_cpu >= -1e-9);
        }
    }
    // drain and compare with the pristine state
    for (int node = 0; node < 2; ++node)
        while (!held[node].empty()) {
            auto [c, m] = held[node].back();
            held[node].pop_back();
            t.release(node, c, m);
        }
    CHECK(t.available_cpu(0) == Catch::Approx(4.0).margin(1e-9));
    CHECK(t.available_mem(1) == Catch::Approx(4096).margin(1e-9));
}

TEST_CASE("can_host is monotone in the request") {
    Rng rng = make_rng(7);
    Topology t = make_topology({0}, zero_matrix(1), {{"svc", {{"T0", 1.0}}}}, 2.0, 2048);
    t.commit(0, uniform_real(rng, 0, 1.5), uniform_real(rng, 0, 1500));
    for (int i = 0; i < 200; ++i) {
        const double c = uniform_real(rng, 0, 2.5), m = uniform_real(rng, 0, 2500);
        if (t.can_host(0, c, m)) {
            CHECK(t.can_host(0, c * uniform_real(rng, 0, 1), m));
            CHECK(t.can_host(0, c, m * uniform_real(rng, 0, 1)));
        }
    }
}

TEST_CASE("execution profile is keyed by node type") {
    Topology t = make_topology({0, 0}, zero_matrix(2), json{}, 8, 8192);
    json cfg = {{"nodes",
                 {{{"id", 0}, {"type", "Cloud-A"}, {"cpu", 8}, {"mem", 16384}},
                  {{"id", 1}, {"type", "Cloud-A"}, {"cpu", 8}, {"mem", 16384}},
                  {{"id", 2}, {"type", "Edge-A"}, {"cpu", 4}, {"mem", 8192}}}},
                {"latency_matrix", cesched_tests::zero_matrix(3)},
                {"user_latency", {0, 0, 0}},
                {"profiles", {{"ml", {{"Cloud-A", 100.0}, {"Edge-A", 150.0}}}}}};
    Topology tt = Topology::from_json(cfg);
    CHECK(tt.exec_time("ml", 0) == 100.0);
    CHECK(tt.exec_time("ml", 1) == tt.exec_time("ml", 0)); // same type, same value
    CHECK(tt.exec_time("ml", 2) == 150.0);                 // the 1.5x edge factor
    CHECK_THROWS_AS(tt.exec_time("unknown", 0), ConfigError);

    SECTION("per-node override wins over the type entry") {
        cfg["profile_overrides"] = {{"ml", {{"1", 42.0}}}};
        Topology to = Topology::from_json(cfg);
        CHECK(to.exec_time("ml", 0) == 100.0);
        CHECK(to.exec_time("ml", 1) == 42.0);
    }

    SECTION("missing type entry is an error") {
        cfg["nodes"].push_back({{"id", 3}, {"type", "Edge-B"}, {"cpu", 2}, {"mem", 4096}});
        cfg["latency_matrix"] = cesched_tests::zero_matrix(4);
        cfg["user_latency"] = {0, 0, 0, 0};
        Topology tb = Topology::from_json(cfg);
        CHECK_THROWS_AS(tb.exec_time("ml", 3), ConfigError);
    }
}

TEST_CASE("background draws stay within the configured range") {
    json cfg = preset_topology_json("paper6");
    cfg["background_utilization"] = {0.2, 0.4};
    Topology t = Topology::from_json(cfg);
    Rng rng = make_rng(3);
    t.draw_background(rng);
    for (int i = 0; i < t.node_count(); ++i) {
        const double fcpu = t.state(i).requested_cpu / t.spec(i).cpu_capacity;
        const double fmem = t.state(i).requested_mem / t.spec(i).mem_capacity;
        CHECK(fcpu >= 0.2);
        CHECK(fcpu <= 0.4);
        CHECK(fmem >= 0.2);
        CHECK(fmem <= 0.4);
    }
}

TEST_CASE("fixed background is committed at load time") {
    json cfg = preset_topology_json("paper6");
    cfg["background"] = json::array();
    for (int i = 0; i < 6; ++i) cfg["background"].push_back({{"cpu", 1.0}, {"mem", 256.0}});
    Topology t = Topology::from_json(cfg);
    CHECK(t.available_cpu(0) == Catch::Approx(7.0));
    CHECK(t.available_mem(5) == Catch::Approx(4096 - 256));
}
