#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "emix/config.hpp"
#include "emix/manifest.hpp"
#include "emix/rng.hpp"

using namespace emix;

TEST_CASE("config round trip: load -> serialize -> load is identity") {
    ExperimentConfig c;
    c.mesh = {8, 8, 3, 6, 5};
    c.partition.strategy = PartitionStrategy::Grid;
    c.partition.node_count = 4;
    c.partition.grid_cols = 2;
    c.partition.grid_rows = 2;
    c.partition.p2p_pairs = {{0, 1}, {2, 3}};
    c.fabric.switched_link.loss_prob = 0.25;
    c.fabric.seed = 777;
    c.bridge.retx.window_size = 16;
    c.workload.kind = WorkloadKind::Hotspot;
    c.workload.hotspot_target = {3, 2};
    c.run.trace_path = "/tmp/x.trace";
    std::string s1 = c.to_json_string();
    ExperimentConfig c2 = ExperimentConfig::from_json_string(s1);
    std::string s2 = c2.to_json_string();
    CHECK(s1 == s2);
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS((void)ExperimentConfig::from_json_string(R"({"bogus": 1})"),
                    ConfigError);
    CHECK_THROWS_AS((void)ExperimentConfig::from_json_string(
                        R"({"mesh": {"width": 4, "depth": 9}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)ExperimentConfig::from_json_string(
                        R"({"fabric": {"p2p": {"latency": 4, "mtu": 9000}}})"),
                    ConfigError);
    CHECK_THROWS_AS((void)ExperimentConfig::from_json_string("not json at all"),
                    ConfigError);
}

TEST_CASE("validation catches cross-section inconsistencies") {
    ExperimentConfig c;
    c.mesh = {8, 8};
    c.partition.node_count = 5;
    CHECK_THROWS_AS(c.validate(), IndivisibleMesh);

    c = {};
    c.mesh = {4, 4};
    c.fabric.p2p.latency = 40;  // slower than the switched path
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = {};
    c.mesh = {4, 4};
    c.fabric.p2p.loss_prob = 0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = {};
    c.mesh = {4, 4};
    c.workload.kind = WorkloadKind::Memtest;
    c.workload.words_per_core = 1 << 20;  // exceeds chipset memory
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = {};
    c.mesh = {4, 4};
    c.workload.kind = WorkloadKind::Hotspot;
    c.workload.hotspot_target = {9, 9};
    CHECK_THROWS_AS(c.validate(), ConfigError);

    c = {};
    c.mesh = {4, 4};
    c.bridge.batch_words = 200;  // above the MTU-derived cap
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("seed override derives both stream seeds") {
    ExperimentConfig c;
    c.mesh = {4, 4};
    uint64_t f0 = c.fabric.seed, w0 = c.workload.seed;
    c.apply_seed_override(42);
    CHECK(c.fabric.seed != f0);
    CHECK(c.workload.seed != w0);
    CHECK(c.fabric.seed == derive_seed(42, 1));
    CHECK(c.workload.seed == derive_seed(42, 2));
}

TEST_CASE("plan derives anchor from the chipset node rectangle") {
    ExperimentConfig c;
    c.mesh = {8, 4};
    c.partition.strategy = PartitionStrategy::Vertical;
    c.partition.node_count = 4;
    c.partition.chipset_node = 2;
    ExperimentPlan p = ExperimentPlan::build(c);
    CHECK(p.chipset_anchor == TileCoord{4, 0});
    CHECK(p.pmap.node_rects[2].contains(p.chipset_anchor));
}

TEST_CASE("manifest round trip and stable hash") {
    ExperimentConfig c;
    c.mesh = {4, 4};
    c.partition.node_count = 2;
    c.partition.p2p_pairs = {{0, 1}};
    ExperimentPlan plan = ExperimentPlan::build(c);
    Manifest m = Manifest::from_plan(plan, 9800);
    std::string text = m.to_json_string();
    Manifest m2 = Manifest::from_json_string(text);
    CHECK(m2.to_json_string() == text);
    CHECK(m2.hash() == m.hash());
    m2.config.fabric.seed ^= 1;
    CHECK(m2.hash() != m.hash());
}

TEST_CASE("every shipped example config validates and plans") {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(EMIX_FIXTURES_DIR) / "configs";
    REQUIRE(fs::exists(dir));
    size_t count = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json") continue;
        INFO(e.path().string());
        ExperimentConfig c = ExperimentConfig::from_json_file(e.path().string());
        c.validate();
        (void)ExperimentPlan::build(c);
        ++count;
    }
    CHECK(count >= 2);
}
