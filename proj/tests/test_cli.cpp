#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emix/config.hpp"
#include "emix/manifest.hpp"
#include "emix/metrics.hpp"
#include "emix/rng.hpp"

using namespace emix;
namespace fs = std::filesystem;

namespace {

struct Cli {
    fs::path dir;

    Cli() {
        dir = fs::path("/tmp") / ("emix_cli_" + std::to_string(getpid()));
        fs::create_directories(dir);
    }
    ~Cli() { fs::remove_all(dir); }

    int run(const std::string& args, std::string* out = nullptr) const {
        fs::path tmp = dir / "cmd.out";
        std::string cmd = std::string(EMIX_BIN) + " " + args + " >" + tmp.string() +
                          " 2>&1";
        int st = std::system(cmd.c_str());
        if (out) {
            std::ifstream is(tmp);
            std::stringstream ss;
            ss << is.rdbuf();
            *out = ss.str();
        }
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }

    fs::path write(const std::string& name, const std::string& text) const {
        fs::path p = dir / name;
        std::ofstream os(p);
        os << text;
        return p;
    }
};

std::string small_config_json(const std::string& trace, const std::string& report,
                              uint16_t nodes = 2) {
    ExperimentConfig c;
    c.mesh = {2, 2};
    c.partition.node_count = nodes;
    if (nodes == 2) c.partition.p2p_pairs = {{0, 1}};
    c.workload.kind = WorkloadKind::Memtest;
    c.workload.words_per_core = 4;
    c.run.max_cycles = 200000;
    c.run.trace_path = trace;
    c.run.report_path = report;
    return c.to_json_string();
}

}  // namespace

TEST_CASE("partition: paper config yields an 8-node manifest and summary") {
    Cli cli;
    ExperimentConfig c;
    c.mesh = {8, 8};
    c.partition.node_count = 8;
    c.partition.p2p_pairs = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
    fs::path cfg = cli.write("paper.json", c.to_json_string());
    fs::path man = cli.dir / "manifest.json";
    std::string out;
    int rc = cli.run("partition " + cfg.string() + " -o " + man.string(), &out);
    CHECK(rc == 0);
    CHECK(out.find("8 node(s)") != std::string::npos);
    CHECK(out.find("path p2p") != std::string::npos);
    CHECK(out.find("path switched") != std::string::npos);
    Manifest m = Manifest::from_json_file(man.string());
    CHECK(m.node_eps.size() == 8);
    // 8 tiles per node, summary says so
    CHECK(out.find("(8 tiles)") != std::string::npos);
}

TEST_CASE("partition: indivisible mesh exits nonzero with a diagnostic") {
    Cli cli;
    ExperimentConfig c;
    c.mesh = {8, 8};
    c.partition.node_count = 5;
    fs::path cfg = cli.write("bad.json", c.to_json_string());
    std::string out;
    int rc = cli.run("partition " + cfg.string() + " -o " + (cli.dir / "m.json").string(),
                     &out);
    CHECK(rc == 1);
    CHECK(out.find("divide") != std::string::npos);
}

TEST_CASE("partition: single node config produces zero cut links") {
    Cli cli;
    ExperimentConfig c;
    c.mesh = {4, 4};
    c.partition.node_count = 1;
    fs::path cfg = cli.write("one.json", c.to_json_string());
    std::string out;
    int rc = cli.run("partition " + cfg.string() + " -o " + (cli.dir / "m.json").string(),
                     &out);
    CHECK(rc == 0);
    CHECK(out.find("cut links: 0") != std::string::npos);
}

TEST_CASE("run mono + run part + compare reports Equal, seed flag wins") {
    Cli cli;
    fs::path mono_trace = cli.dir / "mono.trace";
    fs::path part_trace = cli.dir / "part.trace";
    fs::path report = cli.dir / "report.json";
    fs::path cfg = cli.write(
        "cfg.json", small_config_json(mono_trace.string(), report.string()));
    CHECK(cli.run("run " + cfg.string() + " --mode mono --seed 5 --check") == 0);

    MetricsReport r1 = MetricsReport::from_json_string([&] {
        std::ifstream is(report);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }());
    CHECK(r1.seed_fabric == derive_seed(5, 1));  // flag beat the config seed
    CHECK(r1.seed_workload == derive_seed(5, 2));
    CHECK(r1.mode == "mono");
    CHECK(r1.workload_success);

    fs::path cfg2 = cli.write(
        "cfg2.json", small_config_json(part_trace.string(), report.string()));
    CHECK(cli.run("run " + cfg2.string() + " --mode part --seed 5") == 0);
    std::string out;
    CHECK(cli.run("compare " + mono_trace.string() + " " + part_trace.string(),
                  &out) == 0);
    CHECK(out.find("Equal") != std::string::npos);
}

TEST_CASE("compare exits 1 with a diff for differing traces, 2 on bad files") {
    Cli cli;
    fs::path a = cli.write("a.trace",
                           "#emix-trace v1\np 0 0 0 1 1 0 aa\n");
    fs::path b = cli.write("b.trace",
                           "#emix-trace v1\np 0 0 0 1 1 0 bb\n");
    std::string out;
    CHECK(cli.run("compare " + a.string() + " " + b.string(), &out) == 1);
    CHECK(out.find("Diff") != std::string::npos);
    CHECK(out.find("plane 0") != std::string::npos);
    CHECK(cli.run("compare " + a.string() + " /nonexistent.trace", &out) == 2);
}

TEST_CASE("report renders table and csv") {
    Cli cli;
    fs::path report = cli.dir / "r.json";
    fs::path cfg = cli.write("cfg.json", small_config_json("", report.string()));
    REQUIRE(cli.run("run " + cfg.string() + " --mode part") == 0);
    std::string table, csv;
    CHECK(cli.run("report " + report.string(), &table) == 0);
    CHECK(table.find("completion_cycles") != std::string::npos);
    CHECK(table.find("p2p bytes") != std::string::npos);
    CHECK(cli.run("report " + report.string() + " --format csv", &csv) == 0);
    CHECK(csv.substr(0, 7) == "from_x,");
    // one header + one row per nonzero link
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 2);
}

TEST_CASE("run dist without peers exits with the PeerUnreachable code") {
    Cli cli;
    ExperimentConfig c;
    c.mesh = {2, 2};
    c.partition.node_count = 2;
    c.workload.kind = WorkloadKind::Memtest;
    c.workload.words_per_core = 2;
    Manifest m = Manifest::from_plan(ExperimentPlan::build(c),
                                     uint16_t(24000 + getpid() % 1000));
    m.dist.connect_timeout_ms = 400;
    fs::path cfg = cli.write("cfg.json", c.to_json_string());
    fs::path man = cli.write("man.json", m.to_json_string());
    CHECK(cli.run("run " + cfg.string() + " --mode dist --node 0 --manifest " +
                  man.string()) == 5);
}

TEST_CASE("run rejects an unknown mode and a missing dist role") {
    Cli cli;
    fs::path cfg = cli.write("cfg.json", small_config_json("", ""));
    CHECK(cli.run("run " + cfg.string() + " --mode warp") == 1);
    CHECK(cli.run("run " + cfg.string() + " --mode dist") == 1);
}

TEST_CASE("lossy partitioned trace still compares Equal against monolithic") {
    Cli cli;
    fs::path mono_trace = cli.dir / "mono.trace";
    fs::path lossy_trace = cli.dir / "lossy.trace";
    ExperimentConfig c;
    c.mesh = {2, 2};
    c.partition.node_count = 2;  // all switched
    c.workload.kind = WorkloadKind::Memtest;
    c.workload.words_per_core = 6;
    c.fabric.switched_link.loss_prob = 0.1;
    c.run.max_cycles = 2000000;
    c.run.trace_path = mono_trace.string();
    fs::path cfg1 = cli.write("c1.json", c.to_json_string());
    CHECK(cli.run("run " + cfg1.string() + " --mode mono") == 0);
    c.run.trace_path = lossy_trace.string();
    fs::path cfg2 = cli.write("c2.json", c.to_json_string());
    CHECK(cli.run("run " + cfg2.string() + " --mode part") == 0);
    std::string out;
    CHECK(cli.run("compare " + mono_trace.string() + " " + lossy_trace.string(),
                  &out) == 0);  // ARQ hides the loss
}
