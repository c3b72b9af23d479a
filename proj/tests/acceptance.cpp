// Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
// exits nonzero if any criterion fails.
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "emix/bridge.hpp"
#include "emix/dist.hpp"
#include "emix/manifest.hpp"
#include "emix/runtime.hpp"
#include "emix/trace.hpp"

using namespace emix;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int criterion, bool ok, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
                what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

ExperimentConfig memtest_config(uint16_t w, uint16_t h, PartitionStrategy strat,
                                uint16_t nodes, uint32_t words,
                                std::vector<std::pair<uint16_t, uint16_t>> pairs) {
    ExperimentConfig c;
    c.mesh = {w, h};
    c.partition.strategy = strat;
    c.partition.node_count = nodes;
    c.partition.p2p_pairs = std::move(pairs);
    c.workload.kind = WorkloadKind::Memtest;
    c.workload.words_per_core = words;
    c.run.max_cycles = 20'000'000;
    return c;
}

// The paper's setup: 64 cores on 8 nodes, vertical slices, four Aurora pairs
// bridged over the switch.
ExperimentConfig paper_config(uint32_t words) {
    return memtest_config(8, 8, PartitionStrategy::Vertical, 8, words,
                          {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
}

struct Combo {
    std::string name;
    ExperimentConfig cfg;
};

std::vector<Combo> transparency_combos() {
    std::vector<Combo> out;
    out.push_back({"8x8 vertical/8 memtest (paper)", paper_config(16)});
    out.push_back({"8x8 horizontal/4 memtest",
                   memtest_config(8, 8, PartitionStrategy::Horizontal, 4, 8,
                                  {{0, 1}, {2, 3}})});
    {
        ExperimentConfig c = memtest_config(8, 8, PartitionStrategy::Grid, 8, 8,
                                            {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
        c.partition.grid_cols = 4;
        c.partition.grid_rows = 2;
        out.push_back({"8x8 grid 4x2 memtest", c});
    }
    {
        ExperimentConfig c = memtest_config(4, 4, PartitionStrategy::Vertical, 2, 0, {});
        c.workload.kind = WorkloadKind::UniformRandom;
        c.workload.packets_per_tile = 20;
        c.workload.body_len = 3;
        c.workload.seed = 11;
        out.push_back({"4x4 vertical/2 uniform-random (all switched)", c});
    }
    {
        ExperimentConfig c =
            memtest_config(4, 4, PartitionStrategy::Horizontal, 4, 0, {{1, 2}});
        c.workload.kind = WorkloadKind::Hotspot;
        c.workload.hotspot_target = {1, 1};
        c.workload.packets_per_tile = 10;
        c.workload.body_len = 2;
        c.workload.seed = 5;
        out.push_back({"4x4 horizontal/4 hotspot", c});
    }
    {
        ExperimentConfig c =
            memtest_config(6, 6, PartitionStrategy::Vertical, 3, 0, {{0, 1}});
        c.workload.kind = WorkloadKind::NearestNeighbor;
        c.workload.packets_per_tile = 12;
        c.workload.body_len = 4;
        out.push_back({"6x6 vertical/3 nearest-neighbor", c});
    }
    out.push_back({"2x2 vertical/2 memtest",
                   memtest_config(2, 2, PartitionStrategy::Vertical, 2, 4,
                                  {{0, 1}})});
    return out;
}

// Criteria 1 and 3 share the runs; the validator is live on all of them.
void criteria_1_and_3() {
    bool all_equal = true;
    uint64_t violations = 0, credit_viol = 0, conservation_viol = 0;
    std::string detail;
    RunOptions opt{true, true};
    for (const Combo& combo : transparency_combos()) {
        ExperimentPlan plan = ExperimentPlan::build(combo.cfg);
        RunResult mono = run_monolithic(plan, opt);
        RunResult part = run_partitioned(plan, opt);
        violations += mono.stream_violations + part.stream_violations;
        credit_viol += mono.credit_violations + part.credit_violations;
        conservation_viol +=
            mono.conservation_violations + part.conservation_violations;
        bool ok = mono.report.status == RunStatus::Ok &&
                  part.report.status == RunStatus::Ok &&
                  compare_traces(mono.trace, part.trace).equal;
        if (!ok) {
            all_equal = false;
            detail += " [" + combo.name + " diverged]";
        }
    }
    verdict(1, all_equal,
            "partition transparency over 7 (mesh, partition) combinations" + detail);
    verdict(3, violations == 0 && credit_viol == 0 && conservation_viol == 0,
            "wormhole stream validator: " + std::to_string(violations) +
                " interleavings, " + std::to_string(credit_viol) +
                " credit violations, " + std::to_string(conservation_viol) +
                " conservation violations");
}

void criterion_2() {
    ExperimentConfig base = paper_config(64);
    base.fabric.seed = 20260809;
    RunResult lossless = run_partitioned(ExperimentPlan::build(base));
    bool ok = lossless.report.status == RunStatus::Ok &&
              lossless.report.bridge.retransmits == 0;
    std::string detail;
    for (double p : {0.05, 0.1, 0.2}) {
        ExperimentConfig c = base;
        c.fabric.switched_link.loss_prob = p;
        RunResult r = run_partitioned(ExperimentPlan::build(c));
        bool this_ok = r.report.status == RunStatus::Ok &&
                       r.report.workload_success &&
                       r.report.bridge.retransmits > 0 &&
                       r.report.bridge.delivered_duplicates == 0 &&
                       compare_traces(lossless.trace, r.trace).equal;
        ok &= this_ok;
        detail += " p=" + std::to_string(p).substr(0, 4) +
                  (this_ok ? " ok(retx=" + std::to_string(r.report.bridge.retransmits) + ")"
                           : " FAILED");
    }
    verdict(2, ok, "ARQ reliability, memtest 64x64 under loss:" + detail);
}

void criteria_4_and_5() {
    ExperimentConfig c = paper_config(16);
    ExperimentPlan plan = ExperimentPlan::build(c);
    RunResult mono = run_monolithic(plan);
    RunResult dual = run_partitioned(plan);

    ExperimentConfig all_sw = c;
    all_sw.partition.p2p_pairs.clear();
    RunResult swonly = run_partitioned(ExperimentPlan::build(all_sw));

    bool statuses = mono.report.status == RunStatus::Ok &&
                    dual.report.status == RunStatus::Ok &&
                    swonly.report.status == RunStatus::Ok;
    double ratio = mono.report.completion_cycles
                       ? double(dual.report.completion_cycles) /
                             double(mono.report.completion_cycles)
                       : 0.0;
    bool c4 = statuses &&
              dual.report.completion_cycles > mono.report.completion_cycles &&
              swonly.report.completion_cycles >= dual.report.completion_cycles;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "overhead ordering: mono=%llu < dual=%llu <= all-switched=%llu, "
                  "slowdown ratio %.2f (paper reference 3.0)",
                  (unsigned long long)mono.report.completion_cycles,
                  (unsigned long long)dual.report.completion_cycles,
                  (unsigned long long)swonly.report.completion_cycles, ratio);
    verdict(4, c4, buf);

    uint64_t p2p = dual.report.fabric.p2p_bytes;
    uint64_t sw = dual.report.fabric.switched_bytes;
    bool c5 = statuses && p2p > 0 && sw > 0 && p2p + sw == dual.node_tx_bytes;
    verdict(5, c5,
            "path split: p2p=" + std::to_string(p2p) + " + switched=" +
                std::to_string(sw) + " == node-side total " +
                std::to_string(dual.node_tx_bytes));
}

void criterion_6() {
    uint64_t checked = 0, mismatches = 0;
    for (uint16_t w = 1; w <= 8; ++w)
        for (uint16_t h = 1; h <= 8; ++h) {
            MeshConfig mesh{w, h};
            auto brute = [&](const PartitionMap& pm) {
                std::vector<CutLink> cuts;
                for (uint16_t y = 0; y < h; ++y)
                    for (uint16_t x = 0; x < w; ++x) {
                        TileCoord a{x, y};
                        TileCoord nb[2] = {{uint16_t(x + 1), y}, {x, uint16_t(y + 1)}};
                        for (TileCoord b : nb) {
                            if (!mesh.contains(b)) continue;
                            if (pm.node_of(a) == pm.node_of(b)) continue;
                            for (uint8_t pl = 0; pl < 3; ++pl) {
                                cuts.push_back({a, b, pl});
                                cuts.push_back({b, a, pl});
                            }
                        }
                    }
                std::sort(cuts.begin(), cuts.end());
                return cuts;
            };
            for (int strat = 0; strat < 2; ++strat) {
                uint16_t dim = strat == 0 ? w : h;
                for (uint16_t n = 1; n <= dim; ++n) {
                    if (dim % n) continue;
                    PartitionSpec s;
                    s.strategy = strat == 0 ? PartitionStrategy::Vertical
                                            : PartitionStrategy::Horizontal;
                    s.node_count = n;
                    PartitionMap pm = partition(mesh, s);
                    if (cut_links(mesh, pm) != brute(pm)) ++mismatches;
                    ++checked;
                }
            }
        }
    verdict(6, mismatches == 0,
            "cut-link oracle over " + std::to_string(checked) +
                " partitions of meshes up to 8x8, " + std::to_string(mismatches) +
                " mismatches");
}

void criterion_7() {
    fs::path dir = fs::path(EMIX_FIXTURES_DIR) / "golden";
    std::ifstream idx(dir / "index.json");
    if (!idx) {
        verdict(7, false, "golden fixtures missing");
        return;
    }
    json index = json::parse(idx);
    size_t frames = 0, data_frames = 0;
    uint64_t bad_decode = 0, surviving_corruptions = 0, flips = 0;
    for (const json& e : index) {
        std::ifstream f(dir / e.at("file").get<std::string>(), std::ios::binary);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
        ++frames;
        auto r = eth_decode(bytes);
        bool is_data = e.at("type") == "data";
        bool ok = is_data ? r.status == EthDecodeStatus::Data
                          : r.status == EthDecodeStatus::Ack;
        ok = ok && r.frame.src == NodeMac::for_node(e.at("src_node").get<uint8_t>());
        ok = ok && r.frame.dst == NodeMac::for_node(e.at("dst_node").get<uint8_t>());
        ok = ok && r.frame.seq == e.at("seq").get<uint32_t>();
        ok = ok && r.frame.ack == e.at("ack").get<uint32_t>();
        const json& jw = e.at("words");
        ok = ok && r.frame.words.size() == jw.size();
        if (ok)
            for (size_t i = 0; i < jw.size(); ++i) {
                const StreamWord& w = r.frame.words[i];
                ok = ok && w.channel == jw[i].at("channel").get<uint16_t>() &&
                     w.data == jw[i].at("data").get<uint64_t>() &&
                     int(w.kind) == jw[i].at("kind").get<int>() &&
                     w.last == jw[i].at("last").get<bool>();
            }
        if (!ok) ++bad_decode;
        if (is_data) {
            ++data_frames;
            for (size_t bit = 0; bit < bytes.size() * 8; ++bit) {
                auto copy = bytes;
                copy[bit / 8] ^= uint8_t(1u << (bit % 8));
                ++flips;
                if (eth_decode(copy).status != EthDecodeStatus::Corrupt)
                    ++surviving_corruptions;
            }
        }
    }
    bool ok = frames == 20 && data_frames >= 16 && bad_decode == 0 &&
              surviving_corruptions == 0;
    verdict(7, ok,
            "golden vectors: " + std::to_string(frames) + " fixtures, " +
                std::to_string(flips) + " exhaustive single-bit corruptions, " +
                std::to_string(surviving_corruptions) + " undetected");
}

int wait_exit(pid_t pid) {
    int st = 0;
    waitpid(pid, &st, 0);
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

pid_t spawn(const std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = fork();
    if (pid == 0) {
        // Quiet children; diagnostics still reach the parent via exit codes.
        execv(argv[0], argv.data());
        _exit(127);
    }
    return pid;
}

void criterion_8() {
    ExperimentConfig c = memtest_config(2, 2, PartitionStrategy::Vertical, 2, 8, {});
    c.fabric.seed = 99;
    std::string tmp = "/tmp/emix_acc8_" + std::to_string(getpid());
    c.run.word_trace_path = tmp + ".words";
    c.run.trace_path = tmp + ".trace";
    ExperimentPlan plan = ExperimentPlan::build(c);
    RunResult part = run_partitioned(plan);

    Manifest m = Manifest::from_plan(
        plan, uint16_t(23000 + (getpid() * 13) % 18000));
    std::string cfg_path = tmp + ".json", man_path = tmp + ".manifest.json";
    {
        std::ofstream os(cfg_path);
        os << c.to_json_string() << "\n";
        std::ofstream ms(man_path);
        ms << m.to_json_string() << "\n";
    }
    const std::string bin = EMIX_BIN;
    std::vector<pid_t> pids;
    pids.push_back(spawn({bin, "run", cfg_path, "--mode", "dist", "--switch",
                          "--manifest", man_path}));
    pids.push_back(spawn({bin, "run", cfg_path, "--mode", "dist", "--node", "0",
                          "--manifest", man_path}));
    pids.push_back(spawn({bin, "run", cfg_path, "--mode", "dist", "--node", "1",
                          "--manifest", man_path}));
    bool ok = part.report.status == RunStatus::Ok;
    for (pid_t p : pids) ok &= wait_exit(p) == 0;
    std::string detail;
    if (ok) {
        for (uint16_t n = 0; n < 2 && ok; ++n) {
            WordTraceBuffer dist =
                read_word_trace_file(tmp + ".words.node" + std::to_string(n));
            std::string why;
            ok &= word_traces_equal(part.word_traces[n], dist, &why);
            if (!why.empty()) detail = " node" + std::to_string(n) + ": " + why;
        }
    } else {
        detail = " (process exit codes nonzero)";
    }
    verdict(8, ok,
            "distributed mode (2 nodes + switch over sockets) matches in-process "
            "word traces" +
                detail);
    for (const char* sfx : {".json", ".manifest.json", ".words.node0",
                            ".words.node1", ".trace.node0", ".trace.node1"})
        std::remove((tmp + sfx).c_str());
}

void criterion_9() {
    ExperimentConfig c = paper_config(16);
    std::string tmp = "/tmp/emix_acc9_" + std::to_string(getpid());
    std::vector<std::string> contents;
    for (int i = 0; i < 3; ++i) {
        ExperimentPlan plan = ExperimentPlan::build(c);
        RunResult r = run_partitioned(plan);
        std::string path = tmp + "." + std::to_string(i);
        write_trace_file(path, r.trace);
        std::ifstream is(path, std::ios::binary);
        contents.emplace_back((std::istreambuf_iterator<char>(is)),
                              std::istreambuf_iterator<char>());
        std::remove(path.c_str());
    }
    bool ok = contents[0] == contents[1] && contents[1] == contents[2] &&
              !contents[0].empty();
    verdict(9, ok, "three same-seed runs produced byte-identical trace files");
}

}  // namespace

int main() {
    criteria_1_and_3();
    criterion_2();
    criteria_4_and_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
