// Experiment configuration: JSON document in, validated plan out.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "emix/bridge.hpp"
#include "emix/fabric.hpp"
#include "emix/noc.hpp"
#include "emix/partition.hpp"
#include "emix/types.hpp"

namespace emix {

struct FabricSection {
    LinkModel p2p{4, 64, 0.0};
    LinkModel switched_link{8, 64, 0.0};
    Cycle switch_forwarding_latency = 4;
    size_t switch_queue_bytes = 64 * 1024;
    uint64_t seed = 1;

    Cycle p2p_end_to_end() const { return p2p.latency; }
    Cycle switched_end_to_end() const {
        return 2 * switched_link.latency + switch_forwarding_latency;
    }
};

struct BridgeSection {
    RetxConfig retx;
    uint16_t batch_words = 134;
    Cycle flush_cycles = 8;
    uint32_t p2p_credits = 1024;
    size_t cdc_depth = 32;
    uint32_t cdc_push_period = 1;
    uint32_t cdc_pop_period = 1;
};

enum class WorkloadKind : uint8_t { Memtest, UniformRandom, NearestNeighbor, Hotspot };
const char* workload_kind_name(WorkloadKind k);

struct WorkloadSection {
    WorkloadKind kind = WorkloadKind::Memtest;
    uint32_t words_per_core = 16;  // Memtest
    bool strict_sequential = false;
    uint32_t packets_per_tile = 8;  // synthetic workloads
    uint16_t body_len = 4;
    uint64_t seed = 1;
    TileCoord hotspot_target{0, 0};
};

struct RunSection {
    Cycle max_cycles = 10'000'000;
    std::string trace_path;       // empty = keep in memory only
    std::string word_trace_path;  // prefix; per-node suffix appended
    std::string report_path;
    uint64_t chipset_memory_words = 1u << 20;
    bool console_enabled = true;
};

struct ExperimentConfig {
    MeshConfig mesh;
    PartitionSpec partition;
    FabricSection fabric;
    BridgeSection bridge;
    WorkloadSection workload;
    RunSection run;

    void validate() const;  // every module-level invariant, plus sanity checks

    std::string to_json_string() const;
    static ExperimentConfig from_json_string(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);

    // --seed overrides both seeded streams, derived via splitmix.
    void apply_seed_override(uint64_t master);
};

// The validated, compiled form every runtime mode consumes.
struct ExperimentPlan {
    ExperimentConfig cfg;
    PartitionMap pmap;
    std::vector<CutLink> cuts;
    ChannelMap channels;
    TileCoord chipset_anchor;

    RoutingView routing() const { return {cfg.mesh, chipset_anchor}; }
    static ExperimentPlan build(const ExperimentConfig& cfg);
};

}  // namespace emix
