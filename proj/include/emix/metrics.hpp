// Run observers and the report they aggregate into.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "emix/partition.hpp"
#include "emix/types.hpp"

namespace emix {

struct BridgeCounters {
    uint64_t retransmits = 0;
    uint64_t dup_drops = 0;             // out-of-sequence frames discarded
    uint64_t delivered_duplicates = 0;  // must stay 0
    uint64_t corrupt_frames = 0;
    uint64_t wrong_destination = 0;
    uint64_t unknown_channel = 0;
    uint64_t link_failures = 0;

    BridgeCounters& operator+=(const BridgeCounters& o);
};

struct FabricCounters {
    uint64_t p2p_bytes = 0;
    uint64_t switched_bytes = 0;
    uint64_t frames_sent = 0;
    uint64_t dropped_loss = 0;
    uint64_t dropped_queue = 0;
    uint64_t flood_events = 0;

    FabricCounters& operator+=(const FabricCounters& o);
};

struct LatencyStats {
    uint64_t count = 0;
    Cycle p50 = 0, p95 = 0, max = 0;
    double mean = 0.0;
};

struct LinkUtil {
    TileCoord from, to;
    uint8_t plane;
    uint64_t flits;
    double utilization;  // flits / completion_cycles
};

enum class RunStatus : uint8_t { Ok, Timeout, LinkFailure };
const char* run_status_name(RunStatus s);

struct MetricsReport {
    int schema_version = 1;
    std::string mode;  // mono | part | dist
    RunStatus status = RunStatus::Ok;
    Cycle completion_cycles = 0;
    uint64_t packets_injected = 0;
    uint64_t packets_delivered = 0;
    uint64_t flits_injected = 0;
    uint64_t flits_ejected = 0;
    FabricCounters fabric;
    BridgeCounters bridge;
    // cross-cut packet latency (injection to ejection, in cycles)
    LatencyStats cut_latency;
    double mean_latency_p2p_only = 0.0;  // packets whose cuts were all P2P
    double mean_latency_switched = 0.0;  // packets crossing >= 1 switched cut
    uint64_t count_p2p_only = 0;
    uint64_t count_switched = 0;
    std::vector<LinkUtil> per_link;  // nonzero links, canonical order
    uint64_t console_lines = 0;
    bool workload_success = false;
    uint64_t seed_fabric = 0;
    uint64_t seed_workload = 0;
    std::vector<std::string> errors;

    std::string to_json_string() const;
    static MetricsReport from_json_string(const std::string& s);
    std::string render_table() const;
    std::string render_csv() const;
};

// Flow classification for cross-cut latency: which kinds of cut a packet's
// XY route traverses.
enum class CutClass : uint8_t { None, P2pOnly, Switched };

// Per-run collector. In-process runs share one hub across nodes so that
// cross-node latencies can be matched; distributed nodes each own a hub with
// cross-node latency disabled.
class MetricsHub {
public:
    MetricsHub(const PartitionMap& pmap, const PartitionSpec& spec,
               TileCoord chipset_anchor, bool cross_node_latency);

    void on_inject(Cycle now, const Packet& p);
    void on_deliver(Cycle now, const Packet& p);
    void on_link_flit(TileCoord from, TileCoord to, uint8_t plane);

    uint64_t packets_injected = 0;
    uint64_t packets_delivered = 0;
    uint64_t flits_injected = 0;
    uint64_t flits_ejected = 0;
    Cycle last_delivery_cycle = 0;

    // Fills everything the hub observed; counters owned elsewhere (bridge,
    // fabric) are merged by the runtime.
    void finalize(MetricsReport& r, Cycle completion) const;

private:
    CutClass classify(TileCoord src, TileCoord dest) const;

    PartitionMap pmap_;
    PartitionSpec spec_;
    TileCoord anchor_;
    bool cross_latency_;
    using FlowKey = std::tuple<uint16_t, uint16_t, uint16_t, uint16_t, uint8_t>;
    std::map<FlowKey, std::deque<Cycle>> inflight_;
    std::map<FlowKey, CutClass> class_cache_;
    std::vector<Cycle> cut_samples_;
    std::vector<Cycle> p2p_only_samples_;
    std::vector<Cycle> switched_samples_;
    std::map<std::tuple<uint16_t, uint16_t, uint16_t, uint16_t, uint8_t>, uint64_t>
        link_flits_;
};

// Online wormhole stream validator: checks that every (link, plane) flit
// stream is a concatenation of complete packets with consistent body_len.
class LinkStreamValidator {
public:
    void on_flit(TileCoord from, TileCoord to, uint8_t plane, const Flit& f);
    uint64_t violations() const { return violations_; }

private:
    struct St {
        uint32_t remaining = 0;  // body flits still expected
    };
    std::map<std::tuple<uint16_t, uint16_t, uint16_t, uint16_t, uint8_t>, St> st_;
    uint64_t violations_ = 0;
};

}  // namespace emix
