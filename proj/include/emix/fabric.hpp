// Inter-node media models: paced links with fixed latency, and a
// store-and-forward learning switch with bounded egress queues and seeded
// i.i.d. frame loss. These machines run on virtual cycles only, so the
// in-process scheduler and the distributed processes share them verbatim
// and produce identical delivery schedules.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "emix/bridge.hpp"
#include "emix/rng.hpp"
#include "emix/types.hpp"

namespace emix {

struct LinkModel {
    Cycle latency = 1;
    uint32_t bandwidth_bytes_per_cycle = 64;
    double loss_prob = 0.0;

    void validate(bool p2p) const;
    Cycle serialize_cycles(size_t bytes) const {
        Cycle d = (bytes + bandwidth_bytes_per_cycle - 1) / bandwidth_bytes_per_cycle;
        return d ? d : 1;
    }
};

// Sender-side pacing. A frame departs at max(now, next_free) and arrives at
// departure + latency; serialization time delays later frames only.
class LinkEgress {
public:
    explicit LinkEgress(const LinkModel& m) : model_(m) {}

    Cycle depart(size_t bytes, Cycle now) {
        Cycle start = std::max(now, next_free_);
        next_free_ = start + model_.serialize_cycles(bytes);
        bytes_sent_ += bytes;
        return start;
    }

    Cycle arrival_for(Cycle departure) const { return departure + model_.latency; }
    Cycle next_free() const { return next_free_; }
    const LinkModel& model() const { return model_; }
    uint64_t bytes_sent() const { return bytes_sent_; }

private:
    LinkModel model_;
    Cycle next_free_ = 0;
    uint64_t bytes_sent_ = 0;
};

struct SwitchConfig {
    Cycle forwarding_latency = 4;
    size_t egress_queue_bytes = 64 * 1024;
    LinkModel node_link;  // identical both directions for every port
    uint64_t seed = 1;
    uint16_t port_count = 0;  // one port per node
};

struct SwitchCounters {
    uint64_t frames_forwarded = 0;
    uint64_t frames_flooded = 0;  // copies emitted while flooding
    uint64_t flood_events = 0;    // frames whose dst was unknown
    uint64_t dropped_loss = 0;
    uint64_t dropped_queue = 0;
    uint64_t dropped_runt = 0;
    uint64_t bytes_in = 0;
    uint64_t bytes_out = 0;
};

// The learning switch. submit() takes the frame's departure cycle from the
// sending node; advance() processes everything that has arrived by then, in
// (arrival, ingress port, sequence) order, and queues deliveries.
class SwitchSim {
public:
    explicit SwitchSim(const SwitchConfig& cfg);

    void submit(uint16_t ingress_port, std::vector<uint8_t> frame,
                Cycle node_departure);

    struct Delivery {
        uint16_t port;       // destination node index
        Cycle arrival;       // cycle the frame reaches the node
        std::vector<uint8_t> frame;
    };

    // Process pending ingress with arrival <= now; deliveries are appended in
    // deterministic order and drained by the caller.
    void advance(Cycle now);
    std::vector<Delivery> take_deliveries();

    // Smallest cycle at which a future submission could still be delivered;
    // used by the distributed switch to emit time promises.
    Cycle output_horizon(Cycle safe_input_cycle, uint16_t port) const;

    const SwitchCounters& counters() const { return counters_; }
    const std::map<NodeMac, uint16_t>& mac_table() const { return mac_table_; }

private:
    void forward(uint16_t egress, const std::vector<uint8_t>& frame, Cycle ready);

    struct Ingress {
        Cycle arrival;
        uint16_t port;
        uint64_t seq;
        std::vector<uint8_t> frame;
        bool operator>(const Ingress& o) const {
            if (arrival != o.arrival) return arrival > o.arrival;
            if (port != o.port) return port > o.port;
            return seq > o.seq;
        }
    };

    struct EgressPort {
        LinkEgress link;
        // (departure, bytes) of scheduled frames, for queue-occupancy checks
        std::deque<std::pair<Cycle, size_t>> scheduled;
        explicit EgressPort(const LinkModel& m) : link(m) {}
    };

    SwitchConfig cfg_;
    std::priority_queue<Ingress, std::vector<Ingress>, std::greater<Ingress>> pending_;
    uint64_t submit_seq_ = 0;
    std::map<NodeMac, uint16_t> mac_table_;
    std::vector<EgressPort> egress_;
    std::vector<Rng> loss_rng_;  // one Bernoulli stream per ingress port
    std::vector<Delivery> deliveries_;
    SwitchCounters counters_;
};

}  // namespace emix
