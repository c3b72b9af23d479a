// One emulation node: a sub-mesh, its tile drivers (and chipset when this
// node hosts it), and per-peer transport/bridge pipelines. The node is
// driven one virtual cycle at a time and exchanges opaque frames with the
// fabric; identical inputs produce identical behavior in every mode.
#pragma once

#include <memory>
#include <queue>
#include <set>

#include "emix/bridge.hpp"
#include "emix/config.hpp"
#include "emix/fabric.hpp"
#include "emix/mesh_sim.hpp"
#include "emix/metrics.hpp"
#include "emix/trace.hpp"
#include "emix/transport.hpp"
#include "emix/workload.hpp"

namespace emix {

inline constexpr uint16_t kSwitchSource = 0xFFFF;

struct NodeView {
    uint16_t index = 0;
    TileRect rect;
    bool is_chipset = true;
    bool partitioned = false;  // false = monolithic (no channels registered)
};

class NodeSim {
public:
    struct TxFrame {
        ChannelPath path;
        uint16_t peer;  // destination node (switched: final dst, rides uplink)
        Cycle departure;
        std::vector<uint8_t> bytes;
    };

    NodeSim(const ExperimentPlan& plan, const NodeView& view, MetricsHub* hub);

    void step(Cycle now);
    std::vector<TxFrame> take_tx();
    // source: peer node index (p2p) or kSwitchSource; arrival may be in the
    // future, the frame is held until its cycle.
    void rx_frame(uint16_t source, std::vector<uint8_t> bytes, Cycle arrival);

    bool done() const { return done_; }
    bool failed() const { return failed_; }
    const std::string& failure() const { return failure_; }
    Cycle completion_cycle() const { return completion_cycle_; }

    const BridgeCounters& bridge_counters() const { return bridge_counters_; }
    const TraceBuffer& trace() const { return trace_; }
    const WordTraceBuffer& word_trace() const { return word_trace_; }
    const ChipsetSim* chipset() const { return chipset_.get(); }
    SubMesh& submesh() { return submesh_; }
    NodeMac mac() const { return mac_; }
    uint16_t index() const { return view_.index; }
    bool workload_failed() const;
    uint64_t tx_bytes_p2p() const { return tx_bytes_p2p_; }
    uint64_t tx_bytes_switched() const { return tx_bytes_switched_; }
    uint64_t tx_frames_count() const { return tx_frames_count_; }

    // Per-connection pacing horizons, used by the distributed runtime to
    // emit time promises.
    Cycle uplink_next_free() const { return uplink_ ? uplink_->next_free() : 0; }
    Cycle p2p_next_free(uint16_t peer) const;

    // Extra per-flit hook (stream validator); may be set after construction.
    std::function<void(TileCoord, TileCoord, uint8_t, const Flit&)> on_link_flit_extra;

private:
    struct PeerLink {
        uint16_t peer;
        ChannelPath path;
        NodeMac peer_mac;
        // tx
        ChannelMux mux;
        CdcFifo tx_cdc;
        std::vector<StreamWord> batch;
        Cycle batch_start = 0;
        RetxSender retx;
        CreditState credits;                    // p2p sender view
        std::unique_ptr<LinkEgress> p2p_egress; // p2p only
        // rx
        RetxReceiver rx_retx;
        std::deque<StreamWord> rx_staging;
        CdcFifo rx_cdc;
        uint32_t pending_credit_return = 0;
        Cycle last_credit_frame = 0;
        std::map<uint16_t, size_t> rx_channels;  // channel id -> ingress idx

        PeerLink(uint16_t p, ChannelPath pa, const BridgeSection& b)
            : peer(p),
              path(pa),
              tx_cdc(b.cdc_depth, b.cdc_push_period, b.cdc_pop_period),
              retx(b.retx),
              credits(b.p2p_credits),
              rx_cdc(b.cdc_depth, b.cdc_push_period, b.cdc_pop_period) {}
    };

    struct InboundFrame {
        Cycle arrival;
        uint16_t source;
        uint64_t seq;
        std::vector<uint8_t> bytes;
        bool operator>(const InboundFrame& o) const {
            if (arrival != o.arrival) return arrival > o.arrival;
            if (source != o.source) return source > o.source;
            return seq > o.seq;
        }
    };

    void process_inbox(Cycle now);
    void handle_p2p(Cycle now, PeerLink& l, std::span<const uint8_t> bytes);
    void handle_switched(Cycle now, std::span<const uint8_t> bytes);
    void rx_pipeline(Cycle now, PeerLink& l);
    void tx_pipeline(Cycle now, PeerLink& l);
    void flush_batch(Cycle now, PeerLink& l, bool force);
    void emit_switched(Cycle now, uint16_t peer, std::vector<uint8_t> bytes);
    void emit_p2p(Cycle now, PeerLink& l, std::vector<uint8_t> bytes);
    void deliver(Cycle now, const Packet& p);
    void inject(const Packet& p, TileCoord at);
    void fail(const std::string& why);
    PeerLink* link_for_mac(NodeMac m);

    ExperimentPlan plan_;
    NodeView view_;
    MetricsHub* hub_;
    NodeMac mac_;
    SubMesh submesh_;
    std::vector<std::unique_ptr<TileDriver>> drivers_;  // per local tile
    std::unique_ptr<ChipsetSim> chipset_;
    std::vector<std::unique_ptr<PeerLink>> peers_;  // ascending peer index
    std::unique_ptr<LinkEgress> uplink_;            // toward the switch
    std::priority_queue<InboundFrame, std::vector<InboundFrame>,
                        std::greater<InboundFrame>>
        inbox_;
    uint64_t inbox_seq_ = 0;
    std::vector<TxFrame> tx_;
    Injector injector_;
    Cycle now_ = 0;

    uint64_t expected_rx_ = 0;
    uint64_t delivered_ = 0;
    uint64_t expected_chipset_requests_ = 0;
    bool done_ = false;
    bool failed_ = false;
    std::string failure_;
    Cycle completion_cycle_ = 0;
    BridgeCounters bridge_counters_;
    TraceBuffer trace_;
    WordTraceBuffer word_trace_;
    uint64_t tx_bytes_p2p_ = 0;
    uint64_t tx_bytes_switched_ = 0;
    uint64_t tx_frames_count_ = 0;
};

}  // namespace emix
