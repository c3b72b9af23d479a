#include "emix/node.hpp"

#include <algorithm>
#include <cassert>

#include "emix/noc.hpp"

namespace emix {

NodeSim::NodeSim(const ExperimentPlan& plan, const NodeView& view, MetricsHub* hub)
    : plan_(plan),
      view_(view),
      hub_(hub),
      mac_(NodeMac::for_node(uint8_t(view.index))),
      submesh_(plan.cfg.mesh, view.rect, plan.routing()) {
    submesh_.on_deliver = [this](Cycle c, const Packet& p) { deliver(c, p); };
    submesh_.on_link_flit = [this](Cycle, TileCoord f, TileCoord t, uint8_t pl,
                                   const Flit& fl) {
        if (hub_) hub_->on_link_flit(f, t, pl);
        if (on_link_flit_extra) on_link_flit_extra(f, t, pl, fl);
    };

    injector_.send = [this](const Packet& p, TileCoord at) { inject(p, at); };
    injector_.idle = [this](TileCoord at, uint8_t plane) {
        return submesh_.injection_idle(at, plane);
    };

    // Tile drivers.
    const MeshConfig& mesh = plan_.cfg.mesh;
    drivers_.resize(size_t(view_.rect.w) * view_.rect.h);
    for (uint16_t y = view_.rect.y0; y < view_.rect.y0 + view_.rect.h; ++y)
        for (uint16_t x = view_.rect.x0; x < view_.rect.x0 + view_.rect.w; ++x) {
            size_t li = size_t(y - view_.rect.y0) * view_.rect.w + (x - view_.rect.x0);
            drivers_[li] = make_tile_driver(plan_.cfg.workload, mesh, {x, y});
        }

    if (view_.is_chipset)
        chipset_ = std::make_unique<ChipsetSim>(mesh, plan_.cfg.workload,
                                                plan_.cfg.run.chipset_memory_words,
                                                plan_.chipset_anchor);

    expected_rx_ = expected_deliveries(plan_.cfg.workload, mesh, view_.rect,
                                       plan_.chipset_anchor, view_.is_chipset);

    if (!view_.partitioned) return;

    // Channel registration, canonical (sorted) order so channel queues and
    // mux sources line up identically on both sides.
    std::set<uint16_t> peer_set;
    for (const ChannelAssignment& e : plan_.channels.entries)
        if (e.from_node == view_.index || e.to_node == view_.index)
            peer_set.insert(e.from_node == view_.index ? e.to_node : e.from_node);
    for (uint16_t p : peer_set) {
        auto path = ChannelPath::Switched;
        if (plan_.cfg.partition.is_p2p_pair(view_.index, p)) path = ChannelPath::P2p;
        auto l = std::make_unique<PeerLink>(p, path, plan_.cfg.bridge);
        l->peer_mac = NodeMac::for_node(uint8_t(p));
        if (path == ChannelPath::P2p)
            l->p2p_egress = std::make_unique<LinkEgress>(plan_.cfg.fabric.p2p);
        peers_.push_back(std::move(l));
    }
    bool any_switched = false;
    for (auto& l : peers_) any_switched |= l->path == ChannelPath::Switched;
    if (any_switched || view_.partitioned)
        uplink_ = std::make_unique<LinkEgress>(plan_.cfg.fabric.switched_link);

    for (const ChannelAssignment& e : plan_.channels.entries) {
        if (e.from_node == view_.index) {
            size_t idx = submesh_.add_egress(e.channel_id, e.link.from, e.link.to,
                                             e.link.plane);
            PeerLink* l = nullptr;
            for (auto& pl : peers_)
                if (pl->peer == e.to_node) l = pl.get();
            l->mux.add_source({e.channel_id, &submesh_.egress_queue(idx),
                               [this, idx] { submesh_.return_egress_credit(idx); }});
        } else if (e.to_node == view_.index) {
            size_t idx = submesh_.add_ingress(e.channel_id, e.link.from, e.link.to,
                                              e.link.plane);
            for (auto& pl : peers_)
                if (pl->peer == e.from_node) pl->rx_channels[e.channel_id] = idx;
        }
    }

    if (view_.is_chipset)
        expected_chipset_requests_ =
            plan_.cfg.workload.kind == WorkloadKind::Memtest
                ? uint64_t(mesh.tile_count()) * (1 + 2 * plan_.cfg.workload.words_per_core)
                : 0;
}

Cycle NodeSim::p2p_next_free(uint16_t peer) const {
    for (const auto& l : peers_)
        if (l->peer == peer && l->p2p_egress) return l->p2p_egress->next_free();
    return 0;
}

bool NodeSim::workload_failed() const {
    for (const auto& d : drivers_)
        if (d && d->failed()) return true;
    return false;
}

void NodeSim::inject(const Packet& p, TileCoord at) {
    if (hub_) hub_->on_inject(now_, p);
    submesh_.enqueue_injection(p, at);
}

void NodeSim::deliver(Cycle now, const Packet& p) {
    trace_.records.push_back({now, p});
    ++delivered_;
    completion_cycle_ = now;
    if (hub_) hub_->on_deliver(now, p);
    if (p.dest == plan_.cfg.mesh.chipset_address()) {
        if (chipset_) chipset_->on_request(p);
        return;
    }
    if (view_.rect.contains(p.dest)) {
        size_t li = size_t(p.dest.y - view_.rect.y0) * view_.rect.w +
                    (p.dest.x - view_.rect.x0);
        if (drivers_[li]) drivers_[li]->on_packet(now, p);
    }
}

void NodeSim::fail(const std::string& why) {
    if (failed_) return;
    failed_ = true;
    failure_ = why;
    ++bridge_counters_.link_failures;
}

NodeSim::PeerLink* NodeSim::link_for_mac(NodeMac m) {
    for (auto& l : peers_)
        if (l->peer_mac == m) return l.get();
    return nullptr;
}

void NodeSim::rx_frame(uint16_t source, std::vector<uint8_t> bytes, Cycle arrival) {
    inbox_.push({arrival, source, inbox_seq_++, std::move(bytes)});
}

void NodeSim::handle_p2p(Cycle now, PeerLink& l, std::span<const uint8_t> bytes) {
    P2pView v = p2p_decode(bytes);  // corruption here is fatal by contract
    l.credits.on_return(v.credit_return);
    for (const StreamWord& w : v.words) l.rx_staging.push_back(w);
    (void)now;
}

void NodeSim::handle_switched(Cycle now, std::span<const uint8_t> bytes) {
    EthDecodeResult r = eth_decode(bytes);
    if (r.status == EthDecodeStatus::Corrupt) {
        ++bridge_counters_.corrupt_frames;
        return;
    }
    if (r.frame.dst != mac_) {
        ++bridge_counters_.wrong_destination;  // flooded or misdirected
        return;
    }
    PeerLink* l = link_for_mac(r.frame.src);
    if (!l) {
        ++bridge_counters_.wrong_destination;
        return;
    }
    l->retx.on_ack(r.frame.ack, now);
    if (r.status == EthDecodeStatus::Ack) return;
    auto res = l->rx_retx.on_data(r.frame.seq);
    if (res.deliver)
        for (const StreamWord& w : r.frame.words) l->rx_staging.push_back(w);
    // Cumulative ack, also for duplicates.
    emit_switched(now, l->peer,
                  eth_encode(l->peer_mac, mac_, EthFrameType::Ack, 0, res.ack, {}));
}

void NodeSim::process_inbox(Cycle now) {
    while (!inbox_.empty() && inbox_.top().arrival <= now) {
        InboundFrame f = inbox_.top();
        inbox_.pop();
        if (f.source == kSwitchSource) {
            handle_switched(now, f.bytes);
        } else {
            for (auto& l : peers_)
                if (l->peer == f.source) handle_p2p(now, *l, f.bytes);
        }
    }
}

void NodeSim::rx_pipeline(Cycle now, PeerLink& l) {
    if (l.rx_cdc.push_tick(now) && !l.rx_staging.empty() && !l.rx_cdc.full()) {
        StreamWord w = l.rx_staging.front();
        l.rx_staging.pop_front();
        l.rx_cdc.push(w);
        if (l.path == ChannelPath::P2p) ++l.pending_credit_return;
    }
    if (l.rx_cdc.pop_tick(now)) {
        if (auto w = l.rx_cdc.pop()) {
            auto it = l.rx_channels.find(w->channel);
            if (it == l.rx_channels.end()) {
                ++bridge_counters_.unknown_channel;  // misconfiguration signal
            } else {
                word_trace_.records.push_back({l.peer, *w});
                submesh_.push_ingress(it->second, to_flit(*w));
            }
        }
    }
}

void NodeSim::emit_switched(Cycle now, uint16_t peer, std::vector<uint8_t> bytes) {
    Cycle dep = uplink_->depart(bytes.size(), now);
    tx_bytes_switched_ += bytes.size();
    ++tx_frames_count_;
    tx_.push_back({ChannelPath::Switched, peer, dep, std::move(bytes)});
}

void NodeSim::emit_p2p(Cycle now, PeerLink& l, std::vector<uint8_t> bytes) {
    Cycle dep = l.p2p_egress->depart(bytes.size(), now);
    tx_bytes_p2p_ += bytes.size();
    ++tx_frames_count_;
    tx_.push_back({ChannelPath::P2p, l.peer, dep, std::move(bytes)});
}

void NodeSim::flush_batch(Cycle now, PeerLink& l, bool force) {
    if (l.batch.empty()) return;
    bool due = force || l.batch.size() >= plan_.cfg.bridge.batch_words ||
               now >= l.batch_start + plan_.cfg.bridge.flush_cycles;
    if (!due) return;
    if (l.path == ChannelPath::Switched) {
        if (l.retx.gave_up()) return;
        if (l.retx.window_full()) return;  // backpressure: hold the batch
        auto bytes = l.retx.send(l.peer_mac, mac_, l.rx_retx.expected(),
                                 l.batch, now);
        l.batch.clear();
        emit_switched(now, l.peer, std::move(bytes));
    } else {
        uint32_t n = std::min<uint32_t>(uint32_t(l.batch.size()), l.credits.credits);
        if (n == 0) return;  // blocked until credits return
        uint16_t cr = uint16_t(std::min<uint32_t>(l.pending_credit_return, 0xFFFF));
        std::span<const StreamWord> words(l.batch.data(), n);
        auto bytes = p2p_encode(cr, words);
        l.credits.on_send(n);
        l.pending_credit_return -= cr;
        l.last_credit_frame = now;
        l.batch.erase(l.batch.begin(), l.batch.begin() + n);
        if (!l.batch.empty()) l.batch_start = now;
        emit_p2p(now, l, std::move(bytes));
    }
}

void NodeSim::tx_pipeline(Cycle now, PeerLink& l) {
    // NoC-side clock: feed the egress CDC from the channel mux.
    if (l.tx_cdc.push_tick(now) && !l.tx_cdc.full()) {
        if (auto w = l.mux.next()) l.tx_cdc.push(*w);
    }
    // Bridge-side clock: drain CDC into the frame batcher.
    if (l.tx_cdc.pop_tick(now) && l.batch.size() < plan_.cfg.bridge.batch_words) {
        if (auto w = l.tx_cdc.pop()) {
            if (l.batch.empty()) l.batch_start = now;
            l.batch.push_back(*w);
        }
    }
    flush_batch(now, l, false);
    if (l.path == ChannelPath::Switched) {
        for (auto& bytes : l.retx.on_cycle(now)) {
            ++bridge_counters_.retransmits;
            emit_switched(now, l.peer, std::move(bytes));
        }
        if (l.retx.gave_up())
            fail("arq gave up toward node " + std::to_string(l.peer));
    } else if (l.pending_credit_return > 0 &&
               now >= l.last_credit_frame + plan_.cfg.bridge.flush_cycles) {
        // No reverse data recently; return credits in an empty frame.
        uint16_t cr = uint16_t(std::min<uint32_t>(l.pending_credit_return, 0xFFFF));
        l.pending_credit_return -= cr;
        l.last_credit_frame = now;
        emit_p2p(now, l, p2p_encode(cr, {}));
    }
}

void NodeSim::step(Cycle now) {
    now_ = now;
    process_inbox(now);
    for (auto& l : peers_) rx_pipeline(now, *l);
    for (auto& d : drivers_)
        if (d && !d->done()) d->on_cycle(now, injector_);
    if (chipset_) chipset_->on_cycle(now, injector_);
    submesh_.step(now);
    for (auto& l : peers_) tx_pipeline(now, *l);

    if (!done_) {
        bool drivers_done = true;
        for (auto& d : drivers_)
            if (d && !d->done()) drivers_done = false;
        bool chipset_done =
            !chipset_ || chipset_->requests_served() >= expected_chipset_requests_;
        if (drivers_done && chipset_done && delivered_ >= expected_rx_)
            done_ = true;
    }
}

std::vector<NodeSim::TxFrame> NodeSim::take_tx() {
    std::vector<TxFrame> out;
    out.swap(tx_);
    return out;
}

}  // namespace emix
