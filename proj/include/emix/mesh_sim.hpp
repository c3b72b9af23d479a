// Cycle-driven sub-mesh simulator: wormhole routers with credit-based flow
// control over three independent planes, plus boundary channels where the
// partition severed links.
//
// Timing model: a flit forwarded at cycle t enters the downstream input FIFO
// at t+1; credits return as t+1 events. At most one flit per (plane, output)
// and per (plane, input) per cycle. Ejection through Local is not credit
// gated.
#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "emix/noc.hpp"
#include "emix/partition.hpp"
#include "emix/types.hpp"

namespace emix {

class SubMesh {
public:
    SubMesh(const MeshConfig& mesh, TileRect rect, RoutingView routing);

    // Boundary registration (before the first step).
    // Egress: flits leaving `from` toward `to` (remote) are queued per
    // channel; the router output port is credit-gated against that queue.
    size_t add_egress(uint16_t channel, TileCoord from, TileCoord to, uint8_t plane);
    // Ingress: flits from the remote side enter the input FIFO of `to`
    // facing `from`.
    size_t add_ingress(uint16_t channel, TileCoord from, TileCoord to, uint8_t plane);

    std::deque<Flit>& egress_queue(size_t idx) { return egress_[idx].queue; }
    void return_egress_credit(size_t idx);  // transport consumed one word
    void push_ingress(size_t idx, const Flit& f) { ingress_[idx].queue.push_back(f); }
    size_t ingress_backlog(size_t idx) const { return ingress_[idx].queue.size(); }

    // Queue a packet for injection at its source tile (must be in-rect,
    // except chipset responses which enter at the anchor).
    void enqueue_injection(const Packet& p, TileCoord at);
    bool injection_idle(TileCoord at, uint8_t plane) const;

    void step(Cycle now);

    // Hooks.
    std::function<void(Cycle, const Packet&)> on_deliver;
    std::function<void(Cycle, TileCoord from, TileCoord to, uint8_t plane,
                       const Flit&)>
        on_link_flit;  // internal and cut links, observed at the sender

    // Debug invariant checks (enabled by the runtime for acceptance runs).
    bool check_conservation = false;
    uint64_t credit_violations() const { return credit_violations_; }
    uint64_t flit_conservation_violations() const { return flit_violations_; }

    uint64_t flits_in_flight() const;  // FIFOs + pipes + partial assemblies
    const TileRect& rect() const { return rect_; }

private:
    struct OutPort {
        int credits = 0;
        bool locked = false;
        Port owner = Port::Local;
        uint8_t rr = 0;
        int egress = -1;  // egress channel index when this is a cut link
    };
    struct PlaneState {
        std::array<std::deque<Flit>, kPortCount> in;
        std::array<bool, kPortCount> consumed{};
        std::array<OutPort, kPortCount> out;
        std::vector<Flit> assembly;  // flits ejected through Local
    };
    struct Router {
        std::array<PlaneState, kPlanes> plane;
    };
    struct EgressChannel {
        uint16_t channel;
        uint32_t tile;
        uint8_t plane;
        Port port;
        std::deque<Flit> queue;
    };
    struct IngressChannel {
        uint16_t channel;
        uint32_t tile;
        uint8_t plane;
        Port port;
        std::deque<Flit> queue;
    };
    struct PendingFlit {
        uint32_t tile;
        uint8_t plane;
        Port port;
        Flit flit;
    };
    struct PendingCredit {
        uint32_t tile;
        uint8_t plane;
        Port port;
    };

    uint32_t local_index(TileCoord t) const {
        return uint32_t(t.y - rect_.y0) * rect_.w + (t.x - rect_.x0);
    }
    TileCoord coord_of(uint32_t li) const {
        return {uint16_t(rect_.x0 + li % rect_.w), uint16_t(rect_.y0 + li / rect_.w)};
    }
    std::optional<TileCoord> neighbor(TileCoord t, Port p) const;
    Port port_toward(TileCoord from, TileCoord to) const;

    void deliver_pending();
    void run_injection();
    void run_ingress();
    void run_routers(Cycle now);
    void send_flit(Cycle now, uint32_t li, uint8_t plane, Port in_port,
                   Port out_port, const Flit& f);
    void eject(Cycle now, uint32_t li, uint8_t plane, const Flit& f);
    void check_invariants();

    MeshConfig mesh_;
    TileRect rect_;
    RoutingView routing_;
    std::vector<Router> routers_;
    std::vector<std::array<std::deque<Flit>, kPlanes>> inject_;  // per tile
    // deques: queue references stay valid while channels are registered
    std::deque<EgressChannel> egress_;
    std::deque<IngressChannel> ingress_;
    std::map<std::tuple<uint32_t, uint8_t, uint8_t>, size_t> egress_by_port_;
    std::vector<PendingFlit> pending_flits_, next_flits_;
    std::vector<PendingCredit> pending_credits_, next_credits_;
    uint64_t credit_violations_ = 0;
    uint64_t flit_violations_ = 0;
    uint64_t entered_ = 0;  // flits that entered the submesh
    uint64_t left_ = 0;     // flits ejected or handed to egress queues... (tracked at egress pop)
};

}  // namespace emix
