#include "emix/mesh_sim.hpp"

#include <cassert>

namespace emix {

SubMesh::SubMesh(const MeshConfig& mesh, TileRect rect, RoutingView routing)
    : mesh_(mesh), rect_(rect), routing_(routing) {
    routers_.resize(size_t(rect_.w) * rect_.h);
    inject_.resize(routers_.size());
    for (auto& r : routers_)
        for (auto& pl : r.plane)
            for (auto& op : pl.out) op.credits = mesh_.credits_per_link;
}

std::optional<TileCoord> SubMesh::neighbor(TileCoord t, Port p) const {
    switch (p) {
        case Port::North:
            if (t.y + 1 >= mesh_.height) return std::nullopt;
            return TileCoord{t.x, uint16_t(t.y + 1)};
        case Port::South:
            if (t.y == 0) return std::nullopt;
            return TileCoord{t.x, uint16_t(t.y - 1)};
        case Port::East:
            if (t.x + 1 >= mesh_.width) return std::nullopt;
            return TileCoord{uint16_t(t.x + 1), t.y};
        case Port::West:
            if (t.x == 0) return std::nullopt;
            return TileCoord{uint16_t(t.x - 1), t.y};
        case Port::Local:
            return std::nullopt;
    }
    return std::nullopt;
}

Port SubMesh::port_toward(TileCoord from, TileCoord to) const {
    if (to.x == from.x + 1 && to.y == from.y) return Port::East;
    if (from.x == to.x + 1 && to.y == from.y) return Port::West;
    if (to.y == from.y + 1 && to.x == from.x) return Port::North;
    if (from.y == to.y + 1 && to.x == from.x) return Port::South;
    throw Error("tiles are not mesh-adjacent");
}

size_t SubMesh::add_egress(uint16_t channel, TileCoord from, TileCoord to,
                           uint8_t plane) {
    assert(rect_.contains(from) && !rect_.contains(to));
    uint32_t li = local_index(from);
    Port p = port_toward(from, to);
    egress_.push_back({channel, li, plane, p, {}});
    size_t idx = egress_.size() - 1;
    egress_by_port_[{li, plane, uint8_t(p)}] = idx;
    routers_[li].plane[plane].out[size_t(p)].egress = int(idx);
    return idx;
}

size_t SubMesh::add_ingress(uint16_t channel, TileCoord from, TileCoord to,
                            uint8_t plane) {
    assert(rect_.contains(to) && !rect_.contains(from));
    uint32_t li = local_index(to);
    Port p = port_toward(to, from);  // input port facing the remote tile
    ingress_.push_back({channel, li, plane, p, {}});
    return ingress_.size() - 1;
}

void SubMesh::return_egress_credit(size_t idx) {
    const EgressChannel& e = egress_[idx];
    next_credits_.push_back({e.tile, e.plane, e.port});
    ++left_;
}

void SubMesh::enqueue_injection(const Packet& p, TileCoord at) {
    assert(rect_.contains(at));
    auto flits = encode_packet(p);
    auto& q = inject_[local_index(at)][p.plane];
    for (const Flit& f : flits) q.push_back(f);
}

bool SubMesh::injection_idle(TileCoord at, uint8_t plane) const {
    return inject_[local_index(at)][plane].empty();
}

void SubMesh::deliver_pending() {
    pending_flits_.swap(next_flits_);
    next_flits_.clear();
    pending_credits_.swap(next_credits_);
    next_credits_.clear();
    for (const PendingFlit& pf : pending_flits_) {
        auto& fifo = routers_[pf.tile].plane[pf.plane].in[size_t(pf.port)];
        assert(fifo.size() < mesh_.router_buffer_depth);
        fifo.push_back(pf.flit);
    }
    pending_flits_.clear();
    for (const PendingCredit& pc : pending_credits_) {
        OutPort& op = routers_[pc.tile].plane[pc.plane].out[size_t(pc.port)];
        ++op.credits;
        if (op.credits > int(mesh_.credits_per_link)) ++credit_violations_;
    }
    pending_credits_.clear();
}

void SubMesh::run_injection() {
    for (uint32_t li = 0; li < routers_.size(); ++li)
        for (uint8_t pl = 0; pl < kPlanes; ++pl) {
            auto& q = inject_[li][pl];
            if (q.empty()) continue;
            auto& fifo = routers_[li].plane[pl].in[size_t(Port::Local)];
            if (fifo.size() >= mesh_.router_buffer_depth) continue;
            fifo.push_back(q.front());
            q.pop_front();
            ++entered_;
        }
}

void SubMesh::run_ingress() {
    for (IngressChannel& ic : ingress_) {
        if (ic.queue.empty()) continue;
        auto& fifo = routers_[ic.tile].plane[ic.plane].in[size_t(ic.port)];
        if (fifo.size() >= mesh_.router_buffer_depth) continue;
        fifo.push_back(ic.queue.front());
        ic.queue.pop_front();
        ++entered_;
    }
}

void SubMesh::eject(Cycle now, uint32_t li, uint8_t plane, const Flit& f) {
    auto& as = routers_[li].plane[plane].assembly;
    as.push_back(f);
    ++left_;
    if (f.kind == FlitKind::Tail || f.kind == FlitKind::HeadTail) {
        Packet p = decode_packet(as);
        as.clear();
        if (on_deliver) on_deliver(now, p);
    }
}

void SubMesh::send_flit(Cycle now, uint32_t li, uint8_t plane, Port in_port,
                        Port out_port, const Flit& f) {
    TileCoord cur = coord_of(li);
    PlaneState& ps = routers_[li].plane[plane];
    ps.in[size_t(in_port)].pop_front();
    ps.consumed[size_t(in_port)] = true;

    // Credit back to the upstream router when the flit came over an internal
    // link; cut-link ingress is space-checked directly, injection is local.
    if (in_port != Port::Local) {
        auto up = neighbor(cur, in_port);
        if (up && rect_.contains(*up))
            next_credits_.push_back(
                {local_index(*up), plane, opposite(in_port)});
    }

    if (out_port == Port::Local) {
        eject(now, li, plane, f);
        return;
    }
    OutPort& op = ps.out[size_t(out_port)];
    auto n = neighbor(cur, out_port);
    assert(n.has_value());
    --op.credits;
    assert(op.credits >= 0);
    if (rect_.contains(*n)) {
        next_flits_.push_back({local_index(*n), plane, opposite(out_port), f});
    } else {
        assert(op.egress >= 0);
        egress_[size_t(op.egress)].queue.push_back(f);
    }
    if (on_link_flit) on_link_flit(now, cur, *n, plane, f);
}

void SubMesh::run_routers(Cycle now) {
    for (uint32_t li = 0; li < routers_.size(); ++li) {
        TileCoord cur = coord_of(li);
        for (uint8_t pl = 0; pl < kPlanes; ++pl) {
            PlaneState& ps = routers_[li].plane[pl];
            ps.consumed.fill(false);
            for (int o = 0; o < kPortCount; ++o) {
                Port out = Port(o);
                OutPort& op = ps.out[o];
                if (op.locked) {
                    size_t ip = size_t(op.owner);
                    if (ps.consumed[ip] || ps.in[ip].empty()) continue;
                    if (out != Port::Local && op.credits == 0) continue;
                    Flit f = ps.in[ip].front();
                    assert(f.kind == FlitKind::Body || f.kind == FlitKind::Tail);
                    send_flit(now, li, pl, op.owner, out, f);
                    if (f.kind == FlitKind::Tail) op.locked = false;
                    continue;
                }
                if (out != Port::Local && op.credits == 0) continue;
                for (int k = 0; k < kPortCount; ++k) {
                    size_t ip = (size_t(op.rr) + size_t(k)) % kPortCount;
                    if (ps.consumed[ip] || ps.in[ip].empty()) continue;
                    const Flit& f = ps.in[ip].front();
                    if (f.kind != FlitKind::Head && f.kind != FlitKind::HeadTail)
                        continue;  // body stream owned by some locked output
                    TileCoord dest = routing_.effective_dest(
                        TileCoord{uint8_t(f.payload >> 56), uint8_t(f.payload >> 48)});
                    if (route_next_hop(cur, dest) != out) continue;
                    Flit copy = f;
                    send_flit(now, li, pl, Port(ip), out, copy);
                    if (copy.kind == FlitKind::Head) {
                        op.locked = true;
                        op.owner = Port(ip);
                    }
                    op.rr = uint8_t((ip + 1) % kPortCount);
                    break;
                }
            }
        }
    }
}

uint64_t SubMesh::flits_in_flight() const {
    uint64_t n = next_flits_.size();
    for (const Router& r : routers_)
        for (const auto& pl : r.plane)
            for (const auto& f : pl.in) n += f.size();
    for (const EgressChannel& e : egress_) n += e.queue.size();
    return n;
}

void SubMesh::check_invariants() {
    // Flit conservation within this submesh.
    if (entered_ - left_ != flits_in_flight()) ++flit_violations_;

    // Credit conservation per directed (link, plane).
    std::map<std::tuple<uint32_t, uint8_t, uint8_t>, uint64_t> pipe_flits, pipe_credits;
    for (const PendingFlit& pf : next_flits_)
        ++pipe_flits[{pf.tile, pf.plane, uint8_t(pf.port)}];
    for (const PendingCredit& pc : next_credits_)
        ++pipe_credits[{pc.tile, pc.plane, uint8_t(pc.port)}];
    for (uint32_t li = 0; li < routers_.size(); ++li) {
        TileCoord cur = coord_of(li);
        for (uint8_t pl = 0; pl < kPlanes; ++pl)
            for (int o = 0; o < kPortCount; ++o) {
                if (Port(o) == Port::Local) continue;
                auto n = neighbor(cur, Port(o));
                if (!n) continue;
                const OutPort& op = routers_[li].plane[pl].out[o];
                uint64_t total = uint64_t(op.credits);
                auto itc = pipe_credits.find({li, pl, uint8_t(o)});
                if (itc != pipe_credits.end()) total += itc->second;
                if (rect_.contains(*n)) {
                    uint32_t nli = local_index(*n);
                    Port in_p = opposite(Port(o));
                    total += routers_[nli].plane[pl].in[size_t(in_p)].size();
                    auto itf = pipe_flits.find({nli, pl, uint8_t(in_p)});
                    if (itf != pipe_flits.end()) total += itf->second;
                } else if (op.egress >= 0) {
                    total += egress_[size_t(op.egress)].queue.size();
                } else {
                    continue;  // mesh-edge output, never used
                }
                if (total != mesh_.credits_per_link) ++credit_violations_;
            }
    }
}

void SubMesh::step(Cycle now) {
    deliver_pending();
    run_injection();
    run_ingress();
    run_routers(now);
    if (check_conservation) check_invariants();
}

}  // namespace emix
