#include "emix/noc.hpp"

#include <cassert>

namespace emix {

const char* port_name(Port p) {
    switch (p) {
        case Port::North: return "N";
        case Port::South: return "S";
        case Port::East: return "E";
        case Port::West: return "W";
        case Port::Local: return "L";
    }
    return "?";
}

Port opposite(Port p) {
    switch (p) {
        case Port::North: return Port::South;
        case Port::South: return Port::North;
        case Port::East: return Port::West;
        case Port::West: return Port::East;
        case Port::Local: return Port::Local;
    }
    return Port::Local;
}

std::string to_string(TileCoord t) {
    return "(" + std::to_string(t.x) + "," + std::to_string(t.y) + ")";
}

void MeshConfig::validate() const {
    if (width < 1 || width > 256 || height < 1 || height > 256)
        throw ConfigError("mesh dimensions must be in 1..=256");
    if (planes != kPlanes) throw ConfigError("plane count is fixed at 3");
    if (router_buffer_depth < 1) throw ConfigError("router_buffer_depth must be >= 1");
    if (credits_per_link < 1) throw ConfigError("credits_per_link must be >= 1");
    if (credits_per_link > router_buffer_depth)
        throw ConfigError("credits_per_link must not exceed router_buffer_depth");
}

uint64_t pack_head(const HeadFields& h) {
    return uint64_t(h.dest_x) << 56 | uint64_t(h.dest_y) << 48 |
           uint64_t(h.src_x) << 40 | uint64_t(h.src_y) << 32 |
           uint64_t(h.plane & 0x3) << 30 | uint64_t(h.body_len & 0x3fff) << 16;
}

HeadFields unpack_head(uint64_t payload) {
    if ((payload & 0xffff) != 0)
        throw MalformedPacket("nonzero reserved bits in head flit");
    HeadFields h;
    h.dest_x = uint8_t(payload >> 56);
    h.dest_y = uint8_t(payload >> 48);
    h.src_x = uint8_t(payload >> 40);
    h.src_y = uint8_t(payload >> 32);
    h.plane = uint8_t(payload >> 30) & 0x3;
    h.body_len = uint16_t(payload >> 16) & 0x3fff;
    if (h.plane > 2) throw MalformedPacket("plane field out of range");
    return h;
}

Port route_next_hop(TileCoord current, TileCoord dest) {
    if (current.x < dest.x) return Port::East;
    if (current.x > dest.x) return Port::West;
    if (current.y < dest.y) return Port::North;
    if (current.y > dest.y) return Port::South;
    return Port::Local;
}

std::vector<Flit> encode_packet(const Packet& p) {
    if (p.body.size() > kMaxBodyLen)
        throw BodyTooLong("packet body exceeds 14-bit length field");
    if (p.src.x > 255 || p.src.y > 255 || p.dest.x > 255 || p.dest.y > 255)
        throw MalformedPacket("coordinate does not fit 8-bit header field");
    if (p.plane > 2) throw MalformedPacket("plane out of range");
    HeadFields h{uint8_t(p.dest.x), uint8_t(p.dest.y), uint8_t(p.src.x),
                 uint8_t(p.src.y), p.plane, uint16_t(p.body.size())};
    std::vector<Flit> out;
    out.reserve(1 + p.body.size());
    out.push_back({pack_head(h), p.body.empty() ? FlitKind::HeadTail : FlitKind::Head});
    for (size_t i = 0; i < p.body.size(); ++i) {
        FlitKind k = (i + 1 == p.body.size()) ? FlitKind::Tail : FlitKind::Body;
        out.push_back({p.body[i], k});
    }
    return out;
}

Packet decode_packet(std::span<const Flit> flits) {
    if (flits.empty()) throw MalformedPacket("empty flit sequence");
    const Flit& first = flits[0];
    if (first.kind != FlitKind::Head && first.kind != FlitKind::HeadTail)
        throw MalformedPacket("packet does not start with a head flit");
    HeadFields h = unpack_head(first.payload);
    if (flits.size() != size_t(h.body_len) + 1)
        throw MalformedPacket("flit count does not match body_len");
    if (first.kind == FlitKind::HeadTail && h.body_len != 0)
        throw MalformedPacket("HeadTail flit with nonzero body_len");
    if (first.kind == FlitKind::Head && h.body_len == 0)
        throw MalformedPacket("Head flit with empty body");
    Packet p;
    p.src = {h.src_x, h.src_y};
    p.dest = {h.dest_x, h.dest_y};
    p.plane = h.plane;
    p.body.reserve(h.body_len);
    for (size_t i = 1; i < flits.size(); ++i) {
        FlitKind want = (i + 1 == flits.size()) ? FlitKind::Tail : FlitKind::Body;
        if (flits[i].kind != want) throw MalformedPacket("bad flit kind sequence");
        p.body.push_back(flits[i].payload);
    }
    return p;
}

}  // namespace emix
