// NoC routing and the flit-level packet codec.
//
// Head flit payload, MSB first:
//   dest_x(8) dest_y(8) src_x(8) src_y(8) plane(2) body_len(14) reserved(16)
// body_len counts the flits following the head; the last of them carries
// Tail (HeadTail when the body is empty).
#pragma once

#include <span>
#include <vector>

#include "emix/types.hpp"

namespace emix {

inline constexpr uint16_t kMaxBodyLen = 16383;  // 14-bit field

struct HeadFields {
    uint8_t dest_x = 0, dest_y = 0, src_x = 0, src_y = 0;
    uint8_t plane = 0;
    uint16_t body_len = 0;
};

uint64_t pack_head(const HeadFields& h);
// Throws MalformedPacket on nonzero reserved bits or plane == 3.
HeadFields unpack_head(uint64_t payload);

// Dimension-ordered XY next hop. Precondition: both coordinates in-mesh.
// Returns Local iff current == dest.
Port route_next_hop(TileCoord current, TileCoord dest);

// Coordinate XY routing brings the packet toward. Chipset-addressed packets
// (dest past the mesh edge) steer to the anchor tile hosting the chip bridge.
struct RoutingView {
    MeshConfig mesh;
    TileCoord chipset_anchor{0, 0};

    TileCoord effective_dest(TileCoord dest) const {
        return mesh.contains(dest) ? dest : chipset_anchor;
    }
};

std::vector<Flit> encode_packet(const Packet& p);  // throws BodyTooLong
Packet decode_packet(std::span<const Flit> flits);  // throws MalformedPacket

}  // namespace emix
