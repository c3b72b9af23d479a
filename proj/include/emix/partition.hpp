// Tile-to-node assignment, cut-link enumeration, and channel mapping.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "emix/types.hpp"

namespace emix {

enum class PartitionStrategy : uint8_t { Vertical, Horizontal, Grid };

struct PartitionSpec {
    PartitionStrategy strategy = PartitionStrategy::Vertical;
    uint16_t node_count = 1;
    uint16_t grid_cols = 1;  // Grid only
    uint16_t grid_rows = 1;
    uint16_t chipset_node = 0;
    std::vector<std::pair<uint16_t, uint16_t>> p2p_pairs;  // unordered node pairs

    void validate(const MeshConfig& mesh) const;  // throws IndivisibleMesh / ConfigError
    // nullopt when the pair has no direct P2P link
    bool is_p2p_pair(uint16_t a, uint16_t b) const;
};

struct TileRect {
    uint16_t x0 = 0, y0 = 0, w = 0, h = 0;
    bool contains(TileCoord t) const {
        return t.x >= x0 && t.x < x0 + w && t.y >= y0 && t.y < y0 + h;
    }
    uint32_t tiles() const { return uint32_t(w) * uint32_t(h); }
    TileCoord min_corner() const { return {x0, y0}; }
    bool operator==(const TileRect&) const = default;
};

struct PartitionMap {
    MeshConfig mesh;
    std::vector<TileRect> node_rects;  // index = node

    uint16_t node_of(TileCoord t) const;
    uint16_t node_count() const { return uint16_t(node_rects.size()); }
};

struct CutLink {
    TileCoord from;
    TileCoord to;
    uint8_t plane = 0;
    auto operator<=>(const CutLink&) const = default;
};

enum class ChannelPath : uint8_t { P2p, Switched };

struct ChannelAssignment {
    CutLink link;
    uint16_t from_node = 0;
    uint16_t to_node = 0;
    uint16_t channel_id = 0;  // dense within the ordered (from_node, to_node) pair
    ChannelPath path = ChannelPath::Switched;
};

struct ChannelMap {
    std::vector<ChannelAssignment> entries;  // canonical CutLink order

    const ChannelAssignment* find(const CutLink& c) const;
    std::vector<const ChannelAssignment*> for_ordered_pair(uint16_t from,
                                                           uint16_t to) const;
};

PartitionMap partition(const MeshConfig& mesh, const PartitionSpec& spec);
std::vector<CutLink> cut_links(const MeshConfig& mesh, const PartitionMap& map);
ChannelMap assign_channels(const std::vector<CutLink>& cuts,
                           const PartitionMap& map, const PartitionSpec& spec);

}  // namespace emix
