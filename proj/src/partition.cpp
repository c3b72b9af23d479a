#include "emix/partition.hpp"

#include <algorithm>
#include <cassert>
#include <set>

namespace emix {

void PartitionSpec::validate(const MeshConfig& mesh) const {
    if (node_count < 1) throw ConfigError("node_count must be >= 1");
    switch (strategy) {
        case PartitionStrategy::Vertical:
            if (mesh.width % node_count != 0)
                throw IndivisibleMesh("node_count does not divide mesh width");
            break;
        case PartitionStrategy::Horizontal:
            if (mesh.height % node_count != 0)
                throw IndivisibleMesh("node_count does not divide mesh height");
            break;
        case PartitionStrategy::Grid:
            if (uint32_t(grid_cols) * grid_rows != node_count)
                throw ConfigError("grid cols*rows must equal node_count");
            if (mesh.width % grid_cols != 0)
                throw IndivisibleMesh("grid cols do not divide mesh width");
            if (mesh.height % grid_rows != 0)
                throw IndivisibleMesh("grid rows do not divide mesh height");
            break;
    }
    if (chipset_node >= node_count)
        throw ConfigError("chipset_node out of range");
    std::set<uint16_t> seen;
    for (auto [a, b] : p2p_pairs) {
        if (a == b) throw ConfigError("p2p pair with identical endpoints");
        if (a >= node_count || b >= node_count)
            throw ConfigError("p2p pair node index out of range");
        if (!seen.insert(a).second || !seen.insert(b).second)
            throw ConfigError("node appears in more than one p2p pair");
    }
}

bool PartitionSpec::is_p2p_pair(uint16_t a, uint16_t b) const {
    for (auto [x, y] : p2p_pairs)
        if ((x == a && y == b) || (x == b && y == a)) return true;
    return false;
}

uint16_t PartitionMap::node_of(TileCoord t) const {
    for (size_t i = 0; i < node_rects.size(); ++i)
        if (node_rects[i].contains(t)) return uint16_t(i);
    throw Error("tile " + to_string(t) + " not covered by any node");
}

PartitionMap partition(const MeshConfig& mesh, const PartitionSpec& spec) {
    mesh.validate();
    spec.validate(mesh);
    PartitionMap map;
    map.mesh = mesh;
    // Node index increases with x, then y.
    switch (spec.strategy) {
        case PartitionStrategy::Vertical: {
            uint16_t strip = mesh.width / spec.node_count;
            for (uint16_t n = 0; n < spec.node_count; ++n)
                map.node_rects.push_back({uint16_t(n * strip), 0, strip, mesh.height});
            break;
        }
        case PartitionStrategy::Horizontal: {
            uint16_t strip = mesh.height / spec.node_count;
            for (uint16_t n = 0; n < spec.node_count; ++n)
                map.node_rects.push_back({0, uint16_t(n * strip), mesh.width, strip});
            break;
        }
        case PartitionStrategy::Grid: {
            uint16_t rw = mesh.width / spec.grid_cols;
            uint16_t rh = mesh.height / spec.grid_rows;
            for (uint16_t r = 0; r < spec.grid_rows; ++r)
                for (uint16_t c = 0; c < spec.grid_cols; ++c)
                    map.node_rects.push_back(
                        {uint16_t(c * rw), uint16_t(r * rh), rw, rh});
            break;
        }
    }
    uint32_t total = 0;
    for (const auto& r : map.node_rects) total += r.tiles();
    assert(total == mesh.tile_count());
    return map;
}

std::vector<CutLink> cut_links(const MeshConfig& mesh, const PartitionMap& map) {
    std::vector<CutLink> cuts;
    auto consider = [&](TileCoord a, TileCoord b) {
        if (map.node_of(a) == map.node_of(b)) return;
        for (uint8_t p = 0; p < kPlanes; ++p) {
            cuts.push_back({a, b, p});
            cuts.push_back({b, a, p});
        }
    };
    for (uint16_t y = 0; y < mesh.height; ++y)
        for (uint16_t x = 0; x < mesh.width; ++x) {
            if (x + 1 < mesh.width) consider({x, y}, {uint16_t(x + 1), y});
            if (y + 1 < mesh.height) consider({x, y}, {x, uint16_t(y + 1)});
        }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

const ChannelAssignment* ChannelMap::find(const CutLink& c) const {
    for (const auto& e : entries)
        if (e.link == c) return &e;
    return nullptr;
}

std::vector<const ChannelAssignment*> ChannelMap::for_ordered_pair(
    uint16_t from, uint16_t to) const {
    std::vector<const ChannelAssignment*> out;
    for (const auto& e : entries)
        if (e.from_node == from && e.to_node == to) out.push_back(&e);
    return out;
}

ChannelMap assign_channels(const std::vector<CutLink>& cuts,
                           const PartitionMap& map, const PartitionSpec& spec) {
    ChannelMap cm;
    std::map<std::pair<uint16_t, uint16_t>, uint16_t> next_id;
    std::vector<CutLink> sorted = cuts;
    std::sort(sorted.begin(), sorted.end());
    for (const CutLink& c : sorted) {
        ChannelAssignment a;
        a.link = c;
        a.from_node = map.node_of(c.from);
        a.to_node = map.node_of(c.to);
        a.channel_id = next_id[{a.from_node, a.to_node}]++;
        a.path = spec.is_p2p_pair(a.from_node, a.to_node) ? ChannelPath::P2p
                                                          : ChannelPath::Switched;
        cm.entries.push_back(a);
    }
    return cm;
}

}  // namespace emix
