// Core domain types shared across the simulator.
#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace emix {

using Cycle = uint64_t;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IndivisibleMesh : ConfigError {
    using ConfigError::ConfigError;
};
struct BodyTooLong : Error {
    using Error::Error;
};
struct MalformedPacket : Error {
    using Error::Error;
};
struct MalformedP2pFrame : Error {
    using Error::Error;
};
struct LinkFailureError : Error {
    using Error::Error;
};
struct PeerUnreachable : Error {
    using Error::Error;
};
struct ManifestMismatch : Error {
    using Error::Error;
};

struct TileCoord {
    uint16_t x = 0;
    uint16_t y = 0;
    auto operator<=>(const TileCoord&) const = default;
};

enum class Port : uint8_t { North = 0, South, East, West, Local };
inline constexpr int kPortCount = 5;
inline constexpr int kPlanes = 3;

const char* port_name(Port p);
Port opposite(Port p);

// Out-of-band flit markers; the 2-bit wire encoding in frame sidebands uses
// these enum values directly.
enum class FlitKind : uint8_t { Head = 0, Body = 1, Tail = 2, HeadTail = 3 };

struct Flit {
    uint64_t payload = 0;
    FlitKind kind = FlitKind::Body;
    bool operator==(const Flit&) const = default;
};

struct Packet {
    TileCoord src;
    TileCoord dest;
    uint8_t plane = 0;
    std::vector<uint64_t> body;
    bool operator==(const Packet&) const = default;
};

struct MeshConfig {
    uint16_t width = 1;
    uint16_t height = 1;
    uint8_t planes = 3;  // fixed at 3, kept explicit so configs are self-describing
    uint16_t router_buffer_depth = 4;
    uint16_t credits_per_link = 4;

    void validate() const;
    bool contains(TileCoord t) const { return t.x < width && t.y < height; }
    uint32_t tile_count() const { return uint32_t(width) * uint32_t(height); }
    // The chipset peripheral complex is addressed as a virtual tile one
    // column past the east edge.
    TileCoord chipset_address() const { return {width, 0}; }
};

std::string to_string(TileCoord t);

}  // namespace emix
