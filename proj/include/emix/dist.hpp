// Distributed mode: one process per node plus a switch process, exchanging
// the bridge wire formats over TCP with 4-byte big-endian length prefixes.
//
// Virtual time rides the connections as zero-length control records (a real
// frame is never empty, so a length of 0 marks a control record). Every data
// frame is preceded by a TIME record carrying its departure cycle; receivers
// add the configured link latency and only simulate cycles proven complete
// by the peers' time promises. This makes the distributed schedule equal to
// the in-process one, cycle for cycle.
//
// Record stream, after the 40-byte handshake
//   ("EMIX" u16 version=0x0001 u8 role u8 node_index 32B manifest sha256):
//   [u32 len>0][len frame bytes]            data frame (EthFrame / P2pFrame)
//   [u32 len=0][u8 type][u64 value]         control record
// Control types: 0 TIME, 1 NODE_DONE, 2 ALL_DONE, 3 NODE_FAIL, 4 RUN_ABORT.
#pragma once

#include <cstdint>
#include <string>

#include "emix/manifest.hpp"

namespace emix {

enum class DistExit : int {
    Ok = 0,
    Timeout = 3,
    LinkFailure = 4,
    PeerUnreachable = 5,
    ManifestMismatch = 6,
};

inline constexpr uint16_t kProtocolVersion = 0x0001;
inline constexpr uint8_t kRoleNode = 0;
inline constexpr uint8_t kRoleSwitch = 1;

DistExit run_distributed_node(const Manifest& m, uint16_t node_index);
DistExit run_distributed_switch(const Manifest& m);

}  // namespace emix
