// Traffic generators (the memory-test workload plus synthetic patterns) and
// the chipset peripheral model they talk to.
#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "emix/config.hpp"
#include "emix/types.hpp"

namespace emix {

// Chipset request ops, carried in body[0].
enum class ChipsetOp : uint64_t { Read = 0, Write = 1, Console = 2 };
inline constexpr uint64_t kAckOk = 0;
inline constexpr uint64_t kAckError = ~uint64_t(0);
inline constexpr uint64_t kGoWord = 0x474F474F474F474FULL;  // strict-mode token
inline constexpr uint8_t kRequestPlane = 0;
inline constexpr uint8_t kResponsePlane = 1;

uint64_t memtest_value(uint32_t core, uint32_t word);
uint64_t presence_word(uint32_t core);  // "OK %05u" packed big-endian

// Injection facade handed to drivers and the chipset.
struct Injector {
    // Enqueue at `at` (flits trickle into the router as space allows).
    std::function<void(const Packet&, TileCoord at)> send;
    std::function<bool(TileCoord at, uint8_t plane)> idle;  // nothing pending
};

class TileDriver {
public:
    virtual ~TileDriver() = default;
    virtual void on_cycle(Cycle now, Injector& inj) = 0;
    virtual void on_packet(Cycle now, const Packet& p) = 0;
    virtual bool done() const = 0;
    virtual bool failed() const { return false; }
};

// Builds the driver for one tile; returns nullptr for tiles that generate
// nothing under this workload.
std::unique_ptr<TileDriver> make_tile_driver(const WorkloadSection& w,
                                             const MeshConfig& mesh,
                                             TileCoord tile);

// Number of packets the workload will deliver to tiles inside `rect`, plus
// chipset requests when the rect owns the anchor. Used for local completion
// detection (all workloads are deterministic, so this is precomputable).
uint64_t expected_deliveries(const WorkloadSection& w, const MeshConfig& mesh,
                             const TileRect& rect, TileCoord anchor,
                             bool owns_chipset);

// Word-addressable memory + console behind the chip bridge. Requests are
// packets addressed to the chipset virtual tile; responses return to the
// requester on the response plane.
class ChipsetSim {
public:
    ChipsetSim(const MeshConfig& mesh, const WorkloadSection& w,
               uint64_t memory_words, TileCoord anchor);

    void on_request(const Packet& p) { queue_.push_back(p); }
    void on_cycle(Cycle now, Injector& inj);  // serves one request per cycle

    const std::vector<std::string>& console() const { return console_; }
    uint64_t requests_served() const { return served_; }
    std::string console_text() const;

private:
    Packet respond(const Packet& req);
    void note_served(const Packet& req, Injector& inj);

    MeshConfig mesh_;
    TileCoord anchor_;
    uint64_t memory_words_;
    std::map<uint64_t, uint64_t> memory_;
    std::vector<std::string> console_;
    std::deque<Packet> queue_;
    uint64_t served_ = 0;
    // strict-sequential orchestration
    bool strict_ = false;
    uint32_t expected_per_core_ = 0;
    std::vector<uint32_t> served_per_core_;
    uint32_t next_go_ = 0;
    bool go_sent_ = false;
};

}  // namespace emix
