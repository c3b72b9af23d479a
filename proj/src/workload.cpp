#include "emix/workload.hpp"

#include <cassert>
#include <cstdio>

#include "emix/rng.hpp"

namespace emix {

uint64_t memtest_value(uint32_t core, uint32_t word) {
    return splitmix64(uint64_t(core) * 0x10001u + word);
}

uint64_t presence_word(uint32_t core) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "OK %05u", core % 100000);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | uint8_t(buf[i]);
    return v;
}

namespace {

uint32_t core_index(const MeshConfig& mesh, TileCoord t) {
    return uint32_t(t.y) * mesh.width + t.x;
}

// The paper's workload: each core announces itself on the console, then
// write/read-verifies its own slice of chipset memory, one request at a time.
class MemtestDriver : public TileDriver {
public:
    MemtestDriver(const MeshConfig& mesh, TileCoord tile, uint32_t words, bool strict)
        : mesh_(mesh), tile_(tile), words_(words), strict_(strict) {
        core_ = core_index(mesh, tile);
        base_ = uint64_t(core_) * words_;
    }

    void on_cycle(Cycle now, Injector& inj) override {
        if (state_ == St::WaitStart) {
            if (strict_) return;  // released by a GO packet
            if (now < core_) return;  // cores staggered by index
            state_ = St::Ready;
        }
        if (state_ != St::Ready) return;
        Packet req;
        req.src = tile_;
        req.dest = mesh_.chipset_address();
        req.plane = kRequestPlane;
        if (!presence_sent_) {
            req.body = {uint64_t(ChipsetOp::Console), 0, presence_word(core_)};
            pending_ = Op::Presence;
        } else if (phase_write_) {
            req.body = {uint64_t(ChipsetOp::Write), base_ + word_,
                        memtest_value(core_, word_)};
            pending_ = Op::Write;
        } else {
            req.body = {uint64_t(ChipsetOp::Read), base_ + word_};
            pending_ = Op::Read;
        }
        inj.send(req, tile_);
        state_ = St::WaitResponse;
    }

    void on_packet(Cycle, const Packet& p) override {
        if (state_ == St::WaitStart && strict_) {
            if (p.body.size() == 1 && p.body[0] == kGoWord) state_ = St::Ready;
            return;
        }
        if (state_ != St::WaitResponse || p.body.size() != 1) return;
        uint64_t v = p.body[0];
        switch (pending_) {
            case Op::Presence:
                if (v != kAckOk) failed_ = true;
                presence_sent_ = true;
                break;
            case Op::Write:
                if (v != kAckOk) failed_ = true;
                phase_write_ = false;
                break;
            case Op::Read:
                if (v != memtest_value(core_, word_)) failed_ = true;
                phase_write_ = true;
                ++word_;
                break;
        }
        state_ = (presence_sent_ && word_ >= words_) ? St::Done : St::Ready;
    }

    bool done() const override { return state_ == St::Done; }
    bool failed() const override { return failed_; }

private:
    enum class St { WaitStart, Ready, WaitResponse, Done };
    enum class Op { Presence, Write, Read };
    MeshConfig mesh_;
    TileCoord tile_;
    uint32_t words_;
    bool strict_;
    uint32_t core_ = 0;
    uint64_t base_ = 0;
    St state_ = St::WaitStart;
    Op pending_ = Op::Presence;
    bool presence_sent_ = false;
    bool phase_write_ = true;
    uint32_t word_ = 0;
    bool failed_ = false;
};

// One-shot generators: a precomputed packet list, injected one packet at a
// time as the tile's local port drains.
class ListDriver : public TileDriver {
public:
    ListDriver(TileCoord tile, std::vector<Packet> packets)
        : tile_(tile), packets_(std::move(packets)) {}

    void on_cycle(Cycle, Injector& inj) override {
        if (next_ >= packets_.size()) return;
        const Packet& p = packets_[next_];
        if (!inj.idle(tile_, p.plane)) return;
        inj.send(p, tile_);
        ++next_;
    }

    void on_packet(Cycle, const Packet&) override {}
    bool done() const override { return next_ >= packets_.size(); }

private:
    TileCoord tile_;
    std::vector<Packet> packets_;
    size_t next_ = 0;
};

std::vector<Packet> synthetic_packets(const WorkloadSection& w,
                                      const MeshConfig& mesh, TileCoord tile) {
    std::vector<Packet> out;
    uint32_t idx = core_index(mesh, tile);
    Rng rng(derive_seed(w.seed, 0xA0000000u + idx));
    for (uint32_t i = 0; i < w.packets_per_tile; ++i) {
        Packet p;
        p.src = tile;
        switch (w.kind) {
            case WorkloadKind::UniformRandom: {
                uint32_t tiles = mesh.tile_count();
                if (tiles < 2) return out;
                uint32_t d;
                do {
                    d = uint32_t(rng.below(tiles));
                } while (d == idx);
                p.dest = {uint16_t(d % mesh.width), uint16_t(d / mesh.width)};
                p.plane = uint8_t(rng.below(2));  // planes 0/1; plane 2 left idle
                break;
            }
            case WorkloadKind::NearestNeighbor: {
                if (mesh.width < 2) return out;
                p.dest = {uint16_t((tile.x + 1) % mesh.width), tile.y};
                p.plane = uint8_t(i % 2);
                break;
            }
            case WorkloadKind::Hotspot: {
                if (w.hotspot_target == tile) return out;
                p.dest = w.hotspot_target;
                p.plane = uint8_t(rng.below(2));
                break;
            }
            case WorkloadKind::Memtest:
                assert(false);
        }
        p.body.reserve(w.body_len);
        for (uint16_t b = 0; b < w.body_len; ++b) p.body.push_back(rng.next());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

std::unique_ptr<TileDriver> make_tile_driver(const WorkloadSection& w,
                                             const MeshConfig& mesh,
                                             TileCoord tile) {
    if (w.kind == WorkloadKind::Memtest)
        return std::make_unique<MemtestDriver>(mesh, tile, w.words_per_core,
                                               w.strict_sequential);
    auto pkts = synthetic_packets(w, mesh, tile);
    if (pkts.empty()) return nullptr;
    return std::make_unique<ListDriver>(tile, std::move(pkts));
}

uint64_t expected_deliveries(const WorkloadSection& w, const MeshConfig& mesh,
                             const TileRect& rect, TileCoord anchor,
                             bool owns_chipset) {
    uint64_t n = 0;
    if (w.kind == WorkloadKind::Memtest) {
        uint64_t per_core = 1 + 2 * uint64_t(w.words_per_core);  // responses
        if (w.strict_sequential) per_core += 1;                  // the GO token
        n += rect.tiles() * per_core;
        if (owns_chipset) n += mesh.tile_count() * (1 + 2 * uint64_t(w.words_per_core));
        return n;
    }
    for (uint16_t y = 0; y < mesh.height; ++y)
        for (uint16_t x = 0; x < mesh.width; ++x)
            for (const Packet& p : synthetic_packets(w, mesh, {x, y}))
                if (rect.contains(p.dest)) ++n;
    (void)anchor;
    return n;
}

ChipsetSim::ChipsetSim(const MeshConfig& mesh, const WorkloadSection& w,
                       uint64_t memory_words, TileCoord anchor)
    : mesh_(mesh), anchor_(anchor), memory_words_(memory_words) {
    if (w.kind == WorkloadKind::Memtest && w.strict_sequential) {
        strict_ = true;
        expected_per_core_ = 1 + 2 * w.words_per_core;
        served_per_core_.assign(mesh.tile_count(), 0);
    }
}

std::string ChipsetSim::console_text() const {
    std::string s;
    for (const auto& l : console_) {
        s += l;
        s += '\n';
    }
    return s;
}

Packet ChipsetSim::respond(const Packet& req) {
    Packet resp;
    resp.src = mesh_.chipset_address();
    resp.dest = req.src;
    resp.plane = kResponsePlane;
    auto error = [&] { resp.body = {kAckError}; return resp; };
    if (req.body.empty()) return error();
    switch (ChipsetOp(req.body[0])) {
        case ChipsetOp::Read: {
            if (req.body.size() < 2 || req.body[1] >= memory_words_) return error();
            auto it = memory_.find(req.body[1]);
            resp.body = {it == memory_.end() ? 0 : it->second};
            return resp;
        }
        case ChipsetOp::Write: {
            if (req.body.size() < 3 || req.body[1] >= memory_words_) return error();
            memory_[req.body[1]] = req.body[2];
            resp.body = {kAckOk};
            return resp;
        }
        case ChipsetOp::Console: {
            if (req.body.size() < 3) return error();
            char buf[9] = {};
            uint64_t v = req.body[2];
            for (int i = 0; i < 8; ++i) buf[i] = char(v >> (56 - 8 * i));
            std::string line(buf);
            while (!line.empty() && line.back() == '\0') line.pop_back();
            console_.push_back(line);
            resp.body = {kAckOk};
            return resp;
        }
        default:
            return error();
    }
}

void ChipsetSim::note_served(const Packet& req, Injector& inj) {
    if (!strict_ || !mesh_.contains(req.src)) return;
    uint32_t core = core_index(mesh_, req.src);
    if (++served_per_core_[core] == expected_per_core_ && core + 1 < served_per_core_.size()) {
        Packet go{mesh_.chipset_address(),
                  {uint16_t((core + 1) % mesh_.width), uint16_t((core + 1) / mesh_.width)},
                  kResponsePlane,
                  {kGoWord}};
        inj.send(go, anchor_);
    }
}

void ChipsetSim::on_cycle(Cycle, Injector& inj) {
    if (strict_ && !go_sent_) {
        go_sent_ = true;
        Packet go{mesh_.chipset_address(), {0, 0}, kResponsePlane, {kGoWord}};
        inj.send(go, anchor_);
    }
    if (queue_.empty()) return;
    Packet req = queue_.front();
    queue_.pop_front();
    inj.send(respond(req), anchor_);
    ++served_;
    note_served(req, inj);
}

}  // namespace emix
