// Per-node stream transport: channel mux/demux and the clock-domain FIFO.
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "emix/types.hpp"

namespace emix {

struct StreamWord {
    uint64_t data = 0;
    uint16_t channel = 0;
    FlitKind kind = FlitKind::Body;
    bool last = false;
    bool operator==(const StreamWord&) const = default;
};

inline StreamWord to_stream_word(uint16_t channel, const Flit& f) {
    return {f.payload, channel, f.kind,
            f.kind == FlitKind::Tail || f.kind == FlitKind::HeadTail};
}

inline Flit to_flit(const StreamWord& w) { return {w.data, w.kind}; }

// Bounded dual-clock FIFO. push ticks happen every push_period cycles and
// pop ticks every pop_period cycles; both periods are in scheduler cycles.
class CdcFifo {
public:
    CdcFifo(size_t depth, uint32_t push_period, uint32_t pop_period)
        : depth_(depth), push_period_(push_period), pop_period_(pop_period) {}

    bool push_tick(Cycle now) const { return now % push_period_ == 0; }
    bool pop_tick(Cycle now) const { return now % pop_period_ == 0; }
    bool full() const { return q_.size() >= depth_; }
    bool empty() const { return q_.empty(); }
    size_t occupancy() const { return q_.size(); }
    size_t depth() const { return depth_; }

    // false = Backpressured; the word is not consumed.
    bool push(const StreamWord& w) {
        if (full()) return false;
        q_.push_back(w);
        ++pushed_;
        return true;
    }

    std::optional<StreamWord> pop() {
        if (q_.empty()) return std::nullopt;
        StreamWord w = q_.front();
        q_.pop_front();
        ++popped_;
        return w;
    }

    uint64_t pushed() const { return pushed_; }
    uint64_t popped() const { return popped_; }

private:
    size_t depth_;
    uint32_t push_period_;
    uint32_t pop_period_;
    std::deque<StreamWord> q_;
    uint64_t pushed_ = 0;
    uint64_t popped_ = 0;
};

// Round-robin mux over channel queues at packet granularity: once a Head is
// selected the mux stays on that channel through its Tail, so packets are
// contiguous per channel on the wire.
class ChannelMux {
public:
    struct Source {
        uint16_t channel;
        std::deque<Flit>* queue;
        std::function<void()> on_pop;  // credit return toward the router
    };

    // Sources must be registered in ascending channel order.
    void add_source(Source s) { sources_.push_back(std::move(s)); }

    std::optional<StreamWord> next();

    bool mid_packet() const { return locked_ >= 0; }

private:
    std::vector<Source> sources_;
    int locked_ = -1;     // index into sources_ while mid-packet
    size_t rr_next_ = 0;  // next index to consider
};

}  // namespace emix
