#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>
#include <map>

#include "emix/noc.hpp"
#include "emix/rng.hpp"
#include "emix/transport.hpp"

using namespace emix;

namespace {

std::deque<Flit> packet_flits(uint16_t plane_words) {
    Packet p{{0, 0}, {1, 0}, 0, {}};
    for (uint16_t i = 0; i < plane_words; ++i) p.body.push_back(i + 1);
    auto v = encode_packet(p);
    return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("mux: single channel streams in order") {
    ChannelMux mux;
    std::deque<Flit> q = packet_flits(3);
    auto orig = q;
    mux.add_source({5, &q, nullptr});
    std::vector<StreamWord> out;
    while (auto w = mux.next()) out.push_back(*w);
    REQUIRE(out.size() == orig.size());
    for (size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].channel == 5);
        CHECK(out[i].data == orig[i].payload);
        CHECK(out[i].kind == orig[i].kind);
    }
    CHECK(out.back().last);
}

TEST_CASE("mux: packet contiguity with tie broken by lowest channel") {
    ChannelMux mux;
    std::deque<Flit> q3 = packet_flits(1);  // head + tail
    std::deque<Flit> q7 = packet_flits(1);
    mux.add_source({3, &q3, nullptr});
    mux.add_source({7, &q7, nullptr});
    std::vector<std::pair<uint16_t, FlitKind>> got;
    while (auto w = mux.next()) got.emplace_back(w->channel, w->kind);
    std::vector<std::pair<uint16_t, FlitKind>> want{{3, FlitKind::Head},
                                                    {3, FlitKind::Tail},
                                                    {7, FlitKind::Head},
                                                    {7, FlitKind::Tail}};
    CHECK(got == want);
}

TEST_CASE("mux: all queues empty yields Idle") {
    ChannelMux mux;
    std::deque<Flit> q;
    mux.add_source({0, &q, nullptr});
    CHECK(!mux.next().has_value());
}

TEST_CASE("mux: round robin resumes after the last served channel") {
    ChannelMux mux;
    std::deque<Flit> a = packet_flits(0), b = packet_flits(0), c = packet_flits(0);
    mux.add_source({0, &a, nullptr});
    mux.add_source({1, &b, nullptr});
    mux.add_source({2, &c, nullptr});
    CHECK(mux.next()->channel == 0);
    a = packet_flits(0);  // refill 0; RR must still pick 1 next
    CHECK(mux.next()->channel == 1);
    CHECK(mux.next()->channel == 2);
    CHECK(mux.next()->channel == 0);
}

TEST_CASE("mux: mid-packet stall keeps the lock on the channel") {
    ChannelMux mux;
    std::deque<Flit> a;
    std::deque<Flit> b = packet_flits(2);
    auto pf = packet_flits(3);  // [Head, Body, Body, Tail]
    a.push_back(pf[0]);  // head only; body arrives later
    mux.add_source({0, &a, nullptr});
    mux.add_source({1, &b, nullptr});
    CHECK(mux.next()->channel == 0);
    CHECK(!mux.next().has_value());  // locked on 0, which is empty
    a.push_back(pf[1]);
    a.push_back(pf[2]);
    a.push_back(pf[3]);
    CHECK(mux.next()->channel == 0);
    CHECK(mux.next()->channel == 0);
    CHECK(mux.next()->channel == 0);
    CHECK(mux.next()->channel == 1);  // unlocked after tail
}

TEST_CASE("stream word round trip preserves per-channel sequences") {
    Rng rng(11);
    std::map<uint16_t, std::deque<Flit>> queues;
    std::map<uint16_t, std::vector<Flit>> sent;
    ChannelMux mux;
    for (uint16_t ch = 0; ch < 10; ++ch) queues[ch];
    for (uint16_t ch = 0; ch < 10; ++ch) {
        for (int p = 0; p < 100; ++p) {
            Packet pkt{{0, 0}, {1, 0}, uint8_t(rng.below(3)), {}};
            size_t n = rng.below(4);
            for (size_t i = 0; i < n; ++i) pkt.body.push_back(rng.next());
            for (const Flit& f : encode_packet(pkt)) {
                queues[ch].push_back(f);
                sent[ch].push_back(f);
            }
        }
        mux.add_source({ch, &queues[ch], nullptr});
    }
    std::map<uint16_t, std::vector<Flit>> got;
    while (auto w = mux.next()) got[w->channel].push_back(to_flit(*w));
    CHECK(got.size() == sent.size());
    for (auto& [ch, v] : sent) CHECK(got[ch] == v);
}

TEST_CASE("cdc fifo: capacity bound and empty pop") {
    CdcFifo f(4, 1, 1);
    for (int i = 0; i < 4; ++i) CHECK(f.push({uint64_t(i), 0, FlitKind::Body, false}));
    CHECK(!f.push({99, 0, FlitKind::Body, false}));  // backpressured, not lost
    CHECK(f.occupancy() == 4);
    for (int i = 0; i < 4; ++i) {
        auto w = f.pop();
        REQUIRE(w.has_value());
        CHECK(w->data == uint64_t(i));
    }
    CHECK(!f.pop().has_value());
}

TEST_CASE("cdc fifo: 1:2 clock ratio paces 100 words over >= 200 cycles") {
    CdcFifo f(32, 1, 2);
    int pushed = 0, popped = 0;
    Cycle first_push = 0, last_pop = 0;
    std::vector<uint64_t> out;
    for (Cycle now = 0; popped < 100; ++now) {
        REQUIRE(now < 10000);
        if (f.push_tick(now) && pushed < 100 && !f.full()) {
            if (pushed == 0) first_push = now;
            f.push({uint64_t(pushed), 0, FlitKind::Body, false});
            ++pushed;
        }
        if (f.pop_tick(now)) {
            if (auto w = f.pop()) {
                out.push_back(w->data);
                last_pop = now;
                ++popped;
            }
        }
    }
    for (int i = 0; i < 100; ++i) CHECK(out[i] == uint64_t(i));  // FIFO order
    CHECK(last_pop - first_push >= 2 * 100 - 2);  // pop domain dominates
    CHECK(f.pushed() == 100);
    CHECK(f.popped() == 100);
}

TEST_CASE("cdc fifo: lossless under random push/pop pressure") {
    Rng rng(17);
    CdcFifo f(8, 1, 1);
    uint64_t next_in = 0, next_out = 0;
    for (Cycle now = 0; now < 5000; ++now) {
        if (rng.bernoulli(0.7) && !f.full())
            f.push({next_in++, 0, FlitKind::Body, false});
        if (rng.bernoulli(0.5)) {
            if (auto w = f.pop()) CHECK(w->data == next_out++);
        }
        CHECK(f.pushed() == f.popped() + f.occupancy());
    }
}
