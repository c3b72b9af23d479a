#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "emix/workload.hpp"

using namespace emix;

namespace {

struct Capture {
    std::vector<std::pair<Packet, TileCoord>> sent;
    Injector inj;
    Capture() {
        inj.send = [this](const Packet& p, TileCoord at) { sent.emplace_back(p, at); };
        inj.idle = [](TileCoord, uint8_t) { return true; };
    }
};

WorkloadSection memtest(uint32_t words) {
    WorkloadSection w;
    w.kind = WorkloadKind::Memtest;
    w.words_per_core = words;
    return w;
}

}  // namespace

TEST_CASE("memtest drives 1 presence + words writes + words reads per core") {
    MeshConfig mesh{2, 2};
    WorkloadSection w = memtest(4);
    Capture cap;
    uint64_t served = 0;
    ChipsetSim chipset(mesh, w, 1 << 16, {0, 0});
    std::vector<std::unique_ptr<TileDriver>> drivers;
    for (uint16_t y = 0; y < 2; ++y)
        for (uint16_t x = 0; x < 2; ++x)
            drivers.push_back(make_tile_driver(w, mesh, {x, y}));

    // Direct-wire harness: requests reach the chipset instantly, responses
    // reach the core one step later.
    for (Cycle now = 0; now < 500; ++now) {
        Capture turn;
        for (auto& d : drivers) d->on_cycle(now, turn.inj);
        for (auto& [p, at] : turn.sent) {
            CHECK(p.dest == mesh.chipset_address());
            CHECK(p.plane == 0);
            chipset.on_request(p);
            cap.sent.emplace_back(p, at);
        }
        Capture resp;
        chipset.on_cycle(now, resp.inj);
        for (auto& [p, at] : resp.sent) {
            CHECK(p.plane == 1);
            CHECK(at == TileCoord{0, 0});
            size_t di = size_t(p.dest.y) * 2 + p.dest.x;
            drivers[di]->on_packet(now, p);
        }
        served = chipset.requests_served();
    }
    for (auto& d : drivers) {
        CHECK(d->done());
        CHECK(!d->failed());
    }
    CHECK(cap.sent.size() == 4 * (1 + 4 + 4));  // 36 request packets
    CHECK(served == 36);
    CHECK(chipset.console().size() == 4);
    CHECK(chipset.console()[0].substr(0, 2) == "OK");
}

TEST_CASE("chipset: write/read/zero-fill/malformed semantics") {
    MeshConfig mesh{2, 2};
    ChipsetSim cs(mesh, memtest(1), 1024, {0, 0});
    Capture out;
    auto ask = [&](std::vector<uint64_t> body) {
        Packet req{{1, 1}, mesh.chipset_address(), 0, std::move(body)};
        cs.on_request(req);
        size_t before = out.sent.size();
        Cycle c = 0;
        while (out.sent.size() == before) cs.on_cycle(c++, out.inj);
        return out.sent.back().first;
    };

    Packet wr = ask({uint64_t(ChipsetOp::Write), 7, 0xDEAD});
    CHECK(wr.body == std::vector<uint64_t>{kAckOk});
    Packet rd = ask({uint64_t(ChipsetOp::Read), 7});
    CHECK(rd.body == std::vector<uint64_t>{0xDEAD});
    CHECK(rd.dest == TileCoord{1, 1});
    CHECK(rd.plane == 1);
    CHECK(rd.src == mesh.chipset_address());

    Packet zero = ask({uint64_t(ChipsetOp::Read), 100});
    CHECK(zero.body == std::vector<uint64_t>{0});

    Packet bad_op = ask({99, 0, 0});
    CHECK(bad_op.body == std::vector<uint64_t>{kAckError});
    Packet oob = ask({uint64_t(ChipsetOp::Write), 4096, 1});
    CHECK(oob.body == std::vector<uint64_t>{kAckError});
    Packet empty = ask({});
    CHECK(empty.body == std::vector<uint64_t>{kAckError});

    Packet console = ask({uint64_t(ChipsetOp::Console), 0, presence_word(3)});
    CHECK(console.body == std::vector<uint64_t>{kAckOk});
    CHECK(cs.console().back() == "OK 00003");
}

TEST_CASE("synthetic workloads are deterministic given the seed") {
    MeshConfig mesh{4, 4};
    WorkloadSection w;
    w.kind = WorkloadKind::UniformRandom;
    w.packets_per_tile = 10;
    w.body_len = 3;
    w.seed = 99;
    auto run = [&] {
        Capture cap;
        auto d = make_tile_driver(w, mesh, {2, 1});
        for (Cycle c = 0; c < 100 && !d->done(); ++c) d->on_cycle(c, cap.inj);
        std::vector<Packet> out;
        for (auto& [p, at] : cap.sent) out.push_back(p);
        return out;
    };
    auto a = run(), b = run();
    CHECK(a == b);
    REQUIRE(a.size() == 10);
    for (const Packet& p : a) {
        CHECK(p.dest != p.src);
        CHECK(mesh.contains(p.dest));
        CHECK(p.plane <= 1);
        CHECK(p.body.size() == 3);
    }
    w.seed = 100;
    CHECK(run() != a);
}

TEST_CASE("hotspot sends everything to the target") {
    MeshConfig mesh{4, 4};
    WorkloadSection w;
    w.kind = WorkloadKind::Hotspot;
    w.packets_per_tile = 5;
    w.hotspot_target = {0, 0};
    Capture cap;
    for (uint16_t y = 0; y < 4; ++y)
        for (uint16_t x = 0; x < 4; ++x) {
            auto d = make_tile_driver(w, mesh, {x, y});
            if (!d) continue;
            for (Cycle c = 0; c < 50 && !d->done(); ++c) d->on_cycle(c, cap.inj);
        }
    CHECK(cap.sent.size() == 15u * 5);  // target tile generates nothing
    for (auto& [p, at] : cap.sent) CHECK(p.dest == TileCoord{0, 0});
}

TEST_CASE("expected_deliveries matches a generated schedule") {
    MeshConfig mesh{4, 4};
    WorkloadSection w;
    w.kind = WorkloadKind::UniformRandom;
    w.packets_per_tile = 7;
    w.body_len = 2;
    w.seed = 5;
    // Generate everything and count arrivals per rect.
    std::map<std::pair<uint16_t, uint16_t>, uint64_t> count;
    for (uint16_t y = 0; y < 4; ++y)
        for (uint16_t x = 0; x < 4; ++x) {
            Capture cap;
            auto d = make_tile_driver(w, mesh, {x, y});
            for (Cycle c = 0; c < 100 && !d->done(); ++c) d->on_cycle(c, cap.inj);
            for (auto& [p, at] : cap.sent) ++count[{p.dest.x, p.dest.y}];
        }
    TileRect left{0, 0, 2, 4};
    uint64_t want = 0;
    for (auto& [k, n] : count)
        if (left.contains({k.first, k.second})) want += n;
    CHECK(expected_deliveries(w, mesh, left, {0, 0}, false) == want);

    // Memtest accounting: responses per core, requests at the chipset owner.
    WorkloadSection mt = memtest(8);
    CHECK(expected_deliveries(mt, mesh, left, {0, 0}, false) == 8u * (1 + 16));
    CHECK(expected_deliveries(mt, mesh, left, {0, 0}, true) ==
          8u * (1 + 16) + 16u * (1 + 16));
}

TEST_CASE("strict sequential memtest is orchestrated by GO tokens") {
    MeshConfig mesh{2, 1};
    WorkloadSection w = memtest(2);
    w.strict_sequential = true;
    ChipsetSim chipset(mesh, w, 1024, {0, 0});
    std::vector<std::unique_ptr<TileDriver>> drivers;
    drivers.push_back(make_tile_driver(w, mesh, {0, 0}));
    drivers.push_back(make_tile_driver(w, mesh, {1, 0}));

    std::vector<uint32_t> request_order;  // core index per request, arrival order
    for (Cycle now = 0; now < 300; ++now) {
        Capture turn;
        for (auto& d : drivers) d->on_cycle(now, turn.inj);
        for (auto& [p, at] : turn.sent) {
            request_order.push_back(p.src.x);
            chipset.on_request(p);
        }
        Capture resp;
        chipset.on_cycle(now, resp.inj);
        for (auto& [p, at] : resp.sent)
            drivers[p.dest.x]->on_packet(now, p);
    }
    CHECK(drivers[0]->done());
    CHECK(drivers[1]->done());
    REQUIRE(request_order.size() == 10);  // 2 cores x (1 + 2 + 2)
    // Core 1 must not start before core 0 finished.
    std::vector<uint32_t> want{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(request_order == want);
}
