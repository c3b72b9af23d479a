#include "emix/dist.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <optional>
#include <vector>

#include "emix/log.hpp"
#include "emix/node.hpp"
#include "emix/runtime.hpp"
#include "emix/wire.hpp"

namespace emix {

namespace {

using SteadyClock = std::chrono::steady_clock;

int64_t ms_since(SteadyClock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() -
                                                                 t0)
        .count();
}

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd(o.fd) { o.fd = -1; }
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            close_fd();
            fd = o.fd;
            o.fd = -1;
        }
        return *this;
    }
    ~Fd() { close_fd(); }
    void close_fd() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
    bool valid() const { return fd >= 0; }
};

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in make_addr(const Endpoint& ep) {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.host.c_str(), &a.sin_addr) != 1)
        throw PeerUnreachable("bad endpoint host " + ep.host);
    return a;
}

Fd listen_on(const Endpoint& ep) {
    Fd s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw PeerUnreachable("socket() failed");
    int one = 1;
    setsockopt(s.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in a = make_addr(ep);
    if (bind(s.fd, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0)
        throw PeerUnreachable("cannot bind " + ep.host + ":" +
                              std::to_string(ep.port));
    if (listen(s.fd, 16) != 0) throw PeerUnreachable("listen() failed");
    return s;
}

Fd connect_to(const Endpoint& ep, uint32_t timeout_ms) {
    auto t0 = SteadyClock::now();
    for (;;) {
        Fd s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw PeerUnreachable("socket() failed");
        sockaddr_in a = make_addr(ep);
        if (connect(s.fd, reinterpret_cast<sockaddr*>(&a), sizeof a) == 0) {
            set_nodelay(s.fd);
            return s;
        }
        if (ms_since(t0) > int64_t(timeout_ms))
            throw PeerUnreachable("connect timeout to " + ep.host + ":" +
                                  std::to_string(ep.port));
        usleep(50 * 1000);
    }
}

std::optional<Fd> accept_one(int listener, uint32_t timeout_ms) {
    pollfd p{listener, POLLIN, 0};
    if (poll(&p, 1, int(timeout_ms)) <= 0) return std::nullopt;
    int fd = accept(listener, nullptr, nullptr);
    if (fd < 0) return std::nullopt;
    set_nodelay(fd);
    return Fd(fd);
}

bool write_all(int fd, const uint8_t* p, size_t n) {
    while (n) {
        ssize_t w = ::write(fd, p, n);
        if (w < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) {
                pollfd pf{fd, POLLOUT, 0};
                poll(&pf, 1, 1000);
                continue;
            }
            return false;
        }
        p += w;
        n -= size_t(w);
    }
    return true;
}

bool read_all(int fd, uint8_t* p, size_t n, uint32_t timeout_ms) {
    auto t0 = SteadyClock::now();
    while (n) {
        ssize_t r = ::read(fd, p, n);
        if (r == 0) return false;
        if (r < 0) {
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) {
                if (ms_since(t0) > int64_t(timeout_ms)) return false;
                pollfd pf{fd, POLLIN, 0};
                poll(&pf, 1, 100);
                continue;
            }
            return false;
        }
        p += r;
        n -= size_t(r);
    }
    return true;
}

constexpr size_t kHandshakeBytes = 40;
constexpr uint8_t kCtlTime = 0;
constexpr uint8_t kCtlNodeDone = 1;
constexpr uint8_t kCtlAllDone = 2;
constexpr uint8_t kCtlNodeFail = 3;
constexpr uint8_t kCtlRunAbort = 4;
constexpr size_t kMaxFrameBytes = 1 << 20;

std::vector<uint8_t> make_handshake(uint8_t role, uint8_t index,
                                    const std::array<uint8_t, 32>& hash) {
    std::vector<uint8_t> h;
    h.push_back('E');
    h.push_back('M');
    h.push_back('I');
    h.push_back('X');
    put_be16(h, kProtocolVersion);
    h.push_back(role);
    h.push_back(index);
    h.insert(h.end(), hash.begin(), hash.end());
    return h;
}

// Returns the peer's (role, index); throws ManifestMismatch / PeerUnreachable.
std::pair<uint8_t, uint8_t> exchange_handshake(int fd, uint8_t role, uint8_t index,
                                               const std::array<uint8_t, 32>& hash,
                                               uint32_t timeout_ms) {
    auto mine = make_handshake(role, index, hash);
    if (!write_all(fd, mine.data(), mine.size()))
        throw PeerUnreachable("handshake write failed");
    uint8_t buf[kHandshakeBytes];
    if (!read_all(fd, buf, sizeof buf, timeout_ms))
        throw PeerUnreachable("handshake read failed");
    if (std::memcmp(buf, "EMIX", 4) != 0 || get_be16(buf + 4) != kProtocolVersion)
        throw ManifestMismatch("handshake protocol mismatch");
    if (std::memcmp(buf + 8, hash.data(), 32) != 0)
        throw ManifestMismatch("manifest hash disagreement at handshake");
    return {buf[6], buf[7]};
}

// One framed connection with incremental parsing and buffered writes.
struct Conn {
    Fd sock;
    uint16_t source = 0;     // peer node index or kSwitchSource
    Cycle latency_in = 0;    // arrival = stamp + latency_in
    Cycle promise = 0;       // latest TIME received
    Cycle last_sent_promise = 0;
    Cycle last_stamp_out = 0;
    bool eof = false;
    std::vector<uint8_t> rbuf;
    size_t rpos = 0;
    std::vector<uint8_t> wbuf;

    void send_control(uint8_t type, uint64_t value) {
        put_be32(wbuf, 0);
        wbuf.push_back(type);
        put_be64(wbuf, value);
    }
    void send_time(Cycle c) {
        if (c < last_stamp_out) c = last_stamp_out;  // promises never regress
        send_control(kCtlTime, c);
        last_stamp_out = c;
    }
    void send_frame(Cycle departure, const std::vector<uint8_t>& bytes) {
        send_time(departure);
        put_be32(wbuf, uint32_t(bytes.size()));
        wbuf.insert(wbuf.end(), bytes.begin(), bytes.end());
    }
    // false on socket error
    bool flush() {
        if (wbuf.empty() || !sock.valid()) return true;
        size_t off = 0;
        while (off < wbuf.size()) {
            ssize_t w = ::write(sock.fd, wbuf.data() + off, wbuf.size() - off);
            if (w < 0) {
                if (errno == EINTR) continue;
                if (errno == EAGAIN || errno == EWOULDBLOCK) break;
                return false;
            }
            off += size_t(w);
        }
        wbuf.erase(wbuf.begin(), wbuf.begin() + off);
        return true;
    }
    // Reads whatever is available; false on error/EOF mid-stream.
    bool pump_read() {
        if (eof || !sock.valid()) return true;
        uint8_t tmp[65536];
        for (;;) {
            ssize_t r = ::read(sock.fd, tmp, sizeof tmp);
            if (r > 0) {
                rbuf.insert(rbuf.end(), tmp, tmp + r);
                if (r < ssize_t(sizeof tmp)) return true;
                continue;
            }
            if (r == 0) {
                eof = true;
                return true;
            }
            if (errno == EINTR) continue;
            if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
            eof = true;
            return true;
        }
    }

    struct Record {
        bool control = false;
        uint8_t type = 0;
        uint64_t value = 0;
        std::vector<uint8_t> frame;
    };

    std::optional<Record> next_record() {
        size_t avail = rbuf.size() - rpos;
        if (avail < 4) {
            compact();
            return std::nullopt;
        }
        uint32_t len = get_be32(rbuf.data() + rpos);
        if (len == 0) {
            if (avail < 4 + 9) {
                compact();
                return std::nullopt;
            }
            Record rec;
            rec.control = true;
            rec.type = rbuf[rpos + 4];
            rec.value = get_be64(rbuf.data() + rpos + 5);
            rpos += 13;
            return rec;
        }
        if (len > kMaxFrameBytes) throw Error("oversized frame on wire");
        if (avail < 4 + len) {
            compact();
            return std::nullopt;
        }
        Record rec;
        rec.frame.assign(rbuf.begin() + rpos + 4, rbuf.begin() + rpos + 4 + len);
        rpos += 4 + len;
        return rec;
    }

    void compact() {
        if (rpos == 0) return;
        rbuf.erase(rbuf.begin(), rbuf.begin() + rpos);
        rpos = 0;
    }
};

void write_node_outputs(const Manifest& m, uint16_t index, NodeSim& node,
                        MetricsHub& hub, RunStatus status) {
    const RunSection& rs = m.config.run;
    std::string sfx = ".node" + std::to_string(index);
    MetricsReport rep;
    hub.finalize(rep, node.completion_cycle());
    rep.mode = "dist";
    rep.status = status;
    rep.seed_fabric = m.config.fabric.seed;
    rep.seed_workload = m.config.workload.seed;
    rep.bridge = node.bridge_counters();
    rep.fabric.p2p_bytes = node.tx_bytes_p2p();
    rep.fabric.switched_bytes = node.tx_bytes_switched();
    rep.fabric.frames_sent = node.tx_frames_count();
    rep.workload_success = status == RunStatus::Ok && !node.workload_failed();
    if (node.chipset()) rep.console_lines = node.chipset()->console().size();
    if (!rs.trace_path.empty()) write_trace_file(rs.trace_path + sfx, node.trace());
    if (!rs.word_trace_path.empty())
        write_word_trace_file(rs.word_trace_path + sfx, node.word_trace());
    if (!rs.report_path.empty()) {
        std::ofstream os(rs.report_path + sfx);
        if (os) os << rep.to_json_string() << "\n";
    }
}

}  // namespace

DistExit run_distributed_node(const Manifest& m, uint16_t node_index) {
    ExperimentPlan plan = ExperimentPlan::build(m.config);
    if (node_index >= plan.pmap.node_count())
        throw ConfigError("node index out of range");
    auto hash = m.hash();

    // The p2p listener (when this node is the lower index of its pair) must
    // exist before peers try to connect.
    std::optional<std::pair<uint16_t, bool>> pair;  // (peer, i_listen)
    for (auto [a, b] : m.config.partition.p2p_pairs) {
        if (a == node_index || b == node_index) {
            uint16_t peer = a == node_index ? b : a;
            pair = {{peer, node_index == std::min(a, b)}};
        }
    }
    bool pair_has_channels = false;
    if (pair)
        for (const ChannelAssignment& e : plan.channels.entries)
            if ((e.from_node == node_index && e.to_node == pair->first) ||
                (e.to_node == node_index && e.from_node == pair->first))
                pair_has_channels = true;

    Fd listener;
    if (pair && pair->second && pair_has_channels)
        listener = listen_on(m.node_eps[node_index]);

    std::vector<Conn> conns;
    try {
        Conn sw;
        sw.sock = connect_to(m.switch_ep, m.dist.connect_timeout_ms);
        exchange_handshake(sw.sock.fd, kRoleNode, uint8_t(node_index), hash,
                           m.dist.connect_timeout_ms);
        sw.source = kSwitchSource;
        sw.latency_in = m.config.fabric.switched_link.latency;
        set_nonblocking(sw.sock.fd);
        conns.push_back(std::move(sw));

        if (pair && pair_has_channels) {
            Conn pc;
            if (pair->second) {
                auto t0 = SteadyClock::now();
                std::optional<Fd> acc;
                while (!acc && ms_since(t0) < int64_t(m.dist.connect_timeout_ms))
                    acc = accept_one(listener.fd, 200);
                if (!acc) throw PeerUnreachable("p2p peer never connected");
                pc.sock = std::move(*acc);
            } else {
                pc.sock = connect_to(m.node_eps[pair->first],
                                     m.dist.connect_timeout_ms);
            }
            auto peer_id = exchange_handshake(pc.sock.fd, kRoleNode,
                                              uint8_t(node_index), hash,
                                              m.dist.connect_timeout_ms);
            if (peer_id.first != kRoleNode || peer_id.second != pair->first)
                throw ManifestMismatch("unexpected p2p peer identity");
            pc.source = pair->first;
            pc.latency_in = m.config.fabric.p2p.latency;
            set_nonblocking(pc.sock.fd);
            conns.push_back(std::move(pc));
        }
    } catch (const ManifestMismatch&) {
        return DistExit::ManifestMismatch;
    } catch (const PeerUnreachable&) {
        return DistExit::PeerUnreachable;
    }

    MetricsHub hub(plan.pmap, plan.cfg.partition, plan.chipset_anchor,
                   /*cross_node_latency=*/false);
    NodeView view{node_index, plan.pmap.node_rects[node_index],
                  node_index == plan.cfg.partition.chipset_node, true};
    NodeSim node(plan, view, &hub);

    Cycle local = 0;
    bool done_sent = false;
    bool all_done = false;
    bool aborted = false;
    uint64_t abort_value = 0;
    auto last_progress = SteadyClock::now();

    auto dispatch = [&](Conn& c) {
        while (auto rec = c.next_record()) {
            last_progress = SteadyClock::now();
            if (rec->control) {
                switch (rec->type) {
                    case kCtlTime:
                        c.promise = std::max(c.promise, rec->value);
                        break;
                    case kCtlAllDone:
                        all_done = true;
                        break;
                    case kCtlRunAbort:
                        aborted = true;
                        abort_value = rec->value;
                        break;
                    default:
                        break;  // NODE_DONE/NODE_FAIL are switch-bound
                }
            } else {
                node.rx_frame(c.source, std::move(rec->frame),
                              c.promise + c.latency_in);
            }
        }
    };

    auto promise_for = [&](const Conn& c) -> Cycle {
        Cycle nf = c.source == kSwitchSource ? node.uplink_next_free()
                                             : node.p2p_next_free(c.source);
        return std::max(local, nf);
    };

    DistExit exit_code = DistExit::Ok;
    for (;;) {
        for (auto& c : conns) {
            if (!c.pump_read() || !c.flush()) c.eof = true;
            dispatch(c);
        }
        if (all_done || aborted) break;

        Cycle safe = ~Cycle(0);
        bool any_open = false;
        for (auto& c : conns)
            if (!c.eof) {
                any_open = true;
                safe = std::min(safe, c.promise + c.latency_in);
            }
        if (!any_open) {
            exit_code = DistExit::PeerUnreachable;
            break;
        }

        bool progressed = false;
        while (local < safe && !all_done && !aborted) {
            node.step(local);
            for (auto& f : node.take_tx()) {
                Conn* target = &conns[0];
                if (f.path == ChannelPath::P2p)
                    for (auto& c : conns)
                        if (c.source == f.peer) target = &c;
                target->send_frame(f.departure, f.bytes);
            }
            ++local;
            progressed = true;
            if (node.failed()) {
                conns[0].send_control(kCtlNodeFail, uint64_t(DistExit::LinkFailure));
                exit_code = DistExit::LinkFailure;
                break;
            }
            // Cycles spent waiting for ALL_DONE after local completion do
            // not count toward the budget.
            if (!node.done() && local > plan.cfg.run.max_cycles) {
                conns[0].send_control(kCtlNodeFail, uint64_t(DistExit::Timeout));
                exit_code = DistExit::Timeout;
                break;
            }
            if (node.done() && !done_sent) {
                done_sent = true;
                conns[0].send_control(kCtlNodeDone, node.completion_cycle());
            }
            if (local % m.dist.time_quantum == 0)
                for (auto& c : conns) {
                    c.send_time(promise_for(c));
                    c.flush();
                }
        }
        if (exit_code != DistExit::Ok) {
            for (auto& c : conns) c.flush();
            break;
        }
        if (progressed) {
            last_progress = SteadyClock::now();
            continue;
        }

        // Blocked: promise our current horizon, then wait for input.
        for (auto& c : conns) {
            c.send_time(promise_for(c));
            c.flush();
        }
        std::vector<pollfd> pfds;
        for (auto& c : conns)
            if (!c.eof)
                pfds.push_back({c.sock.fd,
                                short(POLLIN | (c.wbuf.empty() ? 0 : POLLOUT)), 0});
        poll(pfds.data(), nfds_t(pfds.size()), 100);
        if (ms_since(last_progress) > int64_t(m.dist.idle_timeout_ms)) {
            exit_code = DistExit::PeerUnreachable;
            break;
        }
    }

    RunStatus st = RunStatus::Ok;
    if (aborted) {
        exit_code = DistExit(abort_value);
        st = exit_code == DistExit::Timeout ? RunStatus::Timeout
                                            : RunStatus::LinkFailure;
    } else if (exit_code == DistExit::Timeout) {
        st = RunStatus::Timeout;
    } else if (exit_code != DistExit::Ok) {
        st = RunStatus::LinkFailure;
    }
    write_node_outputs(m, node_index, node, hub, st);
    for (auto& c : conns) c.flush();
    EMIX_INFO("node %u exits with code %d at cycle %llu", node_index,
              int(exit_code), (unsigned long long)local);
    return exit_code;
}

DistExit run_distributed_switch(const Manifest& m) {
    ExperimentPlan plan = ExperimentPlan::build(m.config);
    auto hash = m.hash();
    uint16_t n_nodes = plan.pmap.node_count();

    SwitchConfig sc;
    sc.forwarding_latency = plan.cfg.fabric.switch_forwarding_latency;
    sc.egress_queue_bytes = plan.cfg.fabric.switch_queue_bytes;
    sc.node_link = plan.cfg.fabric.switched_link;
    sc.seed = plan.cfg.fabric.seed;
    sc.port_count = n_nodes;
    SwitchSim sw(sc);

    Fd listener = listen_on(m.switch_ep);
    std::vector<Conn> conns(n_nodes);
    std::vector<bool> seen(n_nodes, false);
    auto t0 = SteadyClock::now();
    uint16_t accepted = 0;
    try {
        while (accepted < n_nodes) {
            if (ms_since(t0) > int64_t(m.dist.connect_timeout_ms))
                throw PeerUnreachable("not all nodes connected");
            auto fd = accept_one(listener.fd, 200);
            if (!fd) continue;
            auto id = exchange_handshake(fd->fd, kRoleSwitch, 0xFF, hash,
                                         m.dist.connect_timeout_ms);
            if (id.first != kRoleNode || id.second >= n_nodes || seen[id.second])
                throw ManifestMismatch("bad node identity at handshake");
            seen[id.second] = true;
            Conn c;
            c.sock = std::move(*fd);
            c.source = id.second;
            c.latency_in = sc.node_link.latency;
            set_nonblocking(c.sock.fd);
            conns[id.second] = std::move(c);
            ++accepted;
        }
    } catch (const ManifestMismatch&) {
        return DistExit::ManifestMismatch;
    } catch (const PeerUnreachable&) {
        return DistExit::PeerUnreachable;
    }

    std::vector<bool> node_done(n_nodes, false);
    bool abort = false;
    uint64_t abort_value = 0;
    auto last_progress = SteadyClock::now();
    Cycle processed_to = 0;

    for (;;) {
        bool io_any = false;
        for (auto& c : conns) {
            c.pump_read();
            c.flush();
            while (auto rec = c.next_record()) {
                io_any = true;
                if (rec->control) {
                    switch (rec->type) {
                        case kCtlTime:
                            c.promise = std::max(c.promise, rec->value);
                            break;
                        case kCtlNodeDone:
                            node_done[c.source] = true;
                            break;
                        case kCtlNodeFail:
                            abort = true;
                            abort_value = rec->value;
                            break;
                        default:
                            break;
                    }
                } else {
                    sw.submit(c.source, std::move(rec->frame), c.promise);
                }
            }
        }
        if (abort) {
            for (auto& c : conns) {
                c.send_control(kCtlRunAbort, abort_value);
                c.flush();
            }
            return DistExit(abort_value);
        }
        if (std::all_of(node_done.begin(), node_done.end(),
                        [](bool b) { return b; })) {
            for (auto& c : conns) {
                c.send_control(kCtlAllDone, 0);
                c.flush();
            }
            EMIX_INFO("switch: run complete");
            return DistExit::Ok;
        }

        bool dead = false;
        Cycle min_promise = ~Cycle(0);
        for (auto& c : conns) {
            if (c.eof) dead = true;
            min_promise = std::min(min_promise, c.promise);
        }
        if (dead) return DistExit::PeerUnreachable;

        Cycle safe_arrival = min_promise + sc.node_link.latency;
        if (safe_arrival > processed_to + 1) {
            sw.advance(safe_arrival - 1);
            processed_to = safe_arrival - 1;
            io_any = true;
            for (auto& d : sw.take_deliveries())
                conns[d.port].send_frame(d.arrival - sc.node_link.latency, d.frame);
            for (uint16_t p = 0; p < n_nodes; ++p)
                conns[p].send_time(sw.output_horizon(safe_arrival, p));
            for (auto& c : conns) c.flush();
        }

        if (io_any) {
            last_progress = SteadyClock::now();
            continue;
        }
        std::vector<pollfd> pfds;
        for (auto& c : conns)
            pfds.push_back(
                {c.sock.fd, short(POLLIN | (c.wbuf.empty() ? 0 : POLLOUT)), 0});
        poll(pfds.data(), nfds_t(pfds.size()), 100);
        if (ms_since(last_progress) > int64_t(m.dist.idle_timeout_ms))
            return DistExit::PeerUnreachable;
    }
}

}  // namespace emix
