#include "emix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emix/noc.hpp"

namespace emix {

using nlohmann::json;

BridgeCounters& BridgeCounters::operator+=(const BridgeCounters& o) {
    retransmits += o.retransmits;
    dup_drops += o.dup_drops;
    delivered_duplicates += o.delivered_duplicates;
    corrupt_frames += o.corrupt_frames;
    wrong_destination += o.wrong_destination;
    unknown_channel += o.unknown_channel;
    link_failures += o.link_failures;
    return *this;
}

FabricCounters& FabricCounters::operator+=(const FabricCounters& o) {
    p2p_bytes += o.p2p_bytes;
    switched_bytes += o.switched_bytes;
    frames_sent += o.frames_sent;
    dropped_loss += o.dropped_loss;
    dropped_queue += o.dropped_queue;
    flood_events += o.flood_events;
    return *this;
}

const char* run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return "ok";
        case RunStatus::Timeout: return "timeout";
        case RunStatus::LinkFailure: return "link_failure";
    }
    return "?";
}

static RunStatus run_status_from(const std::string& s) {
    if (s == "ok") return RunStatus::Ok;
    if (s == "timeout") return RunStatus::Timeout;
    return RunStatus::LinkFailure;
}

MetricsHub::MetricsHub(const PartitionMap& pmap, const PartitionSpec& spec,
                       TileCoord chipset_anchor, bool cross_node_latency)
    : pmap_(pmap), spec_(spec), anchor_(chipset_anchor),
      cross_latency_(cross_node_latency) {}

CutClass MetricsHub::classify(TileCoord src, TileCoord dest) const {
    TileCoord eff_src = pmap_.mesh.contains(src) ? src : anchor_;
    TileCoord eff = pmap_.mesh.contains(dest) ? dest : anchor_;
    bool p2p = false, sw = false;
    TileCoord cur = eff_src;
    while (cur != eff) {
        Port p = route_next_hop(cur, eff);
        TileCoord nxt = cur;
        switch (p) {
            case Port::North: nxt.y++; break;
            case Port::South: nxt.y--; break;
            case Port::East: nxt.x++; break;
            case Port::West: nxt.x--; break;
            case Port::Local: return CutClass::None;
        }
        uint16_t a = pmap_.node_of(cur), b = pmap_.node_of(nxt);
        if (a != b) (spec_.is_p2p_pair(a, b) ? p2p : sw) = true;
        cur = nxt;
    }
    if (sw) return CutClass::Switched;
    return p2p ? CutClass::P2pOnly : CutClass::None;
}

void MetricsHub::on_inject(Cycle now, const Packet& p) {
    ++packets_injected;
    flits_injected += 1 + p.body.size();
    FlowKey k{p.src.x, p.src.y, p.dest.x, p.dest.y, p.plane};
    inflight_[k].push_back(now);
}

void MetricsHub::on_deliver(Cycle now, const Packet& p) {
    ++packets_delivered;
    flits_ejected += 1 + p.body.size();
    last_delivery_cycle = now;
    FlowKey k{p.src.x, p.src.y, p.dest.x, p.dest.y, p.plane};
    auto it = inflight_.find(k);
    if (it == inflight_.end() || it->second.empty()) return;  // cross-node in dist mode
    Cycle t0 = it->second.front();
    it->second.pop_front();
    if (!cross_latency_) return;
    auto cit = class_cache_.find(k);
    if (cit == class_cache_.end())
        cit = class_cache_.emplace(k, classify(p.src, p.dest)).first;
    if (cit->second == CutClass::None) return;
    Cycle lat = now - t0;
    cut_samples_.push_back(lat);
    (cit->second == CutClass::P2pOnly ? p2p_only_samples_ : switched_samples_)
        .push_back(lat);
}

void MetricsHub::on_link_flit(TileCoord from, TileCoord to, uint8_t plane) {
    ++link_flits_[{from.x, from.y, to.x, to.y, plane}];
}

static LatencyStats stats_of(std::vector<Cycle> v) {
    LatencyStats s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.count = v.size();
    s.p50 = v[(v.size() - 1) / 2];
    s.p95 = v[std::min(v.size() - 1, (v.size() * 95) / 100)];
    s.max = v.back();
    double sum = 0;
    for (Cycle c : v) sum += double(c);
    s.mean = sum / double(v.size());
    return s;
}

static double mean_of(const std::vector<Cycle>& v) {
    if (v.empty()) return 0.0;
    double sum = 0;
    for (Cycle c : v) sum += double(c);
    return sum / double(v.size());
}

void MetricsHub::finalize(MetricsReport& r, Cycle completion) const {
    r.completion_cycles = completion;
    r.packets_injected = packets_injected;
    r.packets_delivered = packets_delivered;
    r.flits_injected = flits_injected;
    r.flits_ejected = flits_ejected;
    r.cut_latency = stats_of(cut_samples_);
    r.mean_latency_p2p_only = mean_of(p2p_only_samples_);
    r.mean_latency_switched = mean_of(switched_samples_);
    r.count_p2p_only = p2p_only_samples_.size();
    r.count_switched = switched_samples_.size();
    for (const auto& [k, n] : link_flits_) {
        auto [fx, fy, tx, ty, pl] = k;
        double util = completion ? double(n) / double(completion) : 0.0;
        r.per_link.push_back({{fx, fy}, {tx, ty}, pl, n, util});
    }
}

void LinkStreamValidator::on_flit(TileCoord from, TileCoord to, uint8_t plane,
                                  const Flit& f) {
    St& st = st_[{from.x, from.y, to.x, to.y, plane}];
    if (st.remaining == 0) {
        if (f.kind == FlitKind::HeadTail) return;
        if (f.kind != FlitKind::Head) {
            ++violations_;  // body/tail outside a packet: interleaving
            return;
        }
        uint16_t body_len = uint16_t(f.payload >> 16) & 0x3fff;
        if (body_len == 0) {
            ++violations_;  // Head must carry a body
            return;
        }
        st.remaining = body_len;
        return;
    }
    bool last = st.remaining == 1;
    if ((last && f.kind != FlitKind::Tail) || (!last && f.kind != FlitKind::Body)) {
        ++violations_;
        st.remaining = 0;
        return;
    }
    --st.remaining;
}

static json to_json(const LatencyStats& s) {
    return {{"count", s.count}, {"p50", s.p50}, {"p95", s.p95},
            {"max", s.max},     {"mean", s.mean}};
}

static LatencyStats latency_from(const json& j) {
    LatencyStats s;
    s.count = j.at("count");
    s.p50 = j.at("p50");
    s.p95 = j.at("p95");
    s.max = j.at("max");
    s.mean = j.at("mean");
    return s;
}

std::string MetricsReport::to_json_string() const {
    json j;
    j["schema_version"] = schema_version;
    j["mode"] = mode;
    j["status"] = run_status_name(status);
    j["completion_cycles"] = completion_cycles;
    j["packets_injected"] = packets_injected;
    j["packets_delivered"] = packets_delivered;
    j["flits_injected"] = flits_injected;
    j["flits_ejected"] = flits_ejected;
    j["fabric"] = {{"p2p_bytes", fabric.p2p_bytes},
                   {"switched_bytes", fabric.switched_bytes},
                   {"frames_sent", fabric.frames_sent},
                   {"dropped_loss", fabric.dropped_loss},
                   {"dropped_queue", fabric.dropped_queue},
                   {"flood_events", fabric.flood_events}};
    j["bridge"] = {{"retransmits", bridge.retransmits},
                   {"dup_drops", bridge.dup_drops},
                   {"delivered_duplicates", bridge.delivered_duplicates},
                   {"corrupt_frames", bridge.corrupt_frames},
                   {"wrong_destination", bridge.wrong_destination},
                   {"unknown_channel", bridge.unknown_channel},
                   {"link_failures", bridge.link_failures}};
    j["cut_latency"] = to_json(cut_latency);
    j["mean_latency_p2p_only"] = mean_latency_p2p_only;
    j["mean_latency_switched"] = mean_latency_switched;
    j["count_p2p_only"] = count_p2p_only;
    j["count_switched"] = count_switched;
    j["console_lines"] = console_lines;
    j["workload_success"] = workload_success;
    j["seeds"] = {{"fabric", seed_fabric}, {"workload", seed_workload}};
    j["errors"] = errors;
    json links = json::array();
    for (const auto& l : per_link)
        links.push_back({{"from", {l.from.x, l.from.y}},
                         {"to", {l.to.x, l.to.y}},
                         {"plane", l.plane},
                         {"flits", l.flits},
                         {"utilization", l.utilization}});
    j["per_link"] = links;
    return j.dump(2);
}

MetricsReport MetricsReport::from_json_string(const std::string& s) {
    json j = json::parse(s);
    MetricsReport r;
    r.schema_version = j.at("schema_version");
    r.mode = j.at("mode");
    r.status = run_status_from(j.at("status"));
    r.completion_cycles = j.at("completion_cycles");
    r.packets_injected = j.at("packets_injected");
    r.packets_delivered = j.at("packets_delivered");
    r.flits_injected = j.at("flits_injected");
    r.flits_ejected = j.at("flits_ejected");
    const json& f = j.at("fabric");
    r.fabric.p2p_bytes = f.at("p2p_bytes");
    r.fabric.switched_bytes = f.at("switched_bytes");
    r.fabric.frames_sent = f.at("frames_sent");
    r.fabric.dropped_loss = f.at("dropped_loss");
    r.fabric.dropped_queue = f.at("dropped_queue");
    r.fabric.flood_events = f.at("flood_events");
    const json& b = j.at("bridge");
    r.bridge.retransmits = b.at("retransmits");
    r.bridge.dup_drops = b.at("dup_drops");
    r.bridge.delivered_duplicates = b.at("delivered_duplicates");
    r.bridge.corrupt_frames = b.at("corrupt_frames");
    r.bridge.wrong_destination = b.at("wrong_destination");
    r.bridge.unknown_channel = b.at("unknown_channel");
    r.bridge.link_failures = b.at("link_failures");
    r.cut_latency = latency_from(j.at("cut_latency"));
    r.mean_latency_p2p_only = j.at("mean_latency_p2p_only");
    r.mean_latency_switched = j.at("mean_latency_switched");
    r.count_p2p_only = j.at("count_p2p_only");
    r.count_switched = j.at("count_switched");
    r.console_lines = j.at("console_lines");
    r.workload_success = j.at("workload_success");
    r.seed_fabric = j.at("seeds").at("fabric");
    r.seed_workload = j.at("seeds").at("workload");
    r.errors = j.at("errors").get<std::vector<std::string>>();
    for (const json& l : j.at("per_link")) {
        LinkUtil u;
        u.from = {l.at("from")[0], l.at("from")[1]};
        u.to = {l.at("to")[0], l.at("to")[1]};
        u.plane = l.at("plane");
        u.flits = l.at("flits");
        u.utilization = l.at("utilization");
        r.per_link.push_back(u);
    }
    return r;
}

std::string MetricsReport::render_table() const {
    std::ostringstream os;
    os << "mode                 " << mode << "\n"
       << "status               " << run_status_name(status) << "\n"
       << "completion_cycles    " << completion_cycles << "\n"
       << "packets delivered    " << packets_delivered << " / " << packets_injected
       << " injected\n"
       << "flits ejected        " << flits_ejected << " / " << flits_injected
       << " injected\n"
       << "p2p bytes            " << fabric.p2p_bytes << "\n"
       << "switched bytes       " << fabric.switched_bytes << "\n"
       << "retransmits          " << bridge.retransmits << "\n"
       << "dup frames dropped   " << bridge.dup_drops << "\n"
       << "corrupt frames       " << bridge.corrupt_frames << "\n"
       << "cut latency p50/p95/max  " << cut_latency.p50 << "/" << cut_latency.p95
       << "/" << cut_latency.max << " (n=" << cut_latency.count << ")\n"
       << "mean latency p2p-only    " << mean_latency_p2p_only
       << " (n=" << count_p2p_only << ")\n"
       << "mean latency switched    " << mean_latency_switched
       << " (n=" << count_switched << ")\n"
       << "console lines        " << console_lines << "\n"
       << "workload success     " << (workload_success ? "yes" : "no") << "\n";
    for (const auto& e : errors) os << "error: " << e << "\n";
    return os.str();
}

std::string MetricsReport::render_csv() const {
    std::ostringstream os;
    os << "from_x,from_y,to_x,to_y,plane,flits,utilization\n";
    for (const auto& l : per_link)
        os << l.from.x << "," << l.from.y << "," << l.to.x << "," << l.to.y << ","
           << int(l.plane) << "," << l.flits << "," << l.utilization << "\n";
    return os.str();
}

}  // namespace emix
