#include "emix/manifest.hpp"

#include <openssl/sha.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace emix {

using nlohmann::json;

Manifest Manifest::from_plan(const ExperimentPlan& plan, uint16_t base_port) {
    Manifest m;
    m.config = plan.cfg;
    m.switch_ep = {"127.0.0.1", base_port};
    for (uint16_t n = 0; n < plan.pmap.node_count(); ++n)
        m.node_eps.push_back({"127.0.0.1", uint16_t(base_port + 1 + n)});
    return m;
}

std::string Manifest::to_json_string() const {
    ExperimentPlan plan = ExperimentPlan::build(config);
    json j;
    j["schema_version"] = 1;
    j["config"] = json::parse(config.to_json_string());
    json nodes = json::array();
    for (uint16_t n = 0; n < plan.pmap.node_count(); ++n) {
        const TileRect& r = plan.pmap.node_rects[n];
        nodes.push_back({{"index", n},
                         {"rect", {r.x0, r.y0, r.w, r.h}},
                         {"tiles", r.tiles()},
                         {"is_chipset", n == config.partition.chipset_node},
                         {"host", node_eps[n].host},
                         {"p2p_port", node_eps[n].port}});
    }
    j["nodes"] = nodes;
    j["chipset_anchor"] = {plan.chipset_anchor.x, plan.chipset_anchor.y};
    json chans = json::array();
    for (const ChannelAssignment& e : plan.channels.entries)
        chans.push_back({{"from", {e.link.from.x, e.link.from.y}},
                         {"to", {e.link.to.x, e.link.to.y}},
                         {"plane", e.link.plane},
                         {"from_node", e.from_node},
                         {"to_node", e.to_node},
                         {"channel", e.channel_id},
                         {"path", e.path == ChannelPath::P2p ? "p2p" : "switched"}});
    j["channels"] = chans;
    j["switch"] = {{"host", switch_ep.host}, {"port", switch_ep.port}};
    j["dist"] = {{"connect_timeout_ms", dist.connect_timeout_ms},
                 {"idle_timeout_ms", dist.idle_timeout_ms},
                 {"time_quantum", dist.time_quantum}};
    return j.dump(2);
}

Manifest Manifest::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest m;
    try {
        if (j.at("schema_version") != 1)
            throw ConfigError("unsupported manifest schema_version");
        m.config = ExperimentConfig::from_json_string(j.at("config").dump());
        for (const json& n : j.at("nodes"))
            m.node_eps.push_back({n.at("host"), n.at("p2p_port")});
        m.switch_ep = {j.at("switch").at("host"), j.at("switch").at("port")};
        const json& d = j.at("dist");
        m.dist.connect_timeout_ms = d.at("connect_timeout_ms");
        m.dist.idle_timeout_ms = d.at("idle_timeout_ms");
        m.dist.time_quantum = d.at("time_quantum");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad manifest value: ") + e.what());
    }
    if (m.node_eps.size() != m.config.partition.node_count)
        throw ConfigError("manifest node list does not match node_count");
    return m;
}

Manifest Manifest::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read manifest file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_json_string(ss.str());
}

std::array<uint8_t, 32> Manifest::hash() const {
    std::string canon = to_json_string();
    std::array<uint8_t, 32> out{};
    SHA256(reinterpret_cast<const unsigned char*>(canon.data()), canon.size(),
           out.data());
    return out;
}

std::string Manifest::human_summary(const ExperimentPlan& plan) const {
    std::ostringstream os;
    os << "mesh " << plan.cfg.mesh.width << "x" << plan.cfg.mesh.height << ", "
       << plan.pmap.node_count() << " node(s), chipset on node "
       << plan.cfg.partition.chipset_node << " (anchor "
       << to_string(plan.chipset_anchor) << ")\n";
    for (uint16_t n = 0; n < plan.pmap.node_count(); ++n) {
        const TileRect& r = plan.pmap.node_rects[n];
        os << "  node " << n << ": tiles [" << r.x0 << ".." << (r.x0 + r.w - 1)
           << "]x[" << r.y0 << ".." << (r.y0 + r.h - 1) << "] (" << r.tiles()
           << " tiles)\n";
    }
    std::map<std::pair<uint16_t, uint16_t>, std::pair<uint64_t, ChannelPath>> bounds;
    for (const ChannelAssignment& e : plan.channels.entries) {
        auto key = std::minmax(e.from_node, e.to_node);
        auto& b = bounds[{key.first, key.second}];
        b.first++;
        b.second = e.path;
    }
    os << "cut links: " << plan.cuts.size() << " across " << bounds.size()
       << " boundary(ies)\n";
    for (const auto& [k, v] : bounds)
        os << "  boundary " << k.first << "-" << k.second << ": " << v.first
           << " channels, path "
           << (v.second == ChannelPath::P2p ? "p2p" : "switched") << "\n";
    return os.str();
}

}  // namespace emix
