#include "emix/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emix/rng.hpp"

namespace emix {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const char* where,
                    std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

const char* strategy_name(PartitionStrategy s) {
    switch (s) {
        case PartitionStrategy::Vertical: return "vertical";
        case PartitionStrategy::Horizontal: return "horizontal";
        case PartitionStrategy::Grid: return "grid";
    }
    return "?";
}

PartitionStrategy strategy_from(const std::string& s) {
    if (s == "vertical") return PartitionStrategy::Vertical;
    if (s == "horizontal") return PartitionStrategy::Horizontal;
    if (s == "grid") return PartitionStrategy::Grid;
    throw ConfigError("unknown partition strategy \"" + s + "\"");
}

WorkloadKind workload_from(const std::string& s) {
    if (s == "memtest") return WorkloadKind::Memtest;
    if (s == "uniform_random") return WorkloadKind::UniformRandom;
    if (s == "nearest_neighbor") return WorkloadKind::NearestNeighbor;
    if (s == "hotspot") return WorkloadKind::Hotspot;
    throw ConfigError("unknown workload type \"" + s + "\"");
}

json link_to_json(const LinkModel& l) {
    return {{"latency", l.latency},
            {"bandwidth_bytes_per_cycle", l.bandwidth_bytes_per_cycle},
            {"loss_prob", l.loss_prob}};
}

LinkModel link_from_json(const json& j, const char* where) {
    reject_unknown(j, where, {"latency", "bandwidth_bytes_per_cycle", "loss_prob"});
    LinkModel l;
    opt(j, "latency", l.latency);
    opt(j, "bandwidth_bytes_per_cycle", l.bandwidth_bytes_per_cycle);
    opt(j, "loss_prob", l.loss_prob);
    return l;
}

}  // namespace

const char* workload_kind_name(WorkloadKind k) {
    switch (k) {
        case WorkloadKind::Memtest: return "memtest";
        case WorkloadKind::UniformRandom: return "uniform_random";
        case WorkloadKind::NearestNeighbor: return "nearest_neighbor";
        case WorkloadKind::Hotspot: return "hotspot";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    mesh.validate();
    partition.validate(mesh);
    fabric.p2p.validate(/*p2p=*/true);
    fabric.switched_link.validate(/*p2p=*/false);
    if (fabric.switch_forwarding_latency < 1)
        throw ConfigError("switch forwarding latency must be >= 1");
    if (fabric.switch_queue_bytes < 2048)
        throw ConfigError("switch queue must hold at least one max frame");
    // Configuration sanity: the low-latency path must actually be faster.
    if (fabric.p2p_end_to_end() >= fabric.switched_end_to_end())
        throw ConfigError("p2p end-to-end latency must be below the switched path");
    if (bridge.retx.window_size < 1) throw ConfigError("arq window must be >= 1");
    if (bridge.retx.timeout < 1) throw ConfigError("arq timeout must be >= 1");
    if (bridge.retx.max_retries < 1) throw ConfigError("max_retries must be >= 1");
    if (bridge.batch_words < 1 || bridge.batch_words > kMaxWordsPerFrame)
        throw ConfigError("batch_words must be in 1..=134");
    if (bridge.flush_cycles < 1) throw ConfigError("flush_cycles must be >= 1");
    if (bridge.p2p_credits < 1) throw ConfigError("p2p_credits must be >= 1");
    if (bridge.cdc_depth < 1) throw ConfigError("cdc depth must be >= 1");
    if (bridge.cdc_push_period < 1 || bridge.cdc_pop_period < 1)
        throw ConfigError("cdc periods must be >= 1");
    if (workload.kind == WorkloadKind::Memtest) {
        if (workload.words_per_core < 1)
            throw ConfigError("words_per_core must be >= 1");
        if (mesh.width > 255)
            throw ConfigError("chipset workloads need width <= 255 (8-bit header)");
        uint64_t top = uint64_t(mesh.tile_count()) * workload.words_per_core;
        if (top > run.chipset_memory_words)
            throw ConfigError("memtest address range exceeds chipset memory");
    } else {
        if (workload.body_len > kMaxBodyLen)
            throw ConfigError("body_len exceeds 14-bit flit count field");
        if (workload.kind == WorkloadKind::Hotspot &&
            !mesh.contains(workload.hotspot_target))
            throw ConfigError("hotspot target outside the mesh");
    }
    if (run.max_cycles < 1) throw ConfigError("max_cycles must be >= 1");
}

void ExperimentConfig::apply_seed_override(uint64_t master) {
    fabric.seed = derive_seed(master, 1);
    workload.seed = derive_seed(master, 2);
}

std::string ExperimentConfig::to_json_string() const {
    json j;
    j["schema_version"] = 1;
    j["mesh"] = {{"width", mesh.width},
                 {"height", mesh.height},
                 {"planes", mesh.planes},
                 {"router_buffer_depth", mesh.router_buffer_depth},
                 {"credits_per_link", mesh.credits_per_link}};
    json pairs = json::array();
    for (auto [a, b] : partition.p2p_pairs) pairs.push_back({a, b});
    j["partition"] = {{"strategy", strategy_name(partition.strategy)},
                      {"node_count", partition.node_count},
                      {"grid_cols", partition.grid_cols},
                      {"grid_rows", partition.grid_rows},
                      {"chipset_node", partition.chipset_node},
                      {"p2p_pairs", pairs}};
    j["fabric"] = {{"p2p", link_to_json(fabric.p2p)},
                   {"switched", link_to_json(fabric.switched_link)},
                   {"switch_forwarding_latency", fabric.switch_forwarding_latency},
                   {"switch_queue_bytes", fabric.switch_queue_bytes},
                   {"seed", fabric.seed}};
    j["bridge"] = {{"window", bridge.retx.window_size},
                   {"timeout", bridge.retx.timeout},
                   {"max_retries", bridge.retx.max_retries},
                   {"batch_words", bridge.batch_words},
                   {"flush_cycles", bridge.flush_cycles},
                   {"p2p_credits", bridge.p2p_credits},
                   {"cdc_depth", bridge.cdc_depth},
                   {"cdc_push_period", bridge.cdc_push_period},
                   {"cdc_pop_period", bridge.cdc_pop_period}};
    j["workload"] = {{"type", workload_kind_name(workload.kind)},
                     {"words_per_core", workload.words_per_core},
                     {"strict_sequential", workload.strict_sequential},
                     {"packets_per_tile", workload.packets_per_tile},
                     {"body_len", workload.body_len},
                     {"seed", workload.seed},
                     {"hotspot_target", {workload.hotspot_target.x,
                                         workload.hotspot_target.y}}};
    j["run"] = {{"max_cycles", run.max_cycles},
                {"trace_path", run.trace_path},
                {"word_trace_path", run.word_trace_path},
                {"report_path", run.report_path},
                {"chipset_memory_words", run.chipset_memory_words},
                {"console_enabled", run.console_enabled}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "config",
                   {"schema_version", "mesh", "partition", "fabric", "bridge",
                    "workload", "run"});
    if (j.contains("schema_version") && j.at("schema_version") != 1)
        throw ConfigError("unsupported config schema_version");
    ExperimentConfig c;
    try {
        if (j.contains("mesh")) {
            const json& m = j.at("mesh");
            reject_unknown(m, "mesh",
                           {"width", "height", "planes", "router_buffer_depth",
                            "credits_per_link"});
            opt(m, "width", c.mesh.width);
            opt(m, "height", c.mesh.height);
            opt(m, "planes", c.mesh.planes);
            opt(m, "router_buffer_depth", c.mesh.router_buffer_depth);
            opt(m, "credits_per_link", c.mesh.credits_per_link);
        }
        if (j.contains("partition")) {
            const json& p = j.at("partition");
            reject_unknown(p, "partition",
                           {"strategy", "node_count", "grid_cols", "grid_rows",
                            "chipset_node", "p2p_pairs"});
            if (p.contains("strategy"))
                c.partition.strategy = strategy_from(p.at("strategy"));
            opt(p, "node_count", c.partition.node_count);
            opt(p, "grid_cols", c.partition.grid_cols);
            opt(p, "grid_rows", c.partition.grid_rows);
            opt(p, "chipset_node", c.partition.chipset_node);
            if (p.contains("p2p_pairs"))
                for (const json& pr : p.at("p2p_pairs")) {
                    if (!pr.is_array() || pr.size() != 2)
                        throw ConfigError("p2p_pairs entries must be [a, b]");
                    c.partition.p2p_pairs.emplace_back(pr[0].get<uint16_t>(),
                                                       pr[1].get<uint16_t>());
                }
        }
        if (j.contains("fabric")) {
            const json& f = j.at("fabric");
            reject_unknown(f, "fabric",
                           {"p2p", "switched", "switch_forwarding_latency",
                            "switch_queue_bytes", "seed"});
            if (f.contains("p2p")) c.fabric.p2p = link_from_json(f.at("p2p"), "fabric.p2p");
            if (f.contains("switched"))
                c.fabric.switched_link = link_from_json(f.at("switched"), "fabric.switched");
            opt(f, "switch_forwarding_latency", c.fabric.switch_forwarding_latency);
            opt(f, "switch_queue_bytes", c.fabric.switch_queue_bytes);
            opt(f, "seed", c.fabric.seed);
        }
        if (j.contains("bridge")) {
            const json& b = j.at("bridge");
            reject_unknown(b, "bridge",
                           {"window", "timeout", "max_retries", "batch_words",
                            "flush_cycles", "p2p_credits", "cdc_depth",
                            "cdc_push_period", "cdc_pop_period"});
            opt(b, "window", c.bridge.retx.window_size);
            opt(b, "timeout", c.bridge.retx.timeout);
            opt(b, "max_retries", c.bridge.retx.max_retries);
            opt(b, "batch_words", c.bridge.batch_words);
            opt(b, "flush_cycles", c.bridge.flush_cycles);
            opt(b, "p2p_credits", c.bridge.p2p_credits);
            opt(b, "cdc_depth", c.bridge.cdc_depth);
            opt(b, "cdc_push_period", c.bridge.cdc_push_period);
            opt(b, "cdc_pop_period", c.bridge.cdc_pop_period);
        }
        if (j.contains("workload")) {
            const json& w = j.at("workload");
            reject_unknown(w, "workload",
                           {"type", "words_per_core", "strict_sequential",
                            "packets_per_tile", "body_len", "seed",
                            "hotspot_target"});
            if (w.contains("type")) c.workload.kind = workload_from(w.at("type"));
            opt(w, "words_per_core", c.workload.words_per_core);
            opt(w, "strict_sequential", c.workload.strict_sequential);
            opt(w, "packets_per_tile", c.workload.packets_per_tile);
            opt(w, "body_len", c.workload.body_len);
            opt(w, "seed", c.workload.seed);
            if (w.contains("hotspot_target")) {
                const json& t = w.at("hotspot_target");
                if (!t.is_array() || t.size() != 2)
                    throw ConfigError("hotspot_target must be [x, y]");
                c.workload.hotspot_target = {t[0].get<uint16_t>(),
                                             t[1].get<uint16_t>()};
            }
        }
        if (j.contains("run")) {
            const json& r = j.at("run");
            reject_unknown(r, "run",
                           {"max_cycles", "trace_path", "word_trace_path",
                            "report_path", "chipset_memory_words",
                            "console_enabled"});
            opt(r, "max_cycles", c.run.max_cycles);
            opt(r, "trace_path", c.run.trace_path);
            opt(r, "word_trace_path", c.run.word_trace_path);
            opt(r, "report_path", c.run.report_path);
            opt(r, "chipset_memory_words", c.run.chipset_memory_words);
            opt(r, "console_enabled", c.run.console_enabled);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_json_string(ss.str());
}

ExperimentPlan ExperimentPlan::build(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentPlan p;
    p.cfg = cfg;
    p.pmap = partition(cfg.mesh, cfg.partition);
    p.cuts = cut_links(cfg.mesh, p.pmap);
    p.channels = assign_channels(p.cuts, p.pmap, cfg.partition);
    p.chipset_anchor = p.pmap.node_rects[cfg.partition.chipset_node].min_corner();
    return p;
}

}  // namespace emix
