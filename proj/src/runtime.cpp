#include "emix/runtime.hpp"

#include <algorithm>
#include <fstream>

#include "emix/node.hpp"

namespace emix {

namespace {

struct World {
    std::vector<std::unique_ptr<NodeSim>> nodes;
    std::unique_ptr<SwitchSim> sw;
    MetricsHub hub;
    LinkStreamValidator validator;
    FabricCounters fabric;

    World(const ExperimentPlan& plan, bool partitioned, const RunOptions& opt)
        : hub(plan.pmap, plan.cfg.partition, plan.chipset_anchor,
              /*cross_node_latency=*/true) {
        if (partitioned) {
            for (uint16_t n = 0; n < plan.pmap.node_count(); ++n) {
                NodeView v{n, plan.pmap.node_rects[n],
                           n == plan.cfg.partition.chipset_node, true};
                nodes.push_back(std::make_unique<NodeSim>(plan, v, &hub));
            }
            SwitchConfig sc;
            sc.forwarding_latency = plan.cfg.fabric.switch_forwarding_latency;
            sc.egress_queue_bytes = plan.cfg.fabric.switch_queue_bytes;
            sc.node_link = plan.cfg.fabric.switched_link;
            sc.seed = plan.cfg.fabric.seed;
            sc.port_count = plan.pmap.node_count();
            sw = std::make_unique<SwitchSim>(sc);
        } else {
            NodeView v{0, TileRect{0, 0, plan.cfg.mesh.width, plan.cfg.mesh.height},
                       true, false};
            nodes.push_back(std::make_unique<NodeSim>(plan, v, &hub));
        }
        for (auto& n : nodes) {
            n->submesh().check_conservation = opt.check_invariants;
            if (opt.validate_streams)
                n->on_link_flit_extra = [this](TileCoord f, TileCoord t, uint8_t pl,
                                               const Flit& fl) {
                    validator.on_flit(f, t, pl, fl);
                };
        }
    }
};

RunResult run_in_process(const ExperimentPlan& plan, bool partitioned,
                         const RunOptions& opt) {
    World w(plan, partitioned, opt);
    const Cycle max_cycles = plan.cfg.run.max_cycles;
    RunStatus status = RunStatus::Timeout;
    Cycle end_cycle = max_cycles;

    for (Cycle cycle = 0; cycle <= max_cycles; ++cycle) {
        if (w.sw) {
            w.sw->advance(cycle);
            for (auto& d : w.sw->take_deliveries())
                w.nodes[d.port]->rx_frame(kSwitchSource, std::move(d.frame),
                                          d.arrival);
        }
        bool all_done = true;
        bool any_failed = false;
        for (auto& n : w.nodes) {
            n->step(cycle);
            for (auto& f : n->take_tx()) {
                ++w.fabric.frames_sent;
                if (f.path == ChannelPath::P2p) {
                    w.fabric.p2p_bytes += f.bytes.size();
                    Cycle arrival = f.departure + plan.cfg.fabric.p2p.latency;
                    w.nodes[f.peer]->rx_frame(n->index(), std::move(f.bytes),
                                              arrival);
                } else {
                    w.fabric.switched_bytes += f.bytes.size();
                    w.sw->submit(n->index(), std::move(f.bytes), f.departure);
                }
            }
            all_done &= n->done();
            any_failed |= n->failed();
        }
        if (any_failed) {
            status = RunStatus::LinkFailure;
            end_cycle = cycle;
            break;
        }
        if (all_done) {
            status = RunStatus::Ok;
            end_cycle = cycle;
            break;
        }
    }

    RunResult r;
    Cycle completion = 0;
    for (auto& n : w.nodes) completion = std::max(completion, n->completion_cycle());
    if (status == RunStatus::Timeout) completion = end_cycle;
    w.hub.finalize(r.report, completion);
    r.report.mode = partitioned ? "part" : "mono";
    r.report.status = status;
    r.report.seed_fabric = plan.cfg.fabric.seed;
    r.report.seed_workload = plan.cfg.workload.seed;
    for (auto& n : w.nodes) {
        r.report.bridge += n->bridge_counters();
        if (n->chipset()) {
            r.report.console_lines = n->chipset()->console().size();
            r.console = n->chipset()->console_text();
        }
        r.credit_violations += n->submesh().credit_violations();
        r.conservation_violations += n->submesh().flit_conservation_violations();
        r.word_traces.push_back(n->word_trace());
        r.node_tx_bytes += n->tx_bytes_p2p() + n->tx_bytes_switched();
    }
    r.report.fabric = w.fabric;
    if (w.sw) {
        r.report.fabric.dropped_loss = w.sw->counters().dropped_loss;
        r.report.fabric.dropped_queue = w.sw->counters().dropped_queue;
        r.report.fabric.flood_events = w.sw->counters().flood_events;
    }
    r.stream_violations = w.validator.violations();

    bool workload_ok = status == RunStatus::Ok;
    for (auto& n : w.nodes) workload_ok &= !n->workload_failed();
    r.report.workload_success = workload_ok;
    if (status == RunStatus::Timeout)
        r.report.errors.push_back("workload incomplete at max_cycles");
    for (auto& n : w.nodes)
        if (n->failed()) r.report.errors.push_back(n->failure());

    // Deterministic merged trace: cycle, then node, then per-node order.
    struct Key {
        Cycle c;
        uint16_t node;
        size_t idx;
        const TraceRecord* rec;
    };
    std::vector<Key> keys;
    for (uint16_t ni = 0; ni < w.nodes.size(); ++ni) {
        const auto& tr = w.nodes[ni]->trace();
        for (size_t i = 0; i < tr.records.size(); ++i)
            keys.push_back({tr.records[i].cycle, ni, i, &tr.records[i]});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.c != b.c) return a.c < b.c;
        if (a.node != b.node) return a.node < b.node;
        return a.idx < b.idx;
    });
    r.trace.records.reserve(keys.size());
    for (const Key& k : keys) r.trace.records.push_back(*k.rec);
    return r;
}

}  // namespace

RunResult run_monolithic(const ExperimentPlan& plan, const RunOptions& opt) {
    return run_in_process(plan, false, opt);
}

RunResult run_partitioned(const ExperimentPlan& plan, const RunOptions& opt) {
    return run_in_process(plan, true, opt);
}

void write_run_outputs(const ExperimentPlan& plan, const RunResult& r) {
    const RunSection& rs = plan.cfg.run;
    if (!rs.trace_path.empty()) write_trace_file(rs.trace_path, r.trace);
    if (!rs.report_path.empty()) {
        std::ofstream os(rs.report_path);
        if (!os) throw Error("cannot write report file " + rs.report_path);
        os << r.report.to_json_string() << "\n";
    }
    if (!rs.word_trace_path.empty())
        for (size_t i = 0; i < r.word_traces.size(); ++i)
            write_word_trace_file(rs.word_trace_path + ".node" + std::to_string(i),
                                  r.word_traces[i]);
}

}  // namespace emix
