// In-process execution: the monolithic reference mode and the partitioned
// mode where nodes exchange real frame bytes through the fabric model.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "emix/config.hpp"
#include "emix/metrics.hpp"
#include "emix/trace.hpp"

namespace emix {

struct RunOptions {
    bool check_invariants = false;  // per-cycle credit/flit conservation
    bool validate_streams = false;  // wormhole stream validator on every link
};

struct RunResult {
    MetricsReport report;
    TraceBuffer trace;                        // merged, deterministic order
    std::vector<WordTraceBuffer> word_traces;  // per node (partitioned only)
    std::string console;                       // chipset console contents
    uint64_t stream_violations = 0;
    uint64_t credit_violations = 0;
    uint64_t conservation_violations = 0;
    uint64_t node_tx_bytes = 0;  // frame bytes counted at the node bridges
};

RunResult run_monolithic(const ExperimentPlan& plan, const RunOptions& opt = {});
RunResult run_partitioned(const ExperimentPlan& plan, const RunOptions& opt = {});

// Writes trace/report files per the plan's run section (empty paths skip).
void write_run_outputs(const ExperimentPlan& plan, const RunResult& r);

}  // namespace emix
