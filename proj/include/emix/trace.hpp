// Delivery traces (one record per delivered packet), per-channel word
// traces, and the comparison oracle used by the transparency checks.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "emix/transport.hpp"
#include "emix/types.hpp"

namespace emix {

struct TraceRecord {
    Cycle cycle = 0;
    Packet packet;
    bool operator==(const TraceRecord&) const = default;
};

struct TraceBuffer {
    std::vector<TraceRecord> records;
};

void write_trace(std::ostream& os, const TraceBuffer& t);
void write_trace_file(const std::string& path, const TraceBuffer& t);
TraceBuffer read_trace(std::istream& is);
TraceBuffer read_trace_file(const std::string& path);

struct TraceDiff {
    std::string stream;  // "(sx,sy)->(dx,dy) plane p"
    size_t index;        // first diverging packet within the stream
    std::string what;
};

struct CompareResult {
    bool equal = true;
    std::vector<TraceDiff> diffs;  // first divergence per stream
    std::string summary() const;
};

// Compares per-(src,dest,plane) packet sequences, ignoring cycle stamps.
CompareResult compare_traces(const TraceBuffer& a, const TraceBuffer& b);

// Words delivered by the demux at one node, in order, per sending peer.
struct WordTraceRecord {
    uint16_t peer = 0;
    StreamWord word;
    bool operator==(const WordTraceRecord&) const = default;
};

struct WordTraceBuffer {
    std::vector<WordTraceRecord> records;
};

void write_word_trace_file(const std::string& path, const WordTraceBuffer& t);
WordTraceBuffer read_word_trace_file(const std::string& path);

// Equality of per-(peer, channel) word sequences.
bool word_traces_equal(const WordTraceBuffer& a, const WordTraceBuffer& b,
                       std::string* why = nullptr);

}  // namespace emix
