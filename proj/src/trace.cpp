#include "emix/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace emix {

namespace {
constexpr const char* kTraceHeader = "#emix-trace v1";
constexpr const char* kWordHeader = "#emix-words v1";

std::string stream_name(const Packet& p) {
    std::ostringstream os;
    os << "(" << p.src.x << "," << p.src.y << ")->(" << p.dest.x << "," << p.dest.y
       << ") plane " << int(p.plane);
    return os.str();
}
}  // namespace

void write_trace(std::ostream& os, const TraceBuffer& t) {
    os << kTraceHeader << "\n";
    for (const TraceRecord& r : t.records) {
        os << "p " << r.cycle << " " << r.packet.src.x << " " << r.packet.src.y
           << " " << r.packet.dest.x << " " << r.packet.dest.y << " "
           << int(r.packet.plane);
        for (uint64_t w : r.packet.body) {
            os << " " << std::hex << w << std::dec;
        }
        os << "\n";
    }
}

void write_trace_file(const std::string& path, const TraceBuffer& t) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write trace file " + path);
    write_trace(os, t);
}

TraceBuffer read_trace(std::istream& is) {
    TraceBuffer t;
    std::string line;
    if (!std::getline(is, line) || line != kTraceHeader)
        throw Error("not an emix trace (bad header)");
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "p") throw Error("bad trace record: " + line);
        TraceRecord r;
        unsigned sx, sy, dx, dy, plane;
        ls >> r.cycle >> sx >> sy >> dx >> dy >> plane;
        if (!ls) throw Error("bad trace record: " + line);
        r.packet.src = {uint16_t(sx), uint16_t(sy)};
        r.packet.dest = {uint16_t(dx), uint16_t(dy)};
        r.packet.plane = uint8_t(plane);
        uint64_t w;
        while (ls >> std::hex >> w) r.packet.body.push_back(w);
        t.records.push_back(std::move(r));
    }
    return t;
}

TraceBuffer read_trace_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read trace file " + path);
    return read_trace(is);
}

std::string CompareResult::summary() const {
    if (equal) return "Equal";
    std::ostringstream os;
    os << "Diff (" << diffs.size() << " stream(s)):\n";
    for (const TraceDiff& d : diffs)
        os << "  " << d.stream << " @" << d.index << ": " << d.what << "\n";
    return os.str();
}

CompareResult compare_traces(const TraceBuffer& a, const TraceBuffer& b) {
    using Key = std::tuple<uint16_t, uint16_t, uint16_t, uint16_t, uint8_t>;
    auto group = [](const TraceBuffer& t) {
        std::map<Key, std::vector<const Packet*>> m;
        for (const TraceRecord& r : t.records)
            m[{r.packet.src.x, r.packet.src.y, r.packet.dest.x, r.packet.dest.y,
               r.packet.plane}]
                .push_back(&r.packet);
        return m;
    };
    auto ma = group(a), mb = group(b);
    CompareResult res;
    auto name_of = [](const Key& k) {
        Packet p;
        p.src = {std::get<0>(k), std::get<1>(k)};
        p.dest = {std::get<2>(k), std::get<3>(k)};
        p.plane = std::get<4>(k);
        return stream_name(p);
    };
    for (const auto& [k, va] : ma) {
        auto it = mb.find(k);
        if (it == mb.end()) {
            res.diffs.push_back({name_of(k), 0, "stream missing in B"});
            continue;
        }
        const auto& vb = it->second;
        size_t n = std::min(va.size(), vb.size());
        bool diverged = false;
        for (size_t i = 0; i < n; ++i) {
            if (*va[i] == *vb[i]) continue;
            res.diffs.push_back({name_of(k), i, "packet contents differ"});
            diverged = true;
            break;
        }
        if (!diverged && va.size() != vb.size())
            res.diffs.push_back({name_of(k), n,
                                 "stream lengths differ (" + std::to_string(va.size()) +
                                     " vs " + std::to_string(vb.size()) + ")"});
    }
    for (const auto& [k, vb] : mb)
        if (!ma.count(k)) res.diffs.push_back({name_of(k), 0, "stream missing in A"});
    res.equal = res.diffs.empty();
    return res;
}

void write_word_trace_file(const std::string& path, const WordTraceBuffer& t) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write word trace file " + path);
    os << kWordHeader << "\n";
    for (const WordTraceRecord& r : t.records)
        os << "w " << r.peer << " " << r.word.channel << " " << int(r.word.kind)
           << " " << int(r.word.last) << " " << std::hex << r.word.data << std::dec
           << "\n";
}

WordTraceBuffer read_word_trace_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read word trace file " + path);
    WordTraceBuffer t;
    std::string line;
    if (!std::getline(is, line) || line != kWordHeader)
        throw Error("not an emix word trace (bad header)");
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        unsigned peer, channel, kind, last;
        uint64_t data;
        ls >> tag >> peer >> channel >> kind >> last >> std::hex >> data;
        if (!ls || tag != "w") throw Error("bad word trace record: " + line);
        WordTraceRecord r;
        r.peer = uint16_t(peer);
        r.word = {data, uint16_t(channel), FlitKind(kind), last != 0};
        t.records.push_back(r);
    }
    return t;
}

bool word_traces_equal(const WordTraceBuffer& a, const WordTraceBuffer& b,
                       std::string* why) {
    using Key = std::pair<uint16_t, uint16_t>;  // (peer, channel)
    auto group = [](const WordTraceBuffer& t) {
        std::map<Key, std::vector<StreamWord>> m;
        for (const WordTraceRecord& r : t.records)
            m[{r.peer, r.word.channel}].push_back(r.word);
        return m;
    };
    auto ma = group(a), mb = group(b);
    if (ma.size() != mb.size()) {
        if (why) *why = "different channel sets";
        return false;
    }
    for (const auto& [k, va] : ma) {
        auto it = mb.find(k);
        if (it == mb.end() || it->second != va) {
            if (why)
                *why = "channel (" + std::to_string(k.first) + "," +
                       std::to_string(k.second) + ") differs";
            return false;
        }
    }
    return true;
}

}  // namespace emix
