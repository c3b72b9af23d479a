// Regenerates the frame fixtures under fixtures/golden/. The committed
// vectors are the canonical wire encoding; run this only when the format
// deliberately changes, and review the diff.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "emix/bridge.hpp"
#include "emix/rng.hpp"

using namespace emix;
using nlohmann::json;

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "fixtures/golden";
    std::filesystem::create_directories(dir);
    Rng rng(0xE01DE);
    json index = json::array();

    auto emit = [&](int i, const std::vector<uint8_t>& bytes, const json& meta) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%02d.bin", i);
        std::ofstream os(dir + "/" + name, std::ios::binary);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 std::streamsize(bytes.size()));
        json entry = meta;
        entry["file"] = name;
        entry["bytes"] = bytes.size();
        index.push_back(entry);
    };

    int id = 0;
    // 16 DATA frames with growing word counts and mixed sidebands.
    const size_t word_counts[16] = {1, 1, 2, 3, 4, 5, 7, 8,
                                    10, 13, 16, 21, 32, 64, 100, 134};
    for (size_t wc : word_counts) {
        uint8_t src_n = uint8_t(id % 8), dst_n = uint8_t((id + 1) % 8);
        uint32_t seq = uint32_t(rng.below(1000));
        uint32_t ack = uint32_t(rng.below(1000));
        std::vector<StreamWord> words;
        json jwords = json::array();
        for (size_t w = 0; w < wc; ++w) {
            StreamWord sw;
            sw.channel = uint16_t(rng.below(24));
            sw.data = rng.next();
            switch (rng.below(4)) {
                case 0: sw.kind = FlitKind::Head; break;
                case 1: sw.kind = FlitKind::Body; break;
                case 2: sw.kind = FlitKind::Tail; break;
                default: sw.kind = FlitKind::HeadTail; break;
            }
            sw.last = sw.kind == FlitKind::Tail || sw.kind == FlitKind::HeadTail;
            words.push_back(sw);
            jwords.push_back({{"channel", sw.channel},
                              {"data", sw.data},
                              {"kind", int(sw.kind)},
                              {"last", sw.last}});
        }
        auto bytes = eth_encode(NodeMac::for_node(dst_n), NodeMac::for_node(src_n),
                                EthFrameType::Data, seq, ack, words);
        emit(id++, bytes,
             {{"type", "data"},
              {"src_node", src_n},
              {"dst_node", dst_n},
              {"seq", seq},
              {"ack", ack},
              {"words", jwords}});
    }
    // 4 ACK frames.
    for (int k = 0; k < 4; ++k) {
        uint8_t src_n = uint8_t(7 - k), dst_n = uint8_t(k);
        uint32_t ack = uint32_t(rng.below(100000));
        auto bytes = eth_encode(NodeMac::for_node(dst_n), NodeMac::for_node(src_n),
                                EthFrameType::Ack, 0, ack, {});
        emit(id++, bytes,
             {{"type", "ack"},
              {"src_node", src_n},
              {"dst_node", dst_n},
              {"seq", 0},
              {"ack", ack},
              {"words", json::array()}});
    }

    std::ofstream os(dir + "/index.json");
    os << index.dump(2) << "\n";
    std::cout << "wrote " << id << " fixtures to " << dir << "\n";
    return 0;
}
