#include "emix/bridge.hpp"

#include <zlib.h>

#include <cassert>
#include <cstdio>

#include "emix/wire.hpp"

namespace emix {

uint32_t crc32_ieee(std::span<const uint8_t> data) {
    return uint32_t(::crc32(0L, data.data(), uInt(data.size())));
}

std::string NodeMac::str() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0],
                  bytes[1], bytes[2], bytes[3], bytes[4], bytes[5]);
    return buf;
}

static void put_word_record(std::vector<uint8_t>& out, const StreamWord& w) {
    put_be16(out, w.channel);
    put_be64(out, w.data);
    out.push_back(uint8_t(uint8_t(w.kind) | (w.last ? 0x04 : 0x00)));
}

static std::optional<StreamWord> get_word_record(const uint8_t* p) {
    StreamWord w;
    w.channel = get_be16(p);
    w.data = get_be64(p + 2);
    uint8_t side = p[10];
    if ((side & 0xf8) != 0) return std::nullopt;  // reserved sideband bits
    w.kind = FlitKind(side & 0x3);
    w.last = (side & 0x04) != 0;
    return w;
}

std::vector<uint8_t> eth_encode(NodeMac dst, NodeMac src, EthFrameType type,
                                uint32_t seq, uint32_t ack,
                                std::span<const StreamWord> words) {
    assert(words.size() <= kMaxWordsPerFrame);
    assert(type == EthFrameType::Data ? !words.empty() : words.empty());
    std::vector<uint8_t> out;
    out.reserve(kEthHeaderBytes + words.size() * kWordRecordBytes + kCrcBytes);
    out.insert(out.end(), dst.bytes.begin(), dst.bytes.end());
    out.insert(out.end(), src.bytes.begin(), src.bytes.end());
    put_be16(out, kEthertype);
    out.push_back(uint8_t(type));
    put_be32(out, seq);
    put_be32(out, ack);
    put_be16(out, uint16_t(words.size()));
    for (const StreamWord& w : words) put_word_record(out, w);
    put_be32(out, crc32_ieee(out));
    return out;
}

EthDecodeResult eth_decode(std::span<const uint8_t> bytes) {
    EthDecodeResult r;
    if (bytes.size() < kEthMinFrameBytes) return r;
    uint32_t crc = get_be32(bytes.data() + bytes.size() - kCrcBytes);
    if (crc != crc32_ieee(bytes.first(bytes.size() - kCrcBytes))) return r;
    const uint8_t* p = bytes.data();
    EthView v;
    std::copy(p, p + 6, v.dst.bytes.begin());
    std::copy(p + 6, p + 12, v.src.bytes.begin());
    if (get_be16(p + 12) != kEthertype) return r;
    uint8_t type = p[14];
    if (type > 1) return r;
    v.type = EthFrameType(type);
    v.seq = get_be32(p + 15);
    v.ack = get_be32(p + 19);
    uint16_t wc = get_be16(p + 23);
    if (bytes.size() != kEthHeaderBytes + size_t(wc) * kWordRecordBytes + kCrcBytes)
        return r;
    if (wc > kMaxWordsPerFrame) return r;
    if (v.type == EthFrameType::Data && wc == 0) return r;
    if (v.type == EthFrameType::Ack && wc != 0) return r;
    v.words.reserve(wc);
    for (uint16_t i = 0; i < wc; ++i) {
        auto w = get_word_record(p + kEthHeaderBytes + size_t(i) * kWordRecordBytes);
        if (!w) return r;
        v.words.push_back(*w);
    }
    r.status = v.type == EthFrameType::Data ? EthDecodeStatus::Data
                                            : EthDecodeStatus::Ack;
    r.frame = std::move(v);
    return r;
}

std::vector<uint8_t> p2p_encode(uint16_t credit_return,
                                std::span<const StreamWord> words) {
    std::vector<uint8_t> out;
    out.reserve(kP2pHeaderBytes + words.size() * kWordRecordBytes);
    put_be16(out, uint16_t(words.size()));
    put_be16(out, credit_return);
    for (const StreamWord& w : words) put_word_record(out, w);
    return out;
}

P2pView p2p_decode(std::span<const uint8_t> bytes) {
    if (bytes.size() < kP2pHeaderBytes)
        throw MalformedP2pFrame("p2p frame shorter than header");
    uint16_t wc = get_be16(bytes.data());
    if (bytes.size() != kP2pHeaderBytes + size_t(wc) * kWordRecordBytes)
        throw MalformedP2pFrame("p2p frame length mismatch");
    P2pView v;
    v.credit_return = get_be16(bytes.data() + 2);
    v.words.reserve(wc);
    for (uint16_t i = 0; i < wc; ++i) {
        auto w = get_word_record(bytes.data() + kP2pHeaderBytes +
                                 size_t(i) * kWordRecordBytes);
        if (!w) throw MalformedP2pFrame("reserved sideband bits set");
        v.words.push_back(*w);
    }
    return v;
}

std::vector<uint8_t> RetxSender::send(NodeMac dst, NodeMac src,
                                      uint32_t piggyback_ack,
                                      std::span<const StreamWord> words,
                                      Cycle now) {
    assert(!window_full());
    std::vector<uint8_t> bytes =
        eth_encode(dst, src, EthFrameType::Data, next_seq_, piggyback_ack, words);
    unacked_.push_back({next_seq_, bytes, uint32_t(words.size())});
    buffered_words_ += words.size();
    ++next_seq_;
    if (!timer_armed_) {
        timer_armed_ = true;
        timer_start_ = now;
    }
    return bytes;
}

void RetxSender::on_ack(uint32_t ack, Cycle now) {
    bool progress = false;
    while (!unacked_.empty() && unacked_.front().seq < ack) {
        buffered_words_ -= unacked_.front().word_count;
        unacked_.pop_front();
        progress = true;
    }
    if (progress) {
        consecutive_timeouts_ = 0;
        timer_armed_ = !unacked_.empty();
        timer_start_ = now;
    }
}

std::vector<std::vector<uint8_t>> RetxSender::on_cycle(Cycle now) {
    std::vector<std::vector<uint8_t>> out;
    if (gave_up_ || !timer_armed_ || unacked_.empty()) return out;
    if (now < timer_start_ + cfg_.timeout) return out;
    ++consecutive_timeouts_;
    if (consecutive_timeouts_ > cfg_.max_retries) {
        gave_up_ = true;
        return out;
    }
    for (const Sent& s : unacked_) {
        out.push_back(s.bytes);
        ++retransmits_;
    }
    timer_start_ = now;
    return out;
}

}  // namespace emix
