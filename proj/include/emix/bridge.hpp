// Wire framing for the two inter-node paths and the go-back-N ARQ that
// makes the switched path reliable.
//
// EthFrame, wire order, big-endian multi-byte fields:
//   dst_mac(6) src_mac(6) ethertype(2)=0x88B5 frame_type(1) seq(4) ack(4)
//   word_count(2) then word_count x 11-byte records, crc(4) over everything
//   before it. Record: channel(2) payload(8) sideband(1); sideband bits
//   [1:0] = kind, bit 2 = last, [7:3] = 0.
//
// P2pFrame: word_count(2) credit_return(2) then the same 11-byte records.
// No MAC, CRC, or sequence — the P2P fabric contract is lossless in-order.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emix/transport.hpp"
#include "emix/types.hpp"

namespace emix {

inline constexpr uint16_t kEthertype = 0x88B5;
inline constexpr size_t kEthHeaderBytes = 25;
inline constexpr size_t kCrcBytes = 4;
inline constexpr size_t kWordRecordBytes = 11;
inline constexpr size_t kEthMinFrameBytes = kEthHeaderBytes + kCrcBytes;  // 29
// ethertype..crc must fit 1500 bytes: 17 + 11n <= 1500.
inline constexpr size_t kMaxWordsPerFrame = 134;
inline constexpr size_t kP2pHeaderBytes = 4;

struct NodeMac {
    std::array<uint8_t, 6> bytes{};
    // Locally administered 02:45:4D:49:58:nn (45 4D 49 58 = "EMIX").
    static NodeMac for_node(uint8_t index) {
        return {{0x02, 0x45, 0x4D, 0x49, 0x58, index}};
    }
    auto operator<=>(const NodeMac&) const = default;
    std::string str() const;
};

enum class EthFrameType : uint8_t { Data = 0, Ack = 1 };

std::vector<uint8_t> eth_encode(NodeMac dst, NodeMac src, EthFrameType type,
                                uint32_t seq, uint32_t ack,
                                std::span<const StreamWord> words);

struct EthView {
    NodeMac dst, src;
    EthFrameType type = EthFrameType::Data;
    uint32_t seq = 0;
    uint32_t ack = 0;
    std::vector<StreamWord> words;
};

enum class EthDecodeStatus : uint8_t { Data, Ack, Corrupt };

struct EthDecodeResult {
    EthDecodeStatus status = EthDecodeStatus::Corrupt;
    EthView frame;  // valid unless Corrupt
};

// CRC checked first; any structural violation reports Corrupt. Destination
// filtering is the caller's job (the switch floods unknown MACs).
EthDecodeResult eth_decode(std::span<const uint8_t> bytes);

std::vector<uint8_t> p2p_encode(uint16_t credit_return,
                                std::span<const StreamWord> words);

struct P2pView {
    uint16_t credit_return = 0;
    std::vector<StreamWord> words;
};

// Throws MalformedP2pFrame: corruption on the lossless path is fatal.
P2pView p2p_decode(std::span<const uint8_t> bytes);

struct RetxConfig {
    uint32_t window_size = 32;
    Cycle timeout = 1024;
    uint32_t max_retries = 16;
};

// Go-back-N sender over one ordered node pair.
class RetxSender {
public:
    explicit RetxSender(const RetxConfig& cfg) : cfg_(cfg) {}

    bool window_full() const { return unacked_.size() >= cfg_.window_size; }
    uint32_t next_seq() const { return next_seq_; }

    // Builds, buffers and returns the DATA frame. Pre: !window_full().
    std::vector<uint8_t> send(NodeMac dst, NodeMac src, uint32_t piggyback_ack,
                              std::span<const StreamWord> words, Cycle now);

    // Cumulative ack: drops buffered frames with seq < ack and restarts the
    // timer for the new oldest frame.
    void on_ack(uint32_t ack, Cycle now);

    // Timeout check; returns the frames to retransmit (in seq order).
    std::vector<std::vector<uint8_t>> on_cycle(Cycle now);

    bool gave_up() const { return gave_up_; }
    uint64_t retransmits() const { return retransmits_; }
    size_t in_flight() const { return unacked_.size(); }
    uint64_t buffered_words() const { return buffered_words_; }

private:
    struct Sent {
        uint32_t seq;
        std::vector<uint8_t> bytes;
        uint32_t word_count;
    };
    RetxConfig cfg_;
    std::deque<Sent> unacked_;
    uint32_t next_seq_ = 0;
    Cycle timer_start_ = 0;
    bool timer_armed_ = false;
    uint32_t consecutive_timeouts_ = 0;
    uint64_t retransmits_ = 0;
    uint64_t buffered_words_ = 0;
    bool gave_up_ = false;
};

// Go-back-N receiver; delivers exactly once in order.
class RetxReceiver {
public:
    struct Result {
        bool deliver = false;   // words should enter the rx pipeline
        uint32_t ack;           // cumulative ack to emit
    };

    Result on_data(uint32_t seq) {
        if (seq == expected_) {
            ++expected_;
            ++delivered_frames_;
            return {true, expected_};
        }
        ++dup_drops_;
        return {false, expected_};
    }

    uint32_t expected() const { return expected_; }
    uint64_t dup_drops() const { return dup_drops_; }
    uint64_t delivered_frames() const { return delivered_frames_; }

private:
    uint32_t expected_ = 0;
    uint64_t dup_drops_ = 0;
    uint64_t delivered_frames_ = 0;
};

// Sender-side credit view for one P2P direction.
struct CreditState {
    uint32_t credits = 0;
    uint32_t capacity = 0;

    explicit CreditState(uint32_t cap = 0) : credits(cap), capacity(cap) {}
    bool can_send(uint32_t words) const { return words <= credits; }
    void on_send(uint32_t words) { credits -= words; }
    void on_return(uint32_t words) {
        credits += words;
        if (credits > capacity) throw MalformedP2pFrame("credit overflow");
    }
};

}  // namespace emix
