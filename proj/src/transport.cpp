#include "emix/transport.hpp"

namespace emix {

std::optional<StreamWord> ChannelMux::next() {
    if (sources_.empty()) return std::nullopt;
    if (locked_ >= 0) {
        Source& s = sources_[size_t(locked_)];
        if (s.queue->empty()) return std::nullopt;  // rest of packet not here yet
        Flit f = s.queue->front();
        s.queue->pop_front();
        if (s.on_pop) s.on_pop();
        if (f.kind == FlitKind::Tail || f.kind == FlitKind::HeadTail) {
            rr_next_ = (size_t(locked_) + 1) % sources_.size();
            locked_ = -1;
        }
        return to_stream_word(s.channel, f);
    }
    for (size_t i = 0; i < sources_.size(); ++i) {
        size_t idx = (rr_next_ + i) % sources_.size();
        Source& s = sources_[idx];
        if (s.queue->empty()) continue;
        Flit f = s.queue->front();
        s.queue->pop_front();
        if (s.on_pop) s.on_pop();
        if (f.kind == FlitKind::Head) {
            locked_ = int(idx);
        } else {
            rr_next_ = (idx + 1) % sources_.size();
        }
        return to_stream_word(s.channel, f);
    }
    return std::nullopt;
}

}  // namespace emix
