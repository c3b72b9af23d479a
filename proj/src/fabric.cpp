#include "emix/fabric.hpp"

#include <algorithm>

namespace emix {

void LinkModel::validate(bool p2p) const {
    if (latency < 1) throw ConfigError("link latency must be >= 1");
    if (bandwidth_bytes_per_cycle == 0) throw ConfigError("link bandwidth must be > 0");
    if (loss_prob < 0.0 || loss_prob > 1.0)
        throw ConfigError("loss_prob must be in [0,1]");
    if (p2p && loss_prob != 0.0)
        throw ConfigError("p2p links must have loss_prob == 0");
}

SwitchSim::SwitchSim(const SwitchConfig& cfg) : cfg_(cfg) {
    for (uint16_t p = 0; p < cfg_.port_count; ++p) {
        egress_.emplace_back(cfg_.node_link);
        loss_rng_.emplace_back(derive_seed(cfg_.seed, 0x53174C00u + p));
    }
}

void SwitchSim::submit(uint16_t ingress_port, std::vector<uint8_t> frame,
                       Cycle node_departure) {
    Cycle arrival = node_departure + cfg_.node_link.latency;
    pending_.push({arrival, ingress_port, submit_seq_++, std::move(frame)});
}

void SwitchSim::forward(uint16_t egress, const std::vector<uint8_t>& frame,
                        Cycle ready) {
    EgressPort& ep = egress_[egress];
    // Queue occupancy at `ready`: bytes of frames not yet fully serialized.
    while (!ep.scheduled.empty() && ep.scheduled.front().first <= ready)
        ep.scheduled.pop_front();
    size_t queued = 0;
    for (const auto& [d, b] : ep.scheduled) queued += b;
    if (queued + frame.size() > cfg_.egress_queue_bytes) {
        ++counters_.dropped_queue;
        return;
    }
    Cycle departure = ep.link.depart(frame.size(), ready);
    ep.scheduled.emplace_back(departure + cfg_.node_link.serialize_cycles(frame.size()),
                              frame.size());
    counters_.bytes_out += frame.size();
    deliveries_.push_back({egress, ep.link.arrival_for(departure), frame});
}

void SwitchSim::advance(Cycle now) {
    while (!pending_.empty() && pending_.top().arrival <= now) {
        Ingress in = pending_.top();
        pending_.pop();
        counters_.bytes_in += in.frame.size();
        if (in.frame.size() < 12) {  // MACs unreadable
            ++counters_.dropped_runt;
            continue;
        }
        if (loss_rng_[in.port].bernoulli(cfg_.node_link.loss_prob)) {
            ++counters_.dropped_loss;
            continue;
        }
        NodeMac dst, src;
        std::copy(in.frame.begin(), in.frame.begin() + 6, dst.bytes.begin());
        std::copy(in.frame.begin() + 6, in.frame.begin() + 12, src.bytes.begin());
        mac_table_[src] = in.port;
        Cycle ready = in.arrival + cfg_.forwarding_latency;
        auto it = mac_table_.find(dst);
        if (it != mac_table_.end()) {
            if (it->second != in.port) {
                forward(it->second, in.frame, ready);
                ++counters_.frames_forwarded;
            }
        } else {
            ++counters_.flood_events;
            for (uint16_t p = 0; p < cfg_.port_count; ++p) {
                if (p == in.port) continue;
                forward(p, in.frame, ready);
                ++counters_.frames_flooded;
            }
        }
    }
}

std::vector<SwitchSim::Delivery> SwitchSim::take_deliveries() {
    std::vector<Delivery> out;
    out.swap(deliveries_);
    return out;
}

Cycle SwitchSim::output_horizon(Cycle safe_input_cycle, uint16_t port) const {
    // A frame not yet submitted arrives >= safe_input_cycle, so its egress
    // departure is >= that + forwarding, and also >= the port's next_free.
    Cycle h = safe_input_cycle + cfg_.forwarding_latency;
    return std::max(h, egress_[port].link.next_free());
}

}  // namespace emix
