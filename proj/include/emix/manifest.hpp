// The partition manifest: everything the distributed roles need to agree
// on, plus socket endpoints. All processes must present the same manifest
// hash at handshake.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emix/config.hpp"

namespace emix {

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
};

struct DistSection {
    uint32_t connect_timeout_ms = 15000;
    uint32_t idle_timeout_ms = 15000;
    Cycle time_quantum = 8;  // cadence of time promises, in cycles
};

struct Manifest {
    ExperimentConfig config;
    Endpoint switch_ep;
    std::vector<Endpoint> node_eps;  // p2p listener per node
    DistSection dist;

    static Manifest from_plan(const ExperimentPlan& plan, uint16_t base_port);
    std::string to_json_string() const;  // includes derived partition tables
    static Manifest from_json_string(const std::string& text);
    static Manifest from_json_file(const std::string& path);

    // SHA-256 of the canonical JSON dump.
    std::array<uint8_t, 32> hash() const;
    std::string human_summary(const ExperimentPlan& plan) const;
};

}  // namespace emix
