#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "llnsim/messages.hpp"
#include "llnsim/sim_time.hpp"
#include "llnsim/trickle.hpp"

namespace llnsim {

enum class Ocp : std::uint8_t { Of0 = 0, Mrhof = 1 };

struct RplConfig {
    Ocp ocp = Ocp::Mrhof;
    std::uint32_t min_hop_rank_increase = 256;
    std::uint32_t root_rank = 256;
    std::uint32_t infinite_rank = 65535;
    std::uint32_t max_rank_increase = 1792;
    double trickle_imin_s = 4.096;
    int trickle_doublings = 8;
    int trickle_k = 10;
    double dao_interval_s = 60.0;
    double dao_delay_s = 2.0;
    double route_lifetime_s = 180.0;  // 3 * dao_interval
    double dis_interval_s = 30.0;
    double dis_initial_delay_s = 5.0;
    double rs_first_timeout_s = 10.0;
    double rs_backoff_cap_s = 60.0;
    std::uint32_t neighbor_cache_cap = 32;
    double etx_alpha = 0.9;        // weight on the previous estimate
    double etx_sample_cap = 8.0;
    int parent_fail_threshold = 3;
    double parent_check_interval_s = 4.0;

    void validate() const {
        if (min_hop_rank_increase == 0) throw std::invalid_argument("rpl: min_hop_rank_increase must be > 0");
        if (root_rank == 0) throw std::invalid_argument("rpl: root_rank must be > 0");
        if (trickle_imin_s <= 0 || trickle_doublings < 0 || trickle_k < 1)
            throw std::invalid_argument("rpl: bad trickle parameters");
        if (dao_interval_s <= 0 || dis_interval_s <= 0)
            throw std::invalid_argument("rpl: timer intervals must be > 0");
        if (etx_alpha < 0 || etx_alpha >= 1) throw std::invalid_argument("rpl: etx_alpha must be in [0,1)");
        if (parent_fail_threshold < 1) throw std::invalid_argument("rpl: parent_fail_threshold must be >= 1");
    }
};

// Rank through a candidate parent. OF0 adds the fixed hop increase; MRHOF
// scales it by the link ETX. Always strictly greater than parent_rank since
// etx >= 1. Values at or above infinite_rank mean "unreachable".
inline std::uint32_t compute_rank(Ocp ocp, std::uint32_t parent_rank, double link_etx,
                                  const RplConfig& cfg) {
    const std::uint64_t step =
        ocp == Ocp::Of0
            ? cfg.min_hop_rank_increase
            : static_cast<std::uint64_t>(std::llround(link_etx * cfg.min_hop_rank_increase));
    const std::uint64_t r = parent_rank + std::max<std::uint64_t>(step, 1);
    return r >= cfg.infinite_rank ? cfg.infinite_rank : static_cast<std::uint32_t>(r);
}

// Link ETX state: EWMA over attempts-per-acked-unicast. Samples happen on
// acks only; failed sends leave their attempts pending so the next ack sees
// them. This update is the single source of truth for both the live
// estimator and log replay.
struct EtxState {
    double ewma = 1.0;
    std::uint32_t attempts_pending = 0;
    int consecutive_failures = 0;
    bool sampled = false;

    void on_send_result(bool acked, std::uint32_t attempts, const RplConfig& cfg) {
        attempts_pending += attempts;
        if (acked) {
            const double sample =
                std::min(static_cast<double>(attempts_pending), cfg.etx_sample_cap);
            ewma = cfg.etx_alpha * ewma + (1.0 - cfg.etx_alpha) * sample;
            if (ewma < 1.0) ewma = 1.0;
            attempts_pending = 0;
            consecutive_failures = 0;
            sampled = true;
        } else {
            ++consecutive_failures;
        }
    }
};

struct ParentEntry {
    std::uint32_t adv_rank = 0;
    NodeId dodag_id = 0;
    SimTime last_heard{0};
};

struct Route {
    NodeId next_hop = 0;
    SimTime expires{0};
};

struct RplNodeState {
    bool is_root = false;
    bool joined = false;
    std::uint32_t rank = 0;          // infinite_rank when detached
    NodeId preferred = -1;
    NodeId dodag_id = -1;
    std::map<NodeId, ParentEntry> parents;
    std::map<NodeId, EtxState> etx;
    std::map<NodeId, Route> routes;  // storing mode: target -> next hop (a child)
    std::uint32_t dao_seq = 0;
    TrickleTimer trickle;
    std::optional<std::uint64_t> trickle_fire;     // pending kernel handles
    std::optional<std::uint64_t> trickle_interval;
    std::optional<std::uint64_t> dao_timer;
    std::optional<std::uint64_t> dis_timer;

    // neighbor discovery
    bool nd_done = false;
    NodeId default_router = -1;
    std::vector<NodeId> ra_sources;  // in order of first arrival
    std::size_t ns_source_idx = 0;
    double rs_backoff_s = 10.0;
    std::map<NodeId, SimTime> neighbor_cache;  // router side

    double etx_of(NodeId n) const {
        auto it = etx.find(n);
        return it == etx.end() ? 1.0 : it->second.ewma;
    }
};

}  // namespace llnsim
