#pragma once

#include <array>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "llnsim/kernel.hpp"
#include "llnsim/mobility.hpp"
#include "llnsim/power.hpp"
#include "llnsim/radio_types.hpp"
#include "llnsim/rng.hpp"
#include "llnsim/rpl_core.hpp"
#include "llnsim/sim_time.hpp"
#include "llnsim/trickle.hpp"

namespace llnsim {

struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

struct WorldConfig {
    std::uint32_t n_nodes = 0;
    std::uint32_t n_sinks = 1;
    AreaBounds area;
    SimTime duration{0};
    RadioConfig radio;
    RplConfig rpl;
    PowerModel power;
    double cpu_ms_per_msg = 1.0;
    double cpu_ms_per_timer = 0.2;
    SimTime data_period = SimTime::from_seconds(60);
    std::uint64_t seed = 1;
    bool rpl_enabled = true;
    bool verify_invariants = false;
    bool log_events = false;
    bool log_radio = false;
    bool log_control = false;
    bool startup_jitter = true;
    std::vector<RdcMode> rdc_mode_override;   // per node, optional
    std::vector<SimTime> wake_phase_override;  // per node, optional
};

struct NodeCounters {
    std::array<std::uint64_t, 10> sent_by_kind{};  // indexed by FrameKind, one per MAC train
    std::uint64_t radio_control_trains = 0;        // radio-layer side of the conservation check
    std::int64_t tx_airtime_ticks = 0;             // sum of aired copy durations
    std::uint64_t app_sent = 0;
    std::uint64_t app_delivered = 0;  // recorded at the origin when a sink receives
    std::uint64_t hops_sum = 0;
};

struct WorldStats {
    std::uint64_t parent_changes = 0;
    std::uint64_t rank_changes = 0;
    std::uint64_t collisions = 0;
    std::uint64_t cca_drops = 0;
    std::uint64_t frames_delivered = 0;
};

// One simulation run: duty-cycled radios with unit-disk propagation, the
// routing control plane, the periodic sender->sink data plane, and tick-exact
// power accounting, all driven through a deterministic event kernel.
// Single-threaded by construction; independent runs own independent worlds.
class World {
public:
    struct MacOp {
        Frame frame;
        SimTime copy_air{0};
        SimTime gap{0};
        bool skip_cca = false;
        bool expects_ack = false;
        bool lpt_wait = false;  // LPT unicast waits for the target's probe
        bool waiting = false;   // currently parked in the probe-wait state
        int trains = 0;
        int cca_backoffs = 0;
        bool acked = false;
        SimTime train_end{0};
        SimTime copy_start{0};
        SimTime lpt_deadline{0};
        std::uint64_t op_id = 0;
    };

    struct Node {
        NodeId id = 0;
        bool is_sink = false;
        RdcMode mode = RdcMode::Lpl;
        MobilityTrace trace;

        RadioState rstate = RadioState::Off;
        SimTime rstate_since{0};
        SimTime listen_since{-1};
        std::uint64_t radio_token = 0;  // bumps on every radio state change
        SimTime wake_phase{0};

        std::deque<MacOp> txq;
        std::optional<MacOp> op;
        std::uint32_t mac_seq_next = 1;
        std::map<NodeId, std::uint32_t> last_rx_seq;

        PowerLedger ledger;
        NodeCounters counters;
        RplNodeState rpl;
        std::uint32_t app_seq_next = 1;

        RngStream rng_mac, rng_loss, rng_trickle, rng_traffic;
    };

    World(WorldConfig cfg, std::vector<MobilityTrace> traces) : cfg_(std::move(cfg)) {
        cfg_.radio.validate();
        cfg_.rpl.validate();
        cfg_.power.validate();
        if (traces.size() != cfg_.n_nodes)
            throw std::invalid_argument("World: one trace per node required");

        cpu_msg_ticks_ = SimTime::from_ms(cfg_.cpu_ms_per_msg).ticks;
        cpu_timer_ticks_ = SimTime::from_ms(cfg_.cpu_ms_per_timer).ticks;
        ack_air_ = cfg_.radio.frame_airtime(FrameKind::AckStrobe);

        nodes_.resize(cfg_.n_nodes);
        for (std::uint32_t i = 0; i < cfg_.n_nodes; ++i) {
            Node& n = nodes_[i];
            n.id = static_cast<NodeId>(i);
            n.is_sink = i < cfg_.n_sinks;
            n.mode = i < cfg_.rdc_mode_override.size() ? cfg_.rdc_mode_override[i]
                                                       : cfg_.radio.rdc.mode;
            n.trace = std::move(traces[i]);
            n.rng_mac = RngStream(cfg_.seed, StreamPurpose::Mac, i);
            n.rng_loss = RngStream(cfg_.seed, StreamPurpose::Loss, i);
            n.rng_trickle = RngStream(cfg_.seed, StreamPurpose::Trickle, i);
            n.rng_traffic = RngStream(cfg_.seed, StreamPurpose::Traffic, i);
            n.rpl.trickle.i_min = SimTime::from_seconds(cfg_.rpl.trickle_imin_s);
            n.rpl.trickle.doublings = cfg_.rpl.trickle_doublings;
            n.rpl.trickle.k = cfg_.rpl.trickle_k;
            n.rpl.rank = cfg_.rpl.infinite_rank;
            n.rpl.rs_backoff_s = cfg_.rpl.rs_first_timeout_s;
            n.wake_phase = SimTime{static_cast<std::int64_t>(n.rng_mac.uniform_int(
                static_cast<std::uint64_t>(cfg_.radio.rdc.wake_interval().ticks)))};
            if (i < cfg_.wake_phase_override.size()) n.wake_phase = cfg_.wake_phase_override[i];
        }
        kernel_.set_handler([this](const Event& e) { dispatch(e); });
        if (cfg_.log_events) kernel_.set_event_log(&event_log_);
    }

    // Schedules boot-up for every node; call once before run().
    void start() {
        for (Node& n : nodes_) {
            RngStream boot(cfg_.seed, StreamPurpose::Startup, static_cast<std::uint32_t>(n.id));
            const SimTime startup{cfg_.startup_jitter
                                      ? static_cast<std::int64_t>(boot.uniform_int(kTicksPerSecond))
                                      : 0};
            if (n.mode == RdcMode::Lpl || n.mode == RdcMode::Lpt)
                kernel_.schedule(startup + n.wake_phase, n.id, WakeSample{});
            if (n.mode == RdcMode::AlwaysOn)
                kernel_.schedule(startup, n.id, TimerExpiry{TimerKind::MacStart, kRadioOnToken});
            if (!cfg_.rpl_enabled) continue;
            if (n.is_sink) {
                kernel_.schedule(startup, n.id, TimerExpiry{TimerKind::TrickleFire, kSinkInitToken});
            } else {
                kernel_.schedule(startup, n.id, TimerExpiry{TimerKind::RsRetry, 0});
                const SimTime phase{static_cast<std::int64_t>(n.rng_traffic.uniform_int(
                    static_cast<std::uint64_t>(cfg_.data_period.ticks)))};
                kernel_.schedule(startup + phase, n.id, AppSend{});
                kernel_.schedule(startup + SimTime::from_seconds(cfg_.rpl.parent_check_interval_s),
                                 n.id, TimerExpiry{TimerKind::ParentCheck, 0});
            }
        }
    }

    KernelStats run() {
        start();
        KernelStats stats = kernel_.run_until(cfg_.duration);
        finalize();
        return stats;
    }

    // -- accessors ---------------------------------------------------------

    Kernel& kernel() { return kernel_; }
    const WorldConfig& config() const { return cfg_; }
    Node& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
    const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    const WorldStats& stats() const { return stats_; }
    const std::string& event_log() const { return event_log_; }
    const std::string& radio_log() const { return radio_log_; }
    const std::string& control_log() const { return control_log_; }

    Vec2 position_of(NodeId id, SimTime t) const {
        return position_at(nodes_[static_cast<std::size_t>(id)].trace, t);
    }

    // Test hooks: invoked instead of the routing layer when set.
    std::function<void(NodeId, const Frame&)> test_frame_sink;
    std::function<void(NodeId, const Frame&, bool, int)> test_send_result;

    // -- MAC entry point ----------------------------------------------------

    // Hands a frame to the duty-cycled MAC. Broadcasts strobe one full wake
    // interval; unicasts strobe until acknowledged, with limited retries.
    void mac_send(NodeId id, Frame frame) {
        Node& n = node(id);
        frame.src = id;
        frame.size_bytes = cfg_.radio.sizes.of(frame.kind);
        if (frame.kind != FrameKind::AckStrobe && frame.kind != FrameKind::Probe)
            frame.mac_seq = n.mac_seq_next++;
        MacOp op;
        op.frame = frame;
        op.copy_air = airtime(frame.size_bytes, cfg_.radio.bitrate_bps);
        op.op_id = next_op_id_++;
        if (frame.kind == FrameKind::AckStrobe) {
            op.skip_cca = true;
        } else if (frame.kind != FrameKind::Probe) {
            op.expects_ack = !frame.broadcast();
            if (n.mode == RdcMode::Lpt && op.expects_ack) op.lpt_wait = true;
        }
        op.gap = gap_for(n, op);
        if (frame.kind == FrameKind::AckStrobe)
            n.txq.push_front(std::move(op));
        else
            n.txq.push_back(std::move(op));
        mac_kick(n);
    }

    // Queues a frame to be handed to the MAC at a future instant (test driver).
    void schedule_send(NodeId id, Frame f, SimTime at) {
        const std::uint64_t token = kTestSendBase + next_op_id_++;
        pending_test_sends_.emplace(token, std::move(f));
        kernel_.schedule(at, id, TimerExpiry{TimerKind::MacStart, token});
    }

    void finalize() {
        const SimTime end = cfg_.duration;
        for (Node& n : nodes_) {
            // a copy cut off by the end of the run only aired its prefix
            if (n.rstate == RadioState::Transmit && n.op) {
                const SimTime copy_end = n.op->copy_start + n.op->copy_air;
                if (copy_end > end) n.counters.tx_airtime_ticks -= (copy_end - end).ticks;
            }
            account_radio_interval(n, end);
            n.ledger.finalize_mcu(end.ticks);
            if (!n.ledger.mcu_partition_ok(end.ticks))
                throw InvariantError("mcu ledger partition violated at node " + std::to_string(n.id));
            if (!n.ledger.radio_partition_ok(end.ticks))
                throw InvariantError("radio ledger partition violated at node " + std::to_string(n.id));
        }
        if (cfg_.rpl_enabled) verify_forest();
    }

    // Walks every joined node's preferred-parent chain: cycles are a hard
    // violation. Chains may end at a detached frontier node (its own repair is
    // in flight) but never revisit a node.
    void verify_forest() const {
        for (const Node& n : nodes_) {
            if (!n.rpl.joined || n.is_sink) continue;
            NodeId cur = n.id;
            std::size_t steps = 0;
            while (true) {
                const Node& c = nodes_[static_cast<std::size_t>(cur)];
                if (c.is_sink) break;
                if (!c.rpl.joined || c.rpl.preferred < 0) break;
                if (++steps > nodes_.size())
                    throw InvariantError("preferred-parent cycle through node " + std::to_string(n.id));
                cur = c.rpl.preferred;
            }
        }
    }

private:
    static constexpr std::uint64_t kSinkInitToken = ~0ULL;
    static constexpr std::uint64_t kRadioOnToken = ~0ULL - 1;
    static constexpr std::uint64_t kTestSendBase = 1ULL << 62;

    // ======================= dispatch and accounting =======================

    void dispatch(const Event& e) {
        if (e.target < 0) return;
        Node& n = node(e.target);
        const bool message_event = e.payload.index() == 1 || e.payload.index() == 3;
        n.ledger.account_mcu(McuState::Cpu, message_event ? cpu_msg_ticks_ : cpu_timer_ticks_);
        switch (e.payload.index()) {
            case 0: on_timer(n, std::get<TimerExpiry>(e.payload)); break;
            case 1: on_frame_arrival(n, std::get<FrameArrival>(e.payload).frame); break;
            case 2: break;  // waypoint-update: positions interpolate on demand
            case 3: on_app_send(n); break;
            case 4: on_wake(n); break;
        }
    }

    SimTime now() const { return kernel_.now(); }

    void account_radio_interval(Node& n, SimTime upto) {
        if (upto > n.rstate_since) {
            n.ledger.account_radio(n.rstate, (upto - n.rstate_since).ticks);
            if (cfg_.log_radio && n.rstate != RadioState::Off) {
                char buf[96];
                const int len = std::snprintf(buf, sizeof buf, "%lld\t%lld\t%d\t%s\n",
                                              static_cast<long long>(n.rstate_since.ticks),
                                              static_cast<long long>(upto.ticks), n.id,
                                              to_string(n.rstate));
                radio_log_.append(buf, static_cast<std::size_t>(len));
            }
        }
        n.rstate_since = upto;
    }

    void set_radio(Node& n, RadioState s) {
        if (n.rstate == s) return;
        account_radio_interval(n, now());
        n.rstate = s;
        ++n.radio_token;
        n.listen_since = s == RadioState::Listen ? now() : SimTime{-1};
    }

    void log_control(const Node& n, const Frame& f, bool sent) {
        if (!cfg_.log_control) return;
        char kind[64];
        if (f.kind == FrameKind::Data) {
            const DataHeader& d = f.data();
            std::snprintf(kind, sizeof kind, "data:src=%d,seq=%u,hops=%u", d.origin, d.seq, d.hops);
        } else {
            std::snprintf(kind, sizeof kind, "%s", to_string(f.kind));
        }
        char peer[16];
        const NodeId p = sent ? f.dst : f.src;
        if (p == kBroadcast) std::snprintf(peer, sizeof peer, "*");
        else std::snprintf(peer, sizeof peer, "%d", p);
        char buf[128];
        const int len = std::snprintf(buf, sizeof buf, "%lld\t%d\t%s\t%s\t%s\n",
                                      static_cast<long long>(now().ticks), n.id, kind,
                                      sent ? "sent" : "recv", peer);
        control_log_.append(buf, static_cast<std::size_t>(len));
    }

    // ============================ radio / MAC ==============================

    struct OnAir {
        std::uint64_t tx_id = 0;
        NodeId sender = 0;
        SimTime start{0}, end{0};
        Vec2 sender_pos;
    };

    SimTime gap_for(const Node& n, const MacOp& op) const {
        if (op.frame.kind == FrameKind::AckStrobe || op.frame.kind == FrameKind::Probe)
            return SimTime{0};
        if (op.frame.broadcast())
            return n.mode == RdcMode::AlwaysOn ? SimTime{0} : cfg_.radio.rdc.strobe_gap;
        if (n.mode == RdcMode::Lpl) return cfg_.radio.rdc.strobe_gap;
        return ack_air_ + SimTime{2};  // single-copy unicast: one ack airtime plus turnaround
    }

    bool in_interference_range(Vec2 a, Vec2 b) const {
        return distance(a, b) <= cfg_.radio.udgm.interference_range;
    }

    bool cca_busy(const Node& n) const {
        const Vec2 p = position_at(n.trace, now());
        for (const OnAir& o : onair_)
            if (o.end > now() && o.start <= now() && o.sender != n.id &&
                in_interference_range(o.sender_pos, p))
                return true;
        return false;
    }

    // Latest end among carriers audible to n right now, bounds closed so a
    // frame ending exactly now still defers the caller past it.
    std::optional<SimTime> carrier_end_for_defer(const Node& n) const {
        const Vec2 p = position_at(n.trace, now());
        std::optional<SimTime> best;
        for (const OnAir& o : onair_)
            if (o.end >= now() && o.start <= now() && o.sender != n.id &&
                in_interference_range(o.sender_pos, p))
                if (!best || o.end > *best) best = o.end;
        return best;
    }

    void mac_kick(Node& n) {
        if (n.op || n.txq.empty()) return;
        n.op = std::move(n.txq.front());
        n.txq.pop_front();
        MacOp& op = *n.op;
        if (op.lpt_wait) {
            op.waiting = true;
            op.lpt_deadline = now() + cfg_.radio.rdc.wake_interval() * 3;
            set_radio(n, RadioState::Listen);
            kernel_.schedule(op.lpt_deadline, n.id, TimerExpiry{TimerKind::LptDeadline, op.op_id});
            return;
        }
        mac_try_start_train(n);
    }

    void mac_try_start_train(Node& n) {
        MacOp& op = *n.op;
        op.waiting = false;
        if (!op.skip_cca && cca_busy(n)) {
            if (++op.cca_backoffs > cfg_.radio.rdc.max_cca_backoffs) {
                ++stats_.cca_drops;
                mac_conclude(n, false);
                return;
            }
            const SimTime backoff{1 + static_cast<std::int64_t>(n.rng_mac.uniform_int(
                                          static_cast<std::uint64_t>(
                                              cfg_.radio.rdc.wake_interval().ticks / 2)))};
            kernel_.schedule(now() + backoff, n.id, TimerExpiry{TimerKind::MacStart, op.op_id});
            return;
        }
        ++op.trains;
        const bool single_copy = n.mode == RdcMode::AlwaysOn || op.lpt_wait ||
                                 op.frame.kind == FrameKind::AckStrobe ||
                                 op.frame.kind == FrameKind::Probe;
        op.train_end = single_copy ? now() + op.copy_air : now() + cfg_.radio.rdc.wake_interval();
        n.counters.sent_by_kind[static_cast<std::size_t>(op.frame.kind)]++;
        if (is_rpl_control(op.frame.kind)) n.counters.radio_control_trains++;
        log_control(n, op.frame, true);
        mac_start_copy(n);
    }

    void mac_start_copy(Node& n) {
        MacOp& op = *n.op;
        set_radio(n, RadioState::Transmit);
        op.copy_start = now();
        const SimTime end = now() + op.copy_air;
        onair_.push_back(OnAir{next_tx_id_++, n.id, now(), end, position_at(n.trace, now())});
        n.counters.tx_airtime_ticks += op.copy_air.ticks;
        kernel_.schedule(end, n.id, TimerExpiry{TimerKind::StrobeStep, op.op_id});
        prune_onair();
    }

    void prune_onair() {
        if (onair_.size() < 64) return;
        const SimTime horizon = now() - SimTime{kTicksPerSecond / 2};
        std::erase_if(onair_, [&](const OnAir& o) { return o.end < horizon; });
    }

    // End of one on-air copy: settle delivery, then gap or conclude.
    void on_strobe_step(Node& n, const TimerExpiry& t) {
        if (!n.op || n.op->op_id != t.token) return;
        MacOp& op = *n.op;
        evaluate_copy(n, op);

        if (op.frame.kind == FrameKind::AckStrobe) {
            mac_conclude(n, true);
            return;
        }
        if (op.frame.kind == FrameKind::Probe) {
            // stay receptive for a little while after probing
            n.op.reset();
            set_radio(n, RadioState::Listen);
            kernel_.schedule(now() + cfg_.radio.rdc.probe_window, n.id,
                             TimerExpiry{TimerKind::RxCheck, n.radio_token});
            mac_kick(n);
            return;
        }
        set_radio(n, RadioState::Listen);  // inter-copy gap doubles as the ack window
        kernel_.schedule(now() + op.gap, n.id, TimerExpiry{TimerKind::TxGapEnd, op.op_id});
    }

    void on_tx_gap_end(Node& n, const TimerExpiry& t) {
        if (!n.op || n.op->op_id != t.token) return;
        MacOp& op = *n.op;
        if (op.acked) {
            mac_conclude(n, true);
            return;
        }
        if (const auto defer = carrier_end_for_defer(n)) {
            kernel_.schedule(*defer + SimTime{1}, n.id, TimerExpiry{TimerKind::TxGapEnd, op.op_id});
            return;
        }
        if (now() + op.copy_air <= op.train_end) {
            mac_start_copy(n);
            return;
        }
        // train exhausted
        if (!op.expects_ack) {
            mac_conclude(n, true);
            return;
        }
        if (op.lpt_wait) {
            if (now() < op.lpt_deadline) {  // park again until the next probe
                op.waiting = true;
                set_radio(n, RadioState::Listen);
                return;
            }
            mac_conclude(n, false);
            return;
        }
        if (op.trains < cfg_.radio.rdc.max_mac_transmissions) {
            mac_try_start_train(n);
            return;
        }
        mac_conclude(n, false);
    }

    void on_mac_start_timer(Node& n, const TimerExpiry& t) {
        if (t.token == kRadioOnToken) {
            if (!n.op && n.mode == RdcMode::AlwaysOn) idle_radio(n);
            return;
        }
        if (auto it = pending_test_sends_.find(t.token); it != pending_test_sends_.end()) {
            Frame f = std::move(it->second);
            pending_test_sends_.erase(it);
            mac_send(n.id, std::move(f));
            return;
        }
        if (!n.op || n.op->op_id != t.token) return;
        mac_try_start_train(n);
    }

    void on_lpt_deadline(Node& n, const TimerExpiry& t) {
        if (!n.op || n.op->op_id != t.token) return;
        if (n.op->waiting && !n.op->acked) mac_conclude(n, false);
    }

    void mac_conclude(Node& n, bool success) {
        const MacOp op = *n.op;
        n.op.reset();
        idle_radio(n);
        if (op.expects_ack) {
            const bool acked = op.acked && success;
            if (test_send_result) test_send_result(n.id, op.frame, acked, op.trains);
            else if (cfg_.rpl_enabled) rpl_on_send_result(n, op.frame, acked, op.trains);
        }
        mac_kick(n);
    }

    void idle_radio(Node& n) {
        if (n.op) return;
        set_radio(n, n.mode == RdcMode::AlwaysOn ? RadioState::Listen : RadioState::Off);
    }

    // Delivery decision for every node in range of a finished copy. A node
    // receives iff it listened through the whole airtime, no other carrier in
    // its interference range overlapped, and the loss draw succeeds.
    void evaluate_copy(Node& sender, MacOp& op) {
        const SimTime start = op.copy_start;
        const SimTime end = now();
        const Vec2 spos = position_at(sender.trace, start);
        for (Node& r : nodes_) {
            if (r.id == sender.id) continue;
            const Vec2 rpos = position_at(r.trace, start);
            if (distance(spos, rpos) > cfg_.radio.udgm.tx_range) continue;
            if (r.rstate != RadioState::Listen || r.listen_since.ticks < 0 ||
                r.listen_since > start)
                continue;
            bool collided = false;
            for (const OnAir& o : onair_) {
                if (o.sender == sender.id && o.start == start) continue;  // this very copy
                if (o.sender == r.id) continue;
                if (o.start < end && start < o.end && in_interference_range(o.sender_pos, rpos)) {
                    collided = true;
                    break;
                }
            }
            if (collided) {
                ++stats_.collisions;
                continue;
            }
            if (!r.rng_loss.bernoulli(cfg_.radio.udgm.success_ratio)) continue;

            const bool addressed = op.frame.broadcast() || op.frame.dst == r.id;
            const bool datagram =
                op.frame.kind != FrameKind::AckStrobe && op.frame.kind != FrameKind::Probe;
            if (datagram) {
                auto it = r.last_rx_seq.find(sender.id);
                if (it != r.last_rx_seq.end() && it->second == op.frame.mac_seq) {
                    if (op.frame.dst == r.id) send_ack(r, sender.id);  // ack duplicates too
                    else fast_sleep(r);
                    continue;
                }
                if (addressed) r.last_rx_seq[sender.id] = op.frame.mac_seq;
            }
            if (!addressed) {
                fast_sleep(r);  // overheard a unicast meant for someone else
                continue;
            }
            ++stats_.frames_delivered;
            kernel_.schedule(now(), r.id, FrameArrival{op.frame});
            if (op.frame.dst == r.id && datagram) send_ack(r, sender.id);
            if (op.frame.broadcast() && datagram) fast_sleep(r);
        }
    }

    void send_ack(Node& r, NodeId to) {
        Frame ack;
        ack.kind = FrameKind::AckStrobe;
        ack.dst = to;
        mac_send(r.id, ack);
    }

    // After a reception a duty-cycled radio goes back to sleep unless its own
    // MAC has work.
    void fast_sleep(Node& n) {
        if (n.mode == RdcMode::AlwaysOn || n.mode == RdcMode::Off) return;
        if (n.op || !n.txq.empty()) return;
        set_radio(n, RadioState::Off);
    }

    // Periodic wake: LPL samples the channel; LPT transmits a probe.
    void on_wake(Node& n) {
        kernel_.schedule(now() + cfg_.radio.rdc.wake_interval(), n.id, WakeSample{});
        if (n.op || !n.txq.empty()) return;  // busy with own traffic
        if (n.mode == RdcMode::Lpl) {
            if (n.rstate != RadioState::Off) return;
            set_radio(n, RadioState::Listen);
            kernel_.schedule(now() + cfg_.radio.rdc.wake_sample, n.id,
                             TimerExpiry{TimerKind::RxCheck, n.radio_token});
        } else if (n.mode == RdcMode::Lpt) {
            if (n.rstate != RadioState::Off || cca_busy(n)) return;  // skip this probe
            Frame probe;
            probe.kind = FrameKind::Probe;
            probe.dst = kBroadcast;
            mac_send(n.id, probe);
        }
    }

    // End of a listen window: extend while carriers are audible (or were,
    // within the guard), otherwise sleep.
    void on_rx_check(Node& n, const TimerExpiry& t) {
        if (t.token != n.radio_token || n.rstate != RadioState::Listen) return;
        if (n.op) return;  // own MAC owns the radio now
        const Vec2 p = position_at(n.trace, now());
        std::optional<SimTime> active_end;
        bool recent = false;
        for (const OnAir& o : onair_) {
            if (o.sender == n.id || !in_interference_range(o.sender_pos, p)) continue;
            if (o.end > now() && o.start <= now()) {
                if (!active_end || o.end > *active_end) active_end = o.end;
            } else if (o.end <= now() && o.end > now() - cfg_.radio.rdc.rx_guard) {
                recent = true;
            }
        }
        if (active_end)
            kernel_.schedule(*active_end, n.id, TimerExpiry{TimerKind::RxCheck, n.radio_token});
        else if (recent)
            kernel_.schedule(now() + cfg_.radio.rdc.rx_guard, n.id,
                             TimerExpiry{TimerKind::RxCheck, n.radio_token});
        else
            set_radio(n, RadioState::Off);
    }

    void on_frame_arrival(Node& n, const Frame& f) {
        log_control(n, f, false);
        if (f.kind == FrameKind::AckStrobe) {
            if (n.op && n.op->expects_ack && n.op->frame.dst == f.src && f.dst == n.id)
                n.op->acked = true;
            return;
        }
        if (f.kind == FrameKind::Probe) {
            if (n.op && n.op->lpt_wait && n.op->waiting && n.op->frame.dst == f.src)
                mac_try_start_train(n);  // answer the probe with the data frame
            return;
        }
        if (test_frame_sink) {
            test_frame_sink(n.id, f);
            return;
        }
        if (cfg_.rpl_enabled) rpl_handle_frame(n, f);
    }

    // ============================ timers ==================================

    void on_timer(Node& n, const TimerExpiry& t) {
        switch (t.kind) {
            case TimerKind::MacStart: on_mac_start_timer(n, t); return;
            case TimerKind::StrobeStep: on_strobe_step(n, t); return;
            case TimerKind::TxGapEnd: on_tx_gap_end(n, t); return;
            case TimerKind::RxCheck: on_rx_check(n, t); return;
            case TimerKind::LptDeadline: on_lpt_deadline(n, t); return;
            case TimerKind::TrickleFire:
                if (t.token == kSinkInitToken) rpl_sink_init(n);
                else on_trickle_fire(n);
                return;
            case TimerKind::TrickleInterval: on_trickle_interval(n); return;
            case TimerKind::DaoRefresh: on_dao_timer(n); return;
            case TimerKind::DisProbe: on_dis_timer(n); return;
            case TimerKind::RsRetry: on_rs_retry(n); return;
            case TimerKind::ParentCheck: on_parent_check(n); return;
        }
    }

    // ========================= routing control plane =======================

    void rpl_sink_init(Node& n) {
        n.rpl.is_root = true;
        n.rpl.joined = true;
        n.rpl.rank = cfg_.rpl.root_rank;
        n.rpl.dodag_id = n.id;
        n.rpl.nd_done = true;
        n.rpl.trickle.start(now(), n.rng_trickle);
        schedule_trickle(n);
    }

    void schedule_trickle(Node& n) {
        if (n.rpl.trickle_fire) kernel_.cancel(*n.rpl.trickle_fire);
        if (n.rpl.trickle_interval) kernel_.cancel(*n.rpl.trickle_interval);
        n.rpl.trickle_fire =
            kernel_.schedule(n.rpl.trickle.fire_at, n.id, TimerExpiry{TimerKind::TrickleFire, 0});
        n.rpl.trickle_interval = kernel_.schedule(n.rpl.trickle.interval_end(), n.id,
                                                  TimerExpiry{TimerKind::TrickleInterval, 0});
    }

    void stop_trickle(Node& n) {
        if (n.rpl.trickle_fire) kernel_.cancel(*n.rpl.trickle_fire);
        if (n.rpl.trickle_interval) kernel_.cancel(*n.rpl.trickle_interval);
        n.rpl.trickle_fire.reset();
        n.rpl.trickle_interval.reset();
        n.rpl.trickle.stop();
    }

    void trickle_reset(Node& n) {
        if (!n.rpl.trickle.running) return;
        n.rpl.trickle.reset(now(), n.rng_trickle);
        schedule_trickle(n);
    }

    void on_trickle_fire(Node& n) {
        if (!n.rpl.trickle.running || !n.rpl.joined) return;
        if (n.rpl.trickle.should_fire()) send_dio(n, n.rpl.rank);
    }

    void on_trickle_interval(Node& n) {
        if (!n.rpl.trickle.running || !n.rpl.joined) return;
        n.rpl.trickle.on_interval_end(now(), n.rng_trickle);
        schedule_trickle(n);
    }

    void send_dio(Node& n, std::uint32_t rank) {
        Frame f;
        f.kind = FrameKind::Dio;
        f.dst = kBroadcast;
        f.body = ControlMsg{msg::Dio{0, n.rpl.dodag_id, 1, static_cast<std::uint16_t>(rank),
                                     static_cast<std::uint8_t>(cfg_.rpl.ocp)}};
        mac_send(n.id, f);
    }

    void send_dis(Node& n) {
        Frame f;
        f.kind = FrameKind::Dis;
        f.dst = kBroadcast;
        f.body = ControlMsg{msg::Dis{}};
        mac_send(n.id, f);
    }

    void send_rs(Node& n) {
        Frame f;
        f.kind = FrameKind::Rs;
        f.dst = kBroadcast;
        f.body = ControlMsg{msg::Rs{}};
        mac_send(n.id, f);
    }

    void send_ns(Node& n, NodeId router) {
        Frame f;
        f.kind = FrameKind::Ns;
        f.dst = router;
        f.body = ControlMsg{msg::Ns{n.id}};
        mac_send(n.id, f);
    }

    void send_dao(Node& n) {
        if (!n.rpl.joined || n.rpl.preferred < 0) return;
        Frame f;
        f.kind = FrameKind::Dao;
        f.dst = n.rpl.preferred;
        f.body = ControlMsg{msg::Dao{0, n.id, ++n.rpl.dao_seq}};
        mac_send(n.id, f);
    }

    void schedule_dao_timer(Node& n, SimTime delay) {
        if (n.rpl.dao_timer) kernel_.cancel(*n.rpl.dao_timer);
        n.rpl.dao_timer = kernel_.schedule(now() + delay, n.id, TimerExpiry{TimerKind::DaoRefresh, 0});
    }

    void schedule_dis_timer(Node& n, SimTime delay) {
        if (n.rpl.dis_timer) kernel_.cancel(*n.rpl.dis_timer);
        n.rpl.dis_timer = kernel_.schedule(now() + delay, n.id, TimerExpiry{TimerKind::DisProbe, 0});
    }

    void on_rs_retry(Node& n) {
        if (n.rpl.nd_done || n.is_sink) return;
        // restart the handshake from scratch; covers lost RA/NS/NA legs too
        n.rpl.default_router = -1;
        n.rpl.ns_source_idx = 0;
        send_rs(n);
        kernel_.schedule(now() + SimTime::from_seconds(n.rpl.rs_backoff_s), n.id,
                         TimerExpiry{TimerKind::RsRetry, 0});
        n.rpl.rs_backoff_s = std::min(n.rpl.rs_backoff_s * 2.0, cfg_.rpl.rs_backoff_cap_s);
    }

    void on_dis_timer(Node& n) {
        if (n.rpl.joined || !n.rpl.nd_done) return;  // detach re-arms the timer
        send_dis(n);
        schedule_dis_timer(n, SimTime::from_seconds(cfg_.rpl.dis_interval_s));
    }

    void on_dao_timer(Node& n) {
        if (!n.rpl.joined) return;
        send_dao(n);
        schedule_dao_timer(n, SimTime::from_seconds(cfg_.rpl.dao_interval_s));
    }

    void on_parent_check(Node& n) {
        kernel_.schedule(now() + SimTime::from_seconds(cfg_.rpl.parent_check_interval_s), n.id,
                         TimerExpiry{TimerKind::ParentCheck, 0});
        if (!n.rpl.joined || n.rpl.preferred < 0) return;
        auto it = n.rpl.parents.find(n.rpl.preferred);
        if (it == n.rpl.parents.end()) return;
        if (now() - it->second.last_heard > stale_horizon(n)) {
            n.rpl.parents.erase(it);
            rpl_reselect(n);
        }
    }

    SimTime stale_horizon(const Node& n) const {
        const SimTime base = n.rpl.trickle.running
                                 ? std::max(n.rpl.trickle.interval, n.rpl.trickle.i_min)
                                 : n.rpl.trickle.i_min;
        return base * 3;
    }

    void on_app_send(Node& n) {
        kernel_.schedule(now() + cfg_.data_period, n.id, AppSend{});
        if (n.is_sink) return;
        n.counters.app_sent++;  // unjoined sends count as sent-and-lost
        if (!n.rpl.joined || n.rpl.preferred < 0) return;
        Frame f;
        f.kind = FrameKind::Data;
        f.dst = n.rpl.preferred;
        f.body = DataHeader{n.id, n.app_seq_next++, 0};
        mac_send(n.id, f);
    }

    void rpl_handle_frame(Node& n, const Frame& f) {
        switch (f.kind) {
            case FrameKind::Rs: {
                if (!n.rpl.joined && !n.is_sink) return;  // only routers answer
                Frame ra;
                ra.kind = FrameKind::Ra;
                ra.dst = f.src;
                ra.body = ControlMsg{msg::Ra{}};
                mac_send(n.id, ra);
                return;
            }
            case FrameKind::Ra: {
                if (n.rpl.nd_done || n.is_sink) return;
                auto& srcs = n.rpl.ra_sources;
                if (std::find(srcs.begin(), srcs.end(), f.src) == srcs.end())
                    srcs.push_back(f.src);
                if (n.rpl.default_router == -1) {
                    n.rpl.default_router = f.src;  // first RA wins
                    n.rpl.ns_source_idx = static_cast<std::size_t>(
                        std::find(srcs.begin(), srcs.end(), f.src) - srcs.begin());
                    send_ns(n, f.src);
                }
                return;
            }
            case FrameKind::Ns: {
                if (!n.rpl.joined && !n.is_sink) return;
                const auto& ns = std::get<msg::Ns>(f.control());
                auto& cache = n.rpl.neighbor_cache;
                const bool known = cache.count(ns.aro_node) > 0;
                const bool full = !known && cache.size() >= cfg_.rpl.neighbor_cache_cap;
                if (!full) cache[ns.aro_node] = now();
                Frame na;
                na.kind = FrameKind::Na;
                na.dst = f.src;
                na.body = ControlMsg{msg::Na{full}};
                mac_send(n.id, na);
                return;
            }
            case FrameKind::Na: {
                if (n.rpl.nd_done || n.is_sink) return;
                if (!std::get<msg::Na>(f.control()).cache_full) {
                    n.rpl.nd_done = true;
                    schedule_dis_timer(n, SimTime::from_seconds(cfg_.rpl.dis_initial_delay_s));
                } else {
                    advance_nd_source(n);
                }
                return;
            }
            case FrameKind::Dio: rpl_handle_dio(n, std::get<msg::Dio>(f.control()), f.src); return;
            case FrameKind::Dis:
                if (n.rpl.joined) trickle_reset(n);
                return;
            case FrameKind::Dao: rpl_handle_dao(n, std::get<msg::Dao>(f.control()), f.src); return;
            case FrameKind::Data: rpl_handle_data(n, f.data()); return;
            default: return;
        }
    }

    // Registration refused or NS undeliverable: try the next-earliest RA source.
    void advance_nd_source(Node& n) {
        if (n.rpl.nd_done) return;
        n.rpl.ns_source_idx++;
        if (n.rpl.ns_source_idx < n.rpl.ra_sources.size()) {
            n.rpl.default_router = n.rpl.ra_sources[n.rpl.ns_source_idx];
            send_ns(n, n.rpl.default_router);
        } else {
            n.rpl.default_router = -1;  // wait for the RS retry cycle
        }
    }

    void rpl_handle_dio(Node& n, const msg::Dio& dio, NodeId from) {
        if (n.is_sink) {
            if (dio.dodag_id == n.rpl.dodag_id && dio.rank < cfg_.rpl.infinite_rank)
                n.rpl.trickle.hear_consistent();
            return;
        }
        if (!n.rpl.nd_done) return;  // neighbor discovery first

        if (dio.rank >= cfg_.rpl.infinite_rank) {  // poisoned
            const bool was_pref = n.rpl.preferred == from;
            if (n.rpl.parents.erase(from) > 0 && was_pref) rpl_reselect(n);
            return;
        }
        auto& entry = n.rpl.parents[from];
        entry.adv_rank = dio.rank;
        entry.dodag_id = dio.dodag_id;
        entry.last_heard = now();
        n.rpl.etx.try_emplace(from);  // first contact initializes ETX to 1.0

        const NodeId old_pref = n.rpl.preferred;
        const std::uint32_t old_rank = n.rpl.rank;
        const bool was_joined = n.rpl.joined;
        rpl_reselect(n);
        if (was_joined && n.rpl.joined && n.rpl.preferred == old_pref && n.rpl.rank == old_rank)
            n.rpl.trickle.hear_consistent();
    }

    // Re-runs parent selection and applies every side effect: join, detach,
    // trickle reset on inconsistency, and a triggered DAO on a parent switch.
    void rpl_reselect(Node& n) {
        const NodeId old_pref = n.rpl.preferred;
        const std::uint32_t old_rank = n.rpl.rank;
        const bool was_joined = n.rpl.joined;

        // stale parents first
        const SimTime horizon = stale_horizon(n);
        for (auto it = n.rpl.parents.begin(); it != n.rpl.parents.end();) {
            if (now() - it->second.last_heard > horizon) it = n.rpl.parents.erase(it);
            else ++it;
        }

        NodeId best = -1;
        std::uint32_t best_rank = 0;
        const ParentEntry* best_entry = nullptr;
        for (const auto& [cand, e] : n.rpl.parents) {
            const std::uint32_t computed =
                compute_rank(cfg_.rpl.ocp, e.adv_rank, n.rpl.etx_of(cand), cfg_.rpl);
            if (computed >= cfg_.rpl.infinite_rank) continue;
            if (was_joined && computed >= old_rank + cfg_.rpl.max_rank_increase) continue;
            if (chain_reaches(cand, n.id)) continue;
            if (best < 0 || computed < best_rank ||
                (computed == best_rank &&
                 std::tuple(e.adv_rank, e.dodag_id, cand) <
                     std::tuple(best_entry->adv_rank, best_entry->dodag_id, best))) {
                best = cand;
                best_rank = computed;
                best_entry = &e;
            }
        }

        if (best < 0) {
            if (was_joined) rpl_detach(n);
            return;
        }
        n.rpl.preferred = best;
        n.rpl.rank = best_rank;
        n.rpl.dodag_id = best_entry->dodag_id;

        if (!was_joined) {
            rpl_join(n);
            return;
        }
        if (n.rpl.preferred != old_pref || n.rpl.rank != old_rank) {
            if (n.rpl.preferred != old_pref) ++stats_.parent_changes;
            if (n.rpl.rank != old_rank) ++stats_.rank_changes;
            trickle_reset(n);
            if (n.rpl.preferred != old_pref) send_dao(n);
            if (cfg_.verify_invariants) verify_node_invariants(n);
        }
    }

    void rpl_join(Node& n) {
        n.rpl.joined = true;
        ++stats_.parent_changes;
        n.rpl.trickle.start(now(), n.rng_trickle);
        schedule_trickle(n);
        schedule_dao_timer(n, SimTime::from_seconds(cfg_.rpl.dao_delay_s));
        if (cfg_.verify_invariants) verify_node_invariants(n);
    }

    void rpl_detach(Node& n) {
        n.rpl.joined = false;
        n.rpl.preferred = -1;
        n.rpl.rank = cfg_.rpl.infinite_rank;
        ++stats_.parent_changes;
        stop_trickle(n);
        if (n.rpl.dao_timer) kernel_.cancel(*n.rpl.dao_timer);
        n.rpl.dao_timer.reset();
        send_poison_dio(n);
        n.rpl.dodag_id = -1;
        schedule_dis_timer(n, SimTime::from_seconds(cfg_.rpl.dis_interval_s));
    }

    void send_poison_dio(Node& n) { send_dio(n, cfg_.rpl.infinite_rank); }

    // Simulator-side acyclicity guard: a candidate is ineligible if its
    // current preferred-parent chain runs through the selecting node.
    bool chain_reaches(NodeId from, NodeId self) const {
        NodeId cur = from;
        std::size_t steps = 0;
        while (cur >= 0 && steps++ <= nodes_.size()) {
            if (cur == self) return true;
            const Node& c = nodes_[static_cast<std::size_t>(cur)];
            if (c.is_sink || !c.rpl.joined) return false;
            cur = c.rpl.preferred;
        }
        return false;
    }

    void verify_node_invariants(const Node& n) const {
        if (!n.rpl.joined || n.is_sink) return;
        const auto it = n.rpl.parents.find(n.rpl.preferred);
        if (it != n.rpl.parents.end() && n.rpl.rank <= it->second.adv_rank)
            throw InvariantError("rank not strictly above advertised parent rank at node " +
                                 std::to_string(n.id));
        verify_forest();
    }

    void rpl_handle_dao(Node& n, const msg::Dao& dao, NodeId from) {
        if (!n.rpl.joined && !n.is_sink) return;
        // prune expired entries while touching the table
        for (auto it = n.rpl.routes.begin(); it != n.rpl.routes.end();) {
            if (it->second.expires < now()) it = n.rpl.routes.erase(it);
            else ++it;
        }
        n.rpl.routes[dao.target] =
            Route{from, now() + SimTime::from_seconds(cfg_.rpl.route_lifetime_s)};
        if (n.is_sink || n.rpl.preferred < 0) return;
        Frame f;  // storing mode: propagate the target upward
        f.kind = FrameKind::Dao;
        f.dst = n.rpl.preferred;
        f.body = ControlMsg{msg::Dao{0, dao.target, dao.dao_seq}};
        mac_send(n.id, f);
    }

    void rpl_handle_data(Node& n, const DataHeader& d) {
        const std::uint32_t hops = d.hops + 1;
        if (n.is_sink) {
            Node& origin = node(d.origin);
            origin.counters.app_delivered++;
            origin.counters.hops_sum += hops;
            return;
        }
        if (!n.rpl.joined || n.rpl.preferred < 0) return;  // dropped; counts against PDR
        Frame f;
        f.kind = FrameKind::Data;
        f.dst = n.rpl.preferred;
        f.body = DataHeader{d.origin, d.seq, hops};
        mac_send(n.id, f);
    }

    void rpl_on_send_result(Node& n, const Frame& f, bool acked, int attempts) {
        if (f.kind == FrameKind::AckStrobe || f.kind == FrameKind::Probe) return;
        auto& etx = n.rpl.etx[f.dst];
        etx.on_send_result(acked, static_cast<std::uint32_t>(attempts), cfg_.rpl);
        if (acked) return;
        if (f.kind == FrameKind::Ns && !n.rpl.nd_done && f.dst == n.rpl.default_router) {
            advance_nd_source(n);
            return;
        }
        if (f.kind == FrameKind::Dao && n.rpl.joined)
            schedule_dao_timer(n, SimTime::from_seconds(cfg_.rpl.dao_delay_s));
        if (f.dst == n.rpl.preferred &&
            etx.consecutive_failures >= cfg_.rpl.parent_fail_threshold) {
            n.rpl.parents.erase(f.dst);
            rpl_reselect(n);
        }
    }

    WorldConfig cfg_;
    Kernel kernel_;
    std::vector<Node> nodes_;
    std::vector<OnAir> onair_;
    std::map<std::uint64_t, Frame> pending_test_sends_;
    std::uint64_t next_tx_id_ = 1;
    std::uint64_t next_op_id_ = 1;
    std::int64_t cpu_msg_ticks_ = 0;
    std::int64_t cpu_timer_ticks_ = 0;
    SimTime ack_air_{0};
    WorldStats stats_;
    std::string event_log_;
    std::string radio_log_;
    std::string control_log_;
};

}  // namespace llnsim
