#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "llnsim/radio_types.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

// Node-internal timers multiplexed over the timer-expiry event kind.
enum class TimerKind : std::uint8_t {
    TrickleFire,
    TrickleInterval,
    DaoRefresh,
    DisProbe,
    RsRetry,
    MacStart,       // CCA attempt / train start
    StrobeStep,     // end of one on-air copy
    TxGapEnd,       // end of the inter-strobe listen gap
    RxCheck,        // end of a wake sample / extension window
    LptDeadline,    // give up waiting for the target's probe
    ParentCheck,
};

struct TimerExpiry {
    TimerKind kind;
    std::uint64_t token = 0;  // guards against stale timers after state changes
};
struct FrameArrival {
    Frame frame;
};
struct WaypointUpdate {};
struct AppSend {};
struct WakeSample {};

using EventPayload = std::variant<TimerExpiry, FrameArrival, WaypointUpdate, AppSend, WakeSample>;

inline const char* payload_kind_name(const EventPayload& p) {
    switch (p.index()) {
        case 0: return "timer-expiry";
        case 1: return "frame-arrival";
        case 2: return "waypoint-update";
        case 3: return "app-send";
        case 4: return "wake-sample";
    }
    return "?";
}

inline constexpr NodeId kWorldTarget = -2;

struct Event {
    SimTime fire_time;
    std::uint64_t seq = 0;  // insertion counter; (fire_time, seq) is the total order
    NodeId target = kWorldTarget;
    EventPayload payload;
};

using EventHandle = std::uint64_t;

struct KernelStats {
    std::uint64_t dispatched = 0;
    double wall_seconds = 0.0;
};

// Deterministic event engine: dispatch order is nondecreasing fire_time,
// ties broken by insertion order. Single-threaded; one kernel per run.
class Kernel {
public:
    using Handler = std::function<void(const Event&)>;

    SimTime now() const { return now_; }
    void set_handler(Handler h) { handler_ = std::move(h); }
    void set_event_log(std::string* sink) { event_log_ = sink; }

    EventHandle schedule(SimTime at, NodeId target, EventPayload payload) {
        if (at < now_)
            throw std::logic_error("Kernel::schedule: event scheduled in the past (t=" +
                                   std::to_string(at.ticks) + " < now=" + std::to_string(now_.ticks) + ")");
        const std::uint64_t seq = next_seq_++;
        heap_.push(Entry{Event{at, seq, target, std::move(payload)}});
        pending_.insert(seq);
        return seq;
    }

    // True if the event was pending and is now removed; false if it already
    // fired or was already cancelled.
    bool cancel(EventHandle h) {
        auto it = pending_.find(h);
        if (it == pending_.end()) return false;
        pending_.erase(it);
        cancelled_.insert(h);
        return true;
    }

    bool has_pending() const { return !pending_.empty(); }

    // Dispatches every event with fire_time <= t_end in order, then advances
    // the clock to t_end.
    KernelStats run_until(SimTime t_end) {
        if (t_end < now_) throw std::logic_error("Kernel::run_until: t_end precedes current time");
        const auto wall0 = std::chrono::steady_clock::now();
        KernelStats stats;
        while (!heap_.empty() && heap_.top().ev.fire_time <= t_end) {
            Entry e = heap_.top();
            heap_.pop();
            auto c = cancelled_.find(e.ev.seq);
            if (c != cancelled_.end()) {
                cancelled_.erase(c);
                continue;
            }
            pending_.erase(e.ev.seq);
            now_ = e.ev.fire_time;
            if (event_log_) append_log_line(e.ev);
            ++stats.dispatched;
            if (handler_) handler_(e.ev);
        }
        now_ = t_end;
        stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        return stats;
    }

private:
    struct Entry {
        Event ev;
        bool operator>(const Entry& o) const {
            if (ev.fire_time != o.ev.fire_time) return ev.fire_time > o.ev.fire_time;
            return ev.seq > o.ev.seq;
        }
    };

    void append_log_line(const Event& ev) {
        char buf[96];
        const int n = std::snprintf(buf, sizeof buf, "%lld\t%llu\t%d\t%s\n",
                                    static_cast<long long>(ev.fire_time.ticks),
                                    static_cast<unsigned long long>(ev.seq),
                                    static_cast<int>(ev.target), payload_kind_name(ev.payload));
        event_log_->append(buf, static_cast<std::size_t>(n));
    }

    SimTime now_{0};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
    std::unordered_set<std::uint64_t> pending_;
    std::unordered_set<std::uint64_t> cancelled_;
    Handler handler_;
    std::string* event_log_ = nullptr;
};

}  // namespace llnsim
