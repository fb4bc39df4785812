#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "llnsim/rng.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

// Adaptive suppression timer: the interval doubles while the network looks
// consistent, up to i_min * 2^doublings, and snaps back to i_min on any
// inconsistency. Transmission happens at a random point in the second half
// of the interval and is suppressed once k consistent messages were heard.
struct TrickleTimer {
    SimTime i_min{SimTime::from_seconds(4.096)};
    int doublings = 8;
    int k = 10;

    SimTime interval{0};        // current I
    SimTime interval_start{0};
    SimTime fire_at{0};         // t in [start + I/2, start + I)
    int consistent_heard = 0;   // c
    bool running = false;

    std::vector<SimTime> interval_log;  // interval length at each interval start

    SimTime max_interval() const { return SimTime{i_min.ticks << doublings}; }
    SimTime interval_end() const { return interval_start + interval; }
    bool should_fire() const { return consistent_heard < k; }

    void start(SimTime now, RngStream& rng) {
        running = true;
        interval = i_min;
        begin_interval(now, rng);
    }

    void stop() { running = false; }

    // Interval expired: double (up to the cap) and start over.
    void on_interval_end(SimTime now, RngStream& rng) {
        interval = std::min(SimTime{interval.ticks * 2}, max_interval());
        begin_interval(now, rng);
    }

    // Inconsistency observed: back to the minimum interval.
    void reset(SimTime now, RngStream& rng) {
        interval = i_min;
        begin_interval(now, rng);
    }

    void hear_consistent() { ++consistent_heard; }

private:
    void begin_interval(SimTime now, RngStream& rng) {
        interval_start = now;
        consistent_heard = 0;
        const std::int64_t half = interval.ticks / 2;
        const std::int64_t span = interval.ticks - half;  // [I/2, I)
        fire_at = now + SimTime{half + static_cast<std::int64_t>(
                                           rng.uniform_int(static_cast<std::uint64_t>(span > 0 ? span : 1)))};
        interval_log.push_back(interval);
    }
};

}  // namespace llnsim
