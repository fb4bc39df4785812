#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "llnsim/geometry.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

struct Waypoint {
    SimTime t;
    Vec2 pos;
};

// Per-node, time-ordered waypoint list; the single source of truth for
// position and velocity at any simulated time. Consecutive equal positions
// encode a pause. Boundless-area traces are toroidal: segments listed in
// wrap_segments cross the boundary and interpolate along the short
// (nearest-image) toroidal path.
struct MobilityTrace {
    std::uint32_t node_id = 0;
    std::vector<Waypoint> waypoints;
    std::vector<std::uint32_t> wrap_segments;  // sorted segment indices (BSA only)
    bool toroidal = false;
    Vec2 domain{0.0, 0.0};  // fundamental-domain size for toroidal traces

    SimTime end_time() const { return waypoints.empty() ? SimTime{0} : waypoints.back().t; }
    bool is_wrap(std::uint32_t seg) const {
        return std::binary_search(wrap_segments.begin(), wrap_segments.end(), seg);
    }
};

struct Velocity {
    double vx = 0.0;
    double vy = 0.0;
    double norm() const { return std::hypot(vx, vy); }
};

namespace detail {

// Index of the segment [w[i].t, w[i+1].t) containing t, right-continuous at
// waypoint boundaries and clamped to the final segment at trace end.
inline std::size_t segment_index(const MobilityTrace& tr, SimTime t) {
    const auto& w = tr.waypoints;
    if (w.size() < 2) return 0;
    auto it = std::upper_bound(w.begin(), w.end(), t,
                               [](SimTime v, const Waypoint& wp) { return v < wp.t; });
    std::size_t i = static_cast<std::size_t>(it - w.begin());
    if (i == 0) return 0;
    i -= 1;
    return std::min(i, w.size() - 2);
}

// Displacement of segment i, using the nearest toroidal image for wrap segments.
inline Vec2 segment_delta(const MobilityTrace& tr, std::size_t i) {
    const Vec2 a = tr.waypoints[i].pos;
    const Vec2 b = tr.waypoints[i + 1].pos;
    Vec2 d = b - a;
    if (tr.toroidal && tr.is_wrap(static_cast<std::uint32_t>(i))) {
        if (d.x > tr.domain.x / 2) d.x -= tr.domain.x;
        if (d.x < -tr.domain.x / 2) d.x += tr.domain.x;
        if (d.y > tr.domain.y / 2) d.y -= tr.domain.y;
        if (d.y < -tr.domain.y / 2) d.y += tr.domain.y;
    }
    return d;
}

inline Vec2 wrap_into(Vec2 p, Vec2 domain) {
    p.x = std::fmod(p.x, domain.x);
    if (p.x < 0) p.x += domain.x;
    p.y = std::fmod(p.y, domain.y);
    if (p.y < 0) p.y += domain.y;
    return p;
}

}  // namespace detail

// Piecewise-linear position; constant during pauses. Requires 0 <= t <= trace end.
inline Vec2 position_at(const MobilityTrace& tr, SimTime t) {
    if (tr.waypoints.empty()) throw std::logic_error("position_at: empty trace");
    if (t.ticks < 0 || t > tr.end_time())
        throw std::logic_error("position_at: t outside trace domain");
    if (tr.waypoints.size() == 1) return tr.waypoints.front().pos;
    const std::size_t i = detail::segment_index(tr, t);
    const Waypoint& a = tr.waypoints[i];
    const Waypoint& b = tr.waypoints[i + 1];
    if (b.t == a.t) return b.pos;
    const double f = static_cast<double>((t - a.t).ticks) / static_cast<double>((b.t - a.t).ticks);
    const Vec2 d = detail::segment_delta(tr, i);
    Vec2 p = a.pos + d * f;
    if (tr.toroidal) p = detail::wrap_into(p, tr.domain);
    return p;
}

// Segment displacement over segment duration; zero during pauses. At exact
// waypoint times the incoming (right-continuous) segment's value is taken.
inline Velocity velocity_at(const MobilityTrace& tr, SimTime t) {
    if (tr.waypoints.size() < 2) return {};
    if (t.ticks < 0 || t > tr.end_time())
        throw std::logic_error("velocity_at: t outside trace domain");
    const std::size_t i = detail::segment_index(tr, t);
    const Waypoint& a = tr.waypoints[i];
    const Waypoint& b = tr.waypoints[i + 1];
    if (b.t == a.t) return {};
    const Vec2 d = detail::segment_delta(tr, i);
    const double dt = (b.t - a.t).seconds();
    return {d.x / dt, d.y / dt};
}

// |V_i(t) - V_j(t)|.
inline double relative_speed(const MobilityTrace& a, const MobilityTrace& b, SimTime t) {
    const Velocity vi = velocity_at(a, t);
    const Velocity vj = velocity_at(b, t);
    return std::hypot(vi.vx - vj.vx, vi.vy - vj.vy);
}

// Pair-and-time average of relative speed: mean over unordered pairs of
// (1/T) * integral of RS over [0,T], midpoint rule with step dt. Traces are
// piecewise linear, so RS is piecewise constant and the rule is exact
// between waypoint breakpoints.
inline double mobility_metric(const std::vector<MobilityTrace>& traces, SimTime T, SimTime dt) {
    const std::size_t n = traces.size();
    if (n < 2) throw std::invalid_argument("mobility_metric: need at least 2 traces");
    if (dt.ticks <= 0) throw std::invalid_argument("mobility_metric: dt must be > 0");
    if (T.ticks <= 0) throw std::invalid_argument("mobility_metric: T must be > 0");
    for (const auto& tr : traces)
        if (tr.end_time() < T) throw std::invalid_argument("mobility_metric: trace shorter than T");

    double pair_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double integral = 0.0;
            SimTime t0{0};
            while (t0 < T) {
                const SimTime cell_end = std::min(t0 + dt, T);
                const SimTime mid{(t0.ticks + cell_end.ticks) / 2};
                integral += relative_speed(traces[i], traces[j], mid) * (cell_end - t0).seconds();
                t0 = cell_end;
            }
            pair_sum += integral / T.seconds();
        }
    }
    return pair_sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

// Trace of a node that never moves.
inline MobilityTrace static_trace(std::uint32_t node_id, Vec2 pos, SimTime duration) {
    MobilityTrace tr;
    tr.node_id = node_id;
    tr.waypoints = {{SimTime{0}, pos}, {duration, pos}};
    return tr;
}

}  // namespace llnsim
