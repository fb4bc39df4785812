#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include "llnsim/geometry.hpp"
#include "llnsim/mobility.hpp"
#include "llnsim/rng.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Random waypoint: alternate travel legs toward uniform destinations at a
// speed uniform on [v_min, v_max], pausing t_pause at each destination.
// v_min defaults above zero to sidestep the classic speed-decay pathology.
struct RwpConfig {
    double v_min = 0.5;
    double v_max = 1.5;
    double t_pause_s = 10.0;
    void validate() const {
        if (v_min < 0 || v_max < v_min) throw std::invalid_argument("rwp: need 0 <= v_min <= v_max");
        if (t_pause_s < 0) throw std::invalid_argument("rwp: t_pause must be >= 0");
    }
};

// Random walk: direction uniform on [0,2pi), speed uniform on [0,v_max],
// re-drawn after a fixed time or fixed distance; specular reflection at
// the area boundary.
struct RwConfig {
    enum class LegMode { FixedTime, FixedDistance };
    double v_max = 1.5;
    LegMode mode = LegMode::FixedTime;
    double leg_time_s = 10.0;
    double leg_distance_m = 10.0;
    void validate() const {
        if (v_max < 0) throw std::invalid_argument("rw: v_max must be >= 0");
        if (mode == LegMode::FixedTime && leg_time_s <= 0)
            throw std::invalid_argument("rw: leg time must be > 0");
        if (mode == LegMode::FixedDistance && leg_distance_m <= 0)
            throw std::invalid_argument("rw: leg distance must be > 0");
    }
};

// Random direction: travel straight until the boundary, pause, then head
// back into the interior with a heading uniform over the open half-plane
// (quarter-plane at corners) measured against the inward normal.
struct RdmConfig {
    double v_max = 1.5;
    double t_pause_s = 10.0;
    void validate() const {
        if (v_max <= 0) throw std::invalid_argument("rdm: v_max must be > 0");
        if (t_pause_s < 0) throw std::invalid_argument("rdm: t_pause must be >= 0");
    }
};

// Gauss-Markov: AR(1) recurrences on speed and direction with memory alpha;
// near the boundary the mean direction is steered toward the area center to
// avoid bounce artifacts.
struct GmConfig {
    double alpha = 0.75;
    double mean_speed = 1.0;
    double mean_direction = 0.0;
    double sigma_speed = 0.3;
    double sigma_direction = 0.5;
    double update_s = 1.0;
    void validate() const {
        if (alpha < 0 || alpha > 1) throw std::invalid_argument("gm: alpha must be in [0,1]");
        if (mean_speed < 0 || sigma_speed < 0 || sigma_direction < 0)
            throw std::invalid_argument("gm: speeds and sigmas must be >= 0");
        if (update_s <= 0) throw std::invalid_argument("gm: update interval must be > 0");
    }
};

// Probabilistic random walk: independent 3-state chains per axis
// (0 = stay, 1 = step back, 2 = step forward). The default matrix forbids
// direct past<->next transitions.
struct PrwConfig {
    std::array<std::array<double, 3>, 3> p{{{0.0, 0.5, 0.5},
                                            {0.3, 0.7, 0.0},
                                            {0.3, 0.0, 0.7}}};
    double step_m = 1.0;
    double step_s = 1.0;
    void validate() const {
        for (const auto& row : p) {
            double s = 0;
            for (double v : row) {
                if (v < 0) throw std::invalid_argument("prw: matrix entries must be >= 0");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("prw: matrix rows must sum to 1");
        }
        if (step_m <= 0 || step_s <= 0) throw std::invalid_argument("prw: step length/interval must be > 0");
    }
};

// Boundless simulation area: velocity and heading random-walk with clamped
// speed on a toroidal field.
struct BsaConfig {
    double v_max = 1.5;
    double delta_v_max = 0.25;
    double delta_theta_max = 0.5;
    double update_s = 1.0;
    void validate() const {
        if (v_max <= 0) throw std::invalid_argument("bsa: v_max must be > 0");
        if (delta_v_max < 0 || delta_theta_max < 0)
            throw std::invalid_argument("bsa: deltas must be >= 0");
        if (update_s <= 0) throw std::invalid_argument("bsa: update interval must be > 0");
    }
};

// City section: Manhattan routes between grid intersections (horizontal
// segment, then vertical) at the street speed limit, pausing at each
// destination.
struct CsmConfig {
    double grid_spacing_m = 50.0;
    double speed_limit = 1.5;
    double t_pause_s = 10.0;
    void validate() const {
        if (grid_spacing_m <= 0) throw std::invalid_argument("csm: grid spacing must be > 0");
        if (speed_limit <= 0) throw std::invalid_argument("csm: speed limit must be > 0");
        if (t_pause_s < 0) throw std::invalid_argument("csm: t_pause must be >= 0");
    }
    void validate_against(const AreaBounds& area) const {
        validate();
        const double rx = std::fmod(area.width, grid_spacing_m);
        const double ry = std::fmod(area.height, grid_spacing_m);
        const double eps = 1e-9 * grid_spacing_m;
        if ((rx > eps && grid_spacing_m - rx > eps) || (ry > eps && grid_spacing_m - ry > eps))
            throw std::invalid_argument("csm: grid spacing must divide area dimensions");
    }
};

namespace detail {

inline SimTime ticks_at_least_one(double seconds) {
    SimTime t = SimTime::from_seconds(seconds);
    if (t.ticks < 1) t.ticks = 1;
    return t;
}

inline void push_waypoint(MobilityTrace& tr, SimTime t, Vec2 pos) {
    if (!tr.waypoints.empty() && t <= tr.waypoints.back().t)
        t = SimTime{tr.waypoints.back().t.ticks + 1};
    tr.waypoints.push_back({t, pos});
}

inline double positive_speed(RngStream& rng, double lo, double hi) {
    double v = rng.uniform(lo, hi);
    while (v <= 0.0) v = rng.uniform(lo, hi);
    return v;
}

// Which boundary edges p rests on.
struct EdgeFlags {
    bool left = false, right = false, bottom = false, top = false;
    bool any() const { return left || right || bottom || top; }
};

inline EdgeFlags edges_at(Vec2 p, const AreaBounds& area, double eps = 1e-9) {
    EdgeFlags f;
    f.left = p.x <= eps;
    f.right = p.x >= area.width - eps;
    f.bottom = p.y <= eps;
    f.top = p.y >= area.height - eps;
    return f;
}

// Heading uniform over the interior directions at a resting point: the open
// half-plane against one edge, or the open quarter-plane at a corner.
inline double inward_heading(const EdgeFlags& f, RngStream& rng) {
    const double half_pi = kTwoPi / 4.0;
    double lo, hi;
    if (f.left && f.bottom) { lo = 0.0; hi = half_pi; }
    else if (f.right && f.bottom) { lo = half_pi; hi = 2 * half_pi; }
    else if (f.right && f.top) { lo = 2 * half_pi; hi = 3 * half_pi; }
    else if (f.left && f.top) { lo = 3 * half_pi; hi = 4 * half_pi; }
    else if (f.left) { lo = -half_pi; hi = half_pi; }
    else if (f.right) { lo = half_pi; hi = 3 * half_pi; }
    else if (f.bottom) { lo = 0.0; hi = 2 * half_pi; }
    else { lo = 2 * half_pi; hi = 4 * half_pi; }  // top
    return rng.uniform(lo, hi);
}

// Travel time (seconds) from p along unit direction d at speed v until the
// first boundary contact.
inline double time_to_boundary(Vec2 p, Vec2 dir, double v, const AreaBounds& area) {
    double best = std::numeric_limits<double>::infinity();
    if (dir.x > 1e-15) best = std::min(best, (area.width - p.x) / (v * dir.x));
    if (dir.x < -1e-15) best = std::min(best, (0.0 - p.x) / (v * dir.x));
    if (dir.y > 1e-15) best = std::min(best, (area.height - p.y) / (v * dir.y));
    if (dir.y < -1e-15) best = std::min(best, (0.0 - p.y) / (v * dir.y));
    return std::max(best, 0.0);
}

}  // namespace detail

inline MobilityTrace gen_rwp(const RwpConfig& cfg, const AreaBounds& area, SimTime duration,
                             Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.waypoints.push_back({SimTime{0}, start});
    if (cfg.v_max <= 0.0) {  // degenerate static node
        tr.waypoints.push_back({duration, start});
        return tr;
    }
    const SimTime pause = SimTime::from_seconds(cfg.t_pause_s);
    SimTime t{0};
    Vec2 pos = start;
    while (t < duration) {
        const Vec2 dest{rng.uniform(0.0, area.width), rng.uniform(0.0, area.height)};
        const double speed = detail::positive_speed(rng, cfg.v_min, cfg.v_max);
        t += detail::ticks_at_least_one(distance(pos, dest) / speed);
        detail::push_waypoint(tr, t, dest);
        t = tr.waypoints.back().t;
        pos = dest;
        if (pause.ticks > 0 && t < duration) {
            t += pause;
            detail::push_waypoint(tr, t, pos);
        }
    }
    return tr;
}

inline MobilityTrace gen_rw(const RwConfig& cfg, const AreaBounds& area, SimTime duration,
                            Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.waypoints.push_back({SimTime{0}, start});
    SimTime t{0};
    Vec2 pos = start;
    while (t < duration) {
        const double theta = rng.uniform(0.0, kTwoPi);
        double speed = rng.uniform(0.0, cfg.v_max);
        if (cfg.mode == RwConfig::LegMode::FixedDistance)
            while (speed <= 0.0) speed = rng.uniform(0.0, cfg.v_max);
        const double leg_seconds = cfg.mode == RwConfig::LegMode::FixedTime
                                       ? cfg.leg_time_s
                                       : cfg.leg_distance_m / speed;
        if (speed <= 0.0) {  // stationary fixed-time leg
            t += detail::ticks_at_least_one(leg_seconds);
            detail::push_waypoint(tr, t, pos);
            t = tr.waypoints.back().t;
            continue;
        }
        Vec2 dir{std::cos(theta), std::sin(theta)};
        double remaining = leg_seconds;
        int guard = 0;
        while (remaining > 1e-12 && ++guard < 1024) {
            const double hit = detail::time_to_boundary(pos, dir, speed, area);
            if (hit >= remaining) {
                pos = area.clamp(pos + dir * (speed * remaining));
                t += detail::ticks_at_least_one(remaining);
                detail::push_waypoint(tr, t, pos);
                t = tr.waypoints.back().t;
                break;
            }
            pos = area.clamp(pos + dir * (speed * hit));
            if (hit > 1e-12) {
                t += detail::ticks_at_least_one(hit);
                detail::push_waypoint(tr, t, pos);
                t = tr.waypoints.back().t;
            }
            const auto f = detail::edges_at(pos, area);
            if (f.left || f.right) dir.x = -dir.x;
            if (f.bottom || f.top) dir.y = -dir.y;
            remaining -= hit;
        }
    }
    return tr;
}

inline MobilityTrace gen_rdm(const RdmConfig& cfg, const AreaBounds& area, SimTime duration,
                             Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.waypoints.push_back({SimTime{0}, start});
    const SimTime pause = SimTime::from_seconds(cfg.t_pause_s);
    SimTime t{0};
    Vec2 pos = start;
    double heading = rng.uniform(0.0, kTwoPi);
    while (t < duration) {
        const double speed = detail::positive_speed(rng, 0.0, cfg.v_max);
        const Vec2 dir{std::cos(heading), std::sin(heading)};
        const double hit = detail::time_to_boundary(pos, dir, speed, area);
        if (!std::isfinite(hit)) break;  // degenerate zero direction; cannot happen with unit dir
        pos = area.clamp(pos + dir * (speed * hit));
        t += detail::ticks_at_least_one(hit);
        detail::push_waypoint(tr, t, pos);
        t = tr.waypoints.back().t;
        if (t >= duration) break;
        if (pause.ticks > 0) {
            t += pause;
            detail::push_waypoint(tr, t, pos);
            t = tr.waypoints.back().t;
        }
        heading = detail::inward_heading(detail::edges_at(pos, area), rng);
    }
    return tr;
}

inline MobilityTrace gen_gm(const GmConfig& cfg, const AreaBounds& area, SimTime duration,
                            Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.waypoints.push_back({SimTime{0}, start});
    const SimTime step = detail::ticks_at_least_one(cfg.update_s);
    const double step_s = step.seconds();
    const double buffer = 0.1 * std::min(area.width, area.height);
    const double root = std::sqrt(std::max(0.0, 1.0 - cfg.alpha * cfg.alpha));

    // Stationary-distribution initialization keeps the AR(1) chain stationary
    // from the first step.
    double speed = std::max(0.0, rng.normal(cfg.mean_speed, cfg.sigma_speed));
    double dir = rng.normal(cfg.mean_direction, cfg.sigma_direction);

    SimTime t{0};
    Vec2 pos = start;
    while (t < duration) {
        pos = area.clamp(pos + Vec2{std::cos(dir), std::sin(dir)} * (speed * step_s));
        t += step;
        detail::push_waypoint(tr, t, pos);
        t = tr.waypoints.back().t;

        const bool near_edge = pos.x < buffer || pos.x > area.width - buffer ||
                               pos.y < buffer || pos.y > area.height - buffer;
        double eff_mean_dir = cfg.mean_direction;
        if (near_edge) {
            const Vec2 c = area.center();
            eff_mean_dir = std::atan2(c.y - pos.y, c.x - pos.x);
        }
        // Re-center the previous direction so the pull acts along the short way round.
        double d_prev = dir;
        while (d_prev > eff_mean_dir + kTwoPi / 2) d_prev -= kTwoPi;
        while (d_prev < eff_mean_dir - kTwoPi / 2) d_prev += kTwoPi;

        const double gs = rng.normal(0.0, cfg.sigma_speed);
        const double gd = rng.normal(0.0, cfg.sigma_direction);
        speed = std::max(0.0, cfg.alpha * speed + (1.0 - cfg.alpha) * cfg.mean_speed + root * gs);
        dir = cfg.alpha * d_prev + (1.0 - cfg.alpha) * eff_mean_dir + root * gd;
    }
    return tr;
}

inline MobilityTrace gen_prw(const PrwConfig& cfg, const AreaBounds& area, SimTime duration,
                             Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.waypoints.push_back({SimTime{0}, start});
    const SimTime step = detail::ticks_at_least_one(cfg.step_s);

    auto next_state = [&cfg](int s, double u) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
            acc += cfg.p[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
            if (u < acc) return k;
        }
        return 2;
    };
    auto reflect = [](double v, double hi) {
        if (v < 0) v = -v;
        if (v > hi) v = 2 * hi - v;
        return std::min(std::max(v, 0.0), hi);
    };

    int sx = 0, sy = 0;
    SimTime t{0};
    Vec2 pos = start;
    while (t < duration) {
        sx = next_state(sx, rng.next_unit());
        sy = next_state(sy, rng.next_unit());
        const double dx = sx == 1 ? -cfg.step_m : sx == 2 ? cfg.step_m : 0.0;
        const double dy = sy == 1 ? -cfg.step_m : sy == 2 ? cfg.step_m : 0.0;
        pos = Vec2{reflect(pos.x + dx, area.width), reflect(pos.y + dy, area.height)};
        t += step;
        detail::push_waypoint(tr, t, pos);
        t = tr.waypoints.back().t;
    }
    return tr;
}

inline MobilityTrace gen_bsa(const BsaConfig& cfg, const AreaBounds& area, SimTime duration,
                             Vec2 start, RngStream& rng) {
    cfg.validate();
    area.validate();
    MobilityTrace tr;
    tr.toroidal = true;
    tr.domain = {area.width, area.height};
    tr.waypoints.push_back({SimTime{0}, start});
    const SimTime step = detail::ticks_at_least_one(cfg.update_s);
    const double step_s = step.seconds();

    double speed = rng.uniform(0.0, cfg.v_max);
    double theta = rng.uniform(0.0, kTwoPi);
    SimTime t{0};
    Vec2 pos = start;
    while (t < duration) {
        const Vec2 raw = pos + Vec2{std::cos(theta), std::sin(theta)} * (speed * step_s);
        const Vec2 wrapped = detail::wrap_into(raw, tr.domain);
        if (raw.x < 0 || raw.x > area.width || raw.y < 0 || raw.y > area.height)
            tr.wrap_segments.push_back(static_cast<std::uint32_t>(tr.waypoints.size() - 1));
        t += step;
        detail::push_waypoint(tr, t, wrapped);
        t = tr.waypoints.back().t;
        pos = wrapped;
        speed = std::min(std::max(speed + rng.uniform(-cfg.delta_v_max, cfg.delta_v_max), 0.0), cfg.v_max);
        theta += rng.uniform(-cfg.delta_theta_max, cfg.delta_theta_max);
    }
    return tr;
}

inline MobilityTrace gen_csm(const CsmConfig& cfg, const AreaBounds& area, SimTime duration,
                             Vec2 start, RngStream& rng) {
    cfg.validate_against(area);
    area.validate();
    const double g = cfg.grid_spacing_m;
    const auto nx = static_cast<std::int64_t>(std::floor(area.width / g + 0.5));
    const auto ny = static_cast<std::int64_t>(std::floor(area.height / g + 0.5));
    auto snap = [g](double v, std::int64_t n) {
        const auto i = std::min<std::int64_t>(std::max<std::int64_t>(
            static_cast<std::int64_t>(std::floor(v / g + 0.5)), 0), n);
        return static_cast<double>(i) * g;
    };

    MobilityTrace tr;
    Vec2 pos{snap(start.x, nx), snap(start.y, ny)};
    tr.waypoints.push_back({SimTime{0}, pos});
    const SimTime pause = SimTime::from_seconds(cfg.t_pause_s);
    SimTime t{0};
    while (t < duration) {
        const Vec2 dest{static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(nx + 1))) * g,
                        static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(ny + 1))) * g};
        if (dest.x != pos.x) {
            t += detail::ticks_at_least_one(std::abs(dest.x - pos.x) / cfg.speed_limit);
            detail::push_waypoint(tr, t, {dest.x, pos.y});
            t = tr.waypoints.back().t;
        }
        if (dest.y != pos.y) {
            t += detail::ticks_at_least_one(std::abs(dest.y - pos.y) / cfg.speed_limit);
            detail::push_waypoint(tr, t, dest);
            t = tr.waypoints.back().t;
        }
        const bool moved = dest.x != pos.x || dest.y != pos.y;
        pos = dest;
        if (pause.ticks > 0) {
            t += pause;
            detail::push_waypoint(tr, t, pos);
            t = tr.waypoints.back().t;
        } else if (!moved) {
            // zero-length epoch with zero pause: force progress
            t += SimTime{1};
            detail::push_waypoint(tr, t, pos);
            t = tr.waypoints.back().t;
        }
    }
    return tr;
}

using MobilityModelConfig =
    std::variant<RwpConfig, RwConfig, RdmConfig, GmConfig, PrwConfig, BsaConfig, CsmConfig>;

inline MobilityTrace generate_trace(const MobilityModelConfig& cfg, const AreaBounds& area,
                                    SimTime duration, Vec2 start, RngStream& rng) {
    struct Visitor {
        const AreaBounds& a;
        SimTime d;
        Vec2 s;
        RngStream& r;
        MobilityTrace operator()(const RwpConfig& c) const { return gen_rwp(c, a, d, s, r); }
        MobilityTrace operator()(const RwConfig& c) const { return gen_rw(c, a, d, s, r); }
        MobilityTrace operator()(const RdmConfig& c) const { return gen_rdm(c, a, d, s, r); }
        MobilityTrace operator()(const GmConfig& c) const { return gen_gm(c, a, d, s, r); }
        MobilityTrace operator()(const PrwConfig& c) const { return gen_prw(c, a, d, s, r); }
        MobilityTrace operator()(const BsaConfig& c) const { return gen_bsa(c, a, d, s, r); }
        MobilityTrace operator()(const CsmConfig& c) const { return gen_csm(c, a, d, s, r); }
    };
    return std::visit(Visitor{area, duration, start, rng}, cfg);
}

inline const char* model_name(const MobilityModelConfig& cfg) {
    switch (cfg.index()) {
        case 0: return "rwp";
        case 1: return "rw";
        case 2: return "rdm";
        case 3: return "gm";
        case 4: return "prw";
        case 5: return "bsa";
        case 6: return "csm";
    }
    return "?";
}

}  // namespace llnsim
