#pragma once

#include <cmath>
#include <stdexcept>

namespace llnsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double k) { return {a.x * k, a.y * k}; }
    friend constexpr Vec2 operator*(double k, Vec2 a) { return {a.x * k, a.y * k}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

    double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Simulation field: rectangle with origin (0,0), x in [0,width], y in [0,height].
struct AreaBounds {
    double width = 200.0;
    double height = 200.0;

    void validate() const {
        if (!(width > 0.0) || !(height > 0.0))
            throw std::invalid_argument("AreaBounds: width and height must be > 0");
    }
    bool contains(Vec2 p, double eps = 1e-9) const {
        return p.x >= -eps && p.x <= width + eps && p.y >= -eps && p.y <= height + eps;
    }
    Vec2 clamp(Vec2 p) const {
        return {std::min(std::max(p.x, 0.0), width), std::min(std::max(p.y, 0.0), height)};
    }
    Vec2 center() const { return {width / 2.0, height / 2.0}; }
};

}  // namespace llnsim
