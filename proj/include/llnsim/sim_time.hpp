#pragma once

#include <cmath>
#include <cstdint>
#include <compare>

namespace llnsim {

// Kernel clock rate. All simulated durations are integer tick counts at
// 32768 ticks per second, the same rate the energy accounting divides by,
// so radio and power bookkeeping share one clock.
inline constexpr std::int64_t kTicksPerSecond = 32768;

// A point in simulated time (or a duration), counted in clock ticks.
// seconds() is exact for tick counts below 2^53 since the divisor is a
// power of two.
struct SimTime {
    std::int64_t ticks = 0;

    static constexpr SimTime zero() { return SimTime{0}; }

    // Rounds half-up to the nearest tick.
    static SimTime from_seconds(double s) {
        return SimTime{static_cast<std::int64_t>(std::floor(s * static_cast<double>(kTicksPerSecond) + 0.5))};
    }
    static SimTime from_ms(double ms) { return from_seconds(ms / 1000.0); }

    double seconds() const { return static_cast<double>(ticks) / static_cast<double>(kTicksPerSecond); }

    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ticks + b.ticks}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ticks - b.ticks}; }
    constexpr SimTime& operator+=(SimTime o) { ticks += o.ticks; return *this; }
    constexpr SimTime& operator-=(SimTime o) { ticks -= o.ticks; return *this; }
    friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.ticks * k}; }
    friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime{a.ticks * k}; }
    friend constexpr SimTime operator/(SimTime a, std::int64_t k) { return SimTime{a.ticks / k}; }
    friend constexpr auto operator<=>(SimTime a, SimTime b) = default;
};

}  // namespace llnsim
