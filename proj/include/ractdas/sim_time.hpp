#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace ractdas {

// Simulated time. Integer nanoseconds so that link latencies such as the
// 50 ms reader frame are exact and traces are reproducible byte for byte.
struct SimClock {
    using rep = std::int64_t;
    using period = std::nano;
    using duration = std::chrono::nanoseconds;
    using time_point = std::chrono::time_point<SimClock, duration>;
    static constexpr bool is_steady = true;
};

using SimDuration = SimClock::duration;
using SimTime = SimClock::time_point;

inline constexpr SimTime kEpoch{};

// Nearest nanosecond.
SimDuration duration_from_seconds(double seconds);
inline SimTime time_from_seconds(double seconds) { return kEpoch + duration_from_seconds(seconds); }

double to_seconds(SimDuration d);
inline double to_seconds(SimTime t) { return to_seconds(t.time_since_epoch()); }

// Fixed nine-decimal rendering, e.g. "12.050000000". Never goes through
// floating point.
std::string format_seconds(SimDuration d);
inline std::string format_seconds(SimTime t) { return format_seconds(t.time_since_epoch()); }

}  // namespace ractdas
