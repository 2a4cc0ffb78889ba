#include "ractdas/sim_time.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ractdas {

SimDuration duration_from_seconds(double seconds) {
    return SimDuration{static_cast<std::int64_t>(std::llround(seconds * 1e9))};
}

double to_seconds(SimDuration d) {
    return static_cast<double>(d.count()) / 1e9;
}

std::string format_seconds(SimDuration d) {
    const std::int64_t ns = d.count();
    const std::int64_t mag = ns < 0 ? -ns : ns;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%09lld", ns < 0 ? "-" : "",
                  static_cast<long long>(mag / 1'000'000'000),
                  static_cast<long long>(mag % 1'000'000'000));
    return buf;
}

}  // namespace ractdas
