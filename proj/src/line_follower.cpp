#include "ractdas/line_follower.hpp"

#include <cmath>

namespace ractdas {

std::string_view drive_action_name(DriveAction a) noexcept {
    switch (a) {
        case DriveAction::Forward: return "FORWARD";
        case DriveAction::Left: return "LEFT";
        case DriveAction::Right: return "RIGHT";
        case DriveAction::Stop: return "STOP";
    }
    return "?";
}

Comparators comparators(const LineFollowerState& s) noexcept {
    return {s.left_ir < kIrThresholdVolts, s.right_ir < kIrThresholdVolts, s.obstacle > kObstacleThresholdVolts};
}

LineFollowerState sense(double lateral_offset, std::optional<double> obstruction, const SensorGeometry& g,
                        DriveAction last) {
    const double half = g.line_width / 2;
    auto volts = [&](double sensor_x) { return std::abs(sensor_x) <= half ? g.white_volts : g.black_volts; };
    LineFollowerState s;
    s.left_ir = volts(lateral_offset - g.sensor_offset);
    s.right_ir = volts(lateral_offset + g.sensor_offset);
    s.obstacle = obstruction && *obstruction <= kObstacleRange ? g.obstacle_near_volts : g.obstacle_clear_volts;
    s.last_action = last;
    return s;
}

DriveAction drive(const LineFollowerState& s) noexcept {
    const Comparators c = comparators(s);
    if (c.obstacle) return DriveAction::Stop;
    if (c.left && c.right) return DriveAction::Stop;
    if (c.left) return DriveAction::Left;
    if (c.right) return DriveAction::Right;
    return DriveAction::Forward;
}

}  // namespace ractdas
