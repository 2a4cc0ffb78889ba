#pragma once

#include <optional>
#include <string_view>

namespace ractdas {

// Comparator thresholds of the robot car. IR sensors read below 0.5 V over
// the white line (logic 1) and well above it over the black arena. The
// proximity sensor output rises past 4 V when something is within 10 cm.
inline constexpr double kIrThresholdVolts = 0.5;
inline constexpr double kObstacleThresholdVolts = 4.0;
inline constexpr double kObstacleRange = 0.10;   // metres

enum class DriveAction { Forward, Left, Right, Stop };

std::string_view drive_action_name(DriveAction a) noexcept;

struct LineFollowerState {
    double left_ir = 3.0;
    double right_ir = 3.0;
    double obstacle = 0.5;
    DriveAction last_action = DriveAction::Forward;
};

struct Comparators {
    bool left = false;
    bool right = false;
    bool obstacle = false;
    friend bool operator==(const Comparators&, const Comparators&) = default;
};

Comparators comparators(const LineFollowerState& s) noexcept;

struct SensorGeometry {
    double line_width = 0.02;      // white line, metres
    double sensor_offset = 0.015;  // each IR sensor from the car's centreline
    double white_volts = 0.2;
    double black_volts = 3.0;
    double obstacle_near_volts = 4.5;
    double obstacle_clear_volts = 0.5;
};

// `lateral_offset` is the car's centreline minus the line's centreline,
// positive to the right. `obstruction` is the free distance to the nearest
// thing ahead, if any.
LineFollowerState sense(double lateral_offset, std::optional<double> obstruction,
                        const SensorGeometry& geometry = {}, DriveAction last = DriveAction::Forward);

// Obstacle first, then a single line sensor steers towards it; both on the
// line is a junction or a lost line and stops the car.
DriveAction drive(const LineFollowerState& s) noexcept;

}  // namespace ractdas
