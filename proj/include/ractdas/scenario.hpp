#pragma once

// Scenario documents (JSON):
//
//   {
//     "version": 1, "seed": 42, "dt": 0.01, "duration": 60,
//     "checkposts": [{"id": "CP1", "position": 1.0}],
//     "vehicles": [{"id": "car1", "tag": "0F0184F07A", "route": [0, 6], "start_time": 0}],
//     "actions": [{"at": 12.5, "kind": "report_stolen", "tag": "0F0184F07A"}],
//     "owners": [{"login": "alice", "password": "s3cretpw!", "tags": ["0F0184F07A"]}],
//     "link": {"server_extra_latency": 0.002, "corruption_probability": 0.0},
//     "policy": "STRICT"
//   }
//
// Times and lengths are seconds and metres. Unknown fields are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ractdas/registry.hpp"
#include "ractdas/sim_time.hpp"
#include "ractdas/tag_id.hpp"

namespace ractdas {

inline constexpr double kReadRange = 0.1016;   // 4 inches

struct CheckpostSpec {
    std::string id;
    double position = 0;        // reader zone centre
    double gate_offset = 0.30;  // gate this far past the zone centre
    double range = kReadRange;
    bool enabled = true;

    double gate_position() const noexcept { return position + gate_offset; }
};

struct VehicleSpec {
    std::string id;
    std::optional<TagId> tag;
    std::vector<double> route;   // strictly increasing waypoints, driven front to back
    double speed = 0.2;
    SimTime start_time{};
    double lateral_offset = 0;
    double length = 0.15;
};

enum class ActionKind { ReportStolen, ClearReport, OperatorRelease };

std::string_view action_kind_name(ActionKind k) noexcept;

struct ScheduledAction {
    SimTime at{};
    ActionKind kind = ActionKind::ReportStolen;
    std::optional<TagId> tag;   // report_stolen, clear_report
    std::string checkpost;      // operator_release
};

struct LinkConfig {
    int reader_bps = 2400;
    int server_bps = 9600;
    SimDuration server_extra_latency{0};
    double corruption_probability = 0;
};

struct OwnerSpec {
    std::string login;
    std::string password;
    std::vector<TagId> tags;
};

struct Scenario {
    int version = 1;
    std::uint64_t seed = 0;
    SimDuration dt = std::chrono::milliseconds(10);
    SimDuration duration{0};
    std::vector<CheckpostSpec> checkposts;
    std::vector<VehicleSpec> vehicles;
    std::vector<ScheduledAction> actions;
    std::vector<OwnerSpec> owners;
    LinkConfig link;
    std::optional<Policy> policy;
    SimDuration node_timeout = std::chrono::milliseconds(500);
    int max_retries = 3;
};

// Throws Error(ScenarioInvalid) naming the offending field.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
void validate(const Scenario& s);

}  // namespace ractdas
