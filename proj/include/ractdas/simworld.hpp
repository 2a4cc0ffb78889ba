#pragma once

// Discrete-event world: cars on one road, check-posts with a reader zone
// and a gate, serial links with per-byte latency, and the registry behind
// an endpoint.
//
// Each tick of dt, in order:
//   1. queued link and timer events due by now are delivered, each at its
//      own timestamp;
//   2. scheduled actions due by now go to the registry, then releases it
//      reports are taken to the nodes;
//   3. reader zones are refreshed and idle readers start a read cycle;
//   4. every car senses from current positions, drives, and moves speed*dt
//      unless it stopped.

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ractdas/checkpost.hpp"
#include "ractdas/endpoint.hpp"
#include "ractdas/line_follower.hpp"
#include "ractdas/scenario.hpp"

namespace ractdas {

struct LinkModel {
    int reader_bps = 2400;
    int server_bps = 9600;
    SimDuration server_extra_latency{0};

    // Ten bit times per byte (8N1), rounded up to the nanosecond.
    static SimDuration byte_time(int bps, std::size_t bytes);
    SimDuration reader_frame_latency() const;   // 12 bytes: exactly 50 ms at 2400 bps
    SimDuration server_line_latency(std::size_t line_bytes_with_newline) const;
};

// Trace lines are "seq<TAB>t<TAB>kind<TAB>key=value key=value ...".
struct TraceRecord {
    std::uint64_t seq = 0;
    SimTime t;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    std::string line() const;
    const std::string* field(std::string_view key) const;
};

class EventTrace {
public:
    void add(SimTime t, std::string kind, std::vector<std::pair<std::string, std::string>> fields);
    const std::vector<TraceRecord>& records() const noexcept { return records_; }
    std::string str() const;
    std::vector<const TraceRecord*> of_kind(std::string_view kind) const;
    bool empty() const noexcept { return records_.empty(); }

private:
    std::vector<TraceRecord> records_;
};

struct VehicleState {
    VehicleSpec spec;
    bool active = false;
    bool finished = false;
    double position = 0;
    bool moving = false;
    LineFollowerState controller;
    std::size_t next_waypoint = 1;
    std::set<std::string> gates_passed;
};

struct WorldOptions {
    SensorGeometry sensors;
};

class World {
public:
    // `endpoint` must outlive the world. Owners are seeded immediately.
    World(Scenario scenario, RegistryEndpoint& endpoint, WorldOptions options = {});

    void advance(SimDuration dt);
    void advance() { advance(scenario_.dt); }
    bool done() const noexcept { return now_ >= end_; }

    SimTime now() const noexcept { return now_; }
    const EventTrace& trace() const noexcept { return trace_; }
    const std::vector<VehicleState>& vehicles() const noexcept { return vehicles_; }
    const VehicleState& vehicle(const std::string& id) const;
    const CheckpostState& node(const std::string& checkpost_id) const;
    const CheckpostSpec& checkpost(const std::string& checkpost_id) const;
    const LinkModel& link() const noexcept { return link_; }

private:
    struct FrameArrival {
        std::size_t node;
        std::string vehicle;
        TagId tag;
        SimTime started;
    };
    struct Uplink {
        std::size_t node;
        std::string line;
    };
    struct Downlink {
        std::size_t node;
        std::string line;
    };
    struct TimerFire {
        std::size_t node;
        std::uint64_t token;
    };
    using Pending = std::variant<FrameArrival, Uplink, Downlink, TimerFire>;
    struct Queued {
        SimTime at;
        std::uint64_t seq;
        Pending event;
        bool operator>(const Queued& o) const { return std::pair(at, seq) > std::pair(o.at, o.seq); }
    };
    struct Node {
        CheckpostSpec spec;
        CheckpostState state;
        std::uint64_t timer = 0;
        SimTime reader_busy_until{};
        std::set<std::string> in_zone;   // vehicle ids
        std::set<std::string> served;    // read and handed over this visit
    };

    void schedule(SimTime at, Pending event);
    void deliver(const Queued& q);
    void on_frame(const FrameArrival& f, SimTime t);
    void on_uplink(const Uplink& u, SimTime t);
    void on_downlink(const Downlink& d, SimTime t);
    void on_timer(const TimerFire& f, SimTime t);
    void apply_actions();
    void refresh_zones();
    void move_vehicles(SimDuration dt);
    void step_node(std::size_t n, const NodeEvent& event, SimTime t);
    void send_up(std::size_t n, const wire::Message& m, SimTime t);
    std::string maybe_corrupt(std::string line, SimTime t);
    std::optional<double> obstruction_ahead(const VehicleState& v) const;
    std::size_t node_index(const std::string& id) const;
    std::optional<TagId> exchange_tag(const Node& node) const;

    Scenario scenario_;
    RegistryEndpoint& endpoint_;
    WorldOptions options_;
    LinkModel link_;
    CheckpostConfig node_config_;
    SimTime now_{};
    SimTime end_{};
    std::vector<Node> nodes_;
    std::vector<VehicleState> vehicles_;
    std::size_t next_action_ = 0;
    std::priority_queue<Queued, std::vector<Queued>, std::greater<>> queue_;
    std::uint64_t queue_seq_ = 0;
    std::mt19937_64 rng_;
    EventTrace trace_;
};

// Runs to the scenario's duration. `seed` overrides the scenario seed.
EventTrace run_scenario(const Scenario& scenario, RegistryEndpoint& endpoint,
                        std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace ractdas
