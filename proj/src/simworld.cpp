#include "ractdas/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ractdas/frame_codec.hpp"
#include "ractdas/singulation.hpp"

namespace ractdas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string metres(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string hex_byte(std::uint8_t b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", b);
    return buf;
}

std::string code_text(std::uint8_t b) {
    const auto c = DecisionCode::from_byte(b);
    return c ? std::string(1, static_cast<char>(c->letter())) : "invalid";
}

}  // namespace

SimDuration LinkModel::byte_time(int bps, std::size_t bytes) {
    const std::int64_t bits = static_cast<std::int64_t>(bytes) * kBitsPerChar;
    return SimDuration{(bits * 1'000'000'000 + bps - 1) / bps};
}

SimDuration LinkModel::reader_frame_latency() const { return byte_time(reader_bps, kFrameSize); }

SimDuration LinkModel::server_line_latency(std::size_t bytes) const { return byte_time(server_bps, bytes); }

std::string TraceRecord::line() const {
    std::string out = std::to_string(seq) + "\t" + format_seconds(t) + "\t" + kind + "\t";
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(' ');
        out += fields[i].first + "=" + fields[i].second;
    }
    return out;
}

const std::string* TraceRecord::field(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return &v;
    }
    return nullptr;
}

void EventTrace::add(SimTime t, std::string kind, Fields fields) {
    records_.push_back({records_.size() + 1, t, std::move(kind), std::move(fields)});
}

std::string EventTrace::str() const {
    std::string out;
    for (const auto& r : records_) out += r.line() + "\n";
    return out;
}

std::vector<const TraceRecord*> EventTrace::of_kind(std::string_view kind) const {
    std::vector<const TraceRecord*> out;
    for (const auto& r : records_) {
        if (r.kind == kind) out.push_back(&r);
    }
    return out;
}

World::World(Scenario scenario, RegistryEndpoint& endpoint, WorldOptions options)
    : scenario_(std::move(scenario)), endpoint_(endpoint), options_(options), rng_(scenario_.seed) {
    validate(scenario_);
    link_ = {scenario_.link.reader_bps, scenario_.link.server_bps, scenario_.link.server_extra_latency};
    node_config_.max_retries = scenario_.max_retries;
    end_ = kEpoch + scenario_.duration;
    for (const auto& c : scenario_.checkposts) {
        Node n;
        n.spec = c;
        n.state = CheckpostState::initial(c.id);
        nodes_.push_back(std::move(n));
    }
    for (const auto& v : scenario_.vehicles) {
        VehicleState s;
        s.spec = v;
        s.position = v.route.front();
        vehicles_.push_back(std::move(s));
    }
    std::stable_sort(scenario_.actions.begin(), scenario_.actions.end(),
                     [](const ScheduledAction& a, const ScheduledAction& b) { return a.at < b.at; });
    endpoint_.set_time(now_);
    if (!scenario_.owners.empty()) endpoint_.seed_owners(scenario_.owners);
}

const VehicleState& World::vehicle(const std::string& id) const {
    for (const auto& v : vehicles_) {
        if (v.spec.id == id) return v;
    }
    throw std::out_of_range("no vehicle " + id);
}

std::size_t World::node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].spec.id == id) return i;
    }
    throw std::out_of_range("no checkpost " + id);
}

const CheckpostState& World::node(const std::string& id) const { return nodes_[node_index(id)].state; }
const CheckpostSpec& World::checkpost(const std::string& id) const { return nodes_[node_index(id)].spec; }

void World::schedule(SimTime at, Pending event) { queue_.push({at, queue_seq_++, std::move(event)}); }

void World::advance(SimDuration dt) {
    if (dt <= SimDuration{0}) throw std::invalid_argument("dt must be positive");
    while (!queue_.empty() && queue_.top().at <= now_) {
        const Queued q = queue_.top();
        queue_.pop();
        deliver(q);
    }
    apply_actions();
    refresh_zones();
    move_vehicles(dt);
    now_ += dt;
}

void World::deliver(const Queued& q) {
    std::visit(overloaded{
                   [&](const FrameArrival& f) { on_frame(f, q.at); },
                   [&](const Uplink& u) { on_uplink(u, q.at); },
                   [&](const Downlink& d) { on_downlink(d, q.at); },
                   [&](const TimerFire& f) { on_timer(f, q.at); },
               },
               q.event);
}

std::optional<TagId> World::exchange_tag(const Node& node) const {
    if (const auto* a = std::get_if<mode::AwaitCode>(&node.state.mode)) return a->tag;
    if (const auto* e = std::get_if<mode::Echoing>(&node.state.mode)) return e->tag;
    return std::nullopt;
}

void World::apply_actions() {
    while (next_action_ < scenario_.actions.size() && scenario_.actions[next_action_].at <= now_) {
        const ScheduledAction& a = scenario_.actions[next_action_++];
        Fields f{{"kind", std::string(action_kind_name(a.kind))}};
        if (a.tag) f.emplace_back("tag", a.tag->str());
        if (!a.checkpost.empty()) f.emplace_back("checkpost", a.checkpost);
        endpoint_.set_time(now_);
        try {
            endpoint_.apply(a);
            trace_.add(now_, "action", std::move(f));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::RegistryUnreachable) throw;
            f.emplace_back("error", std::string(e.name()));
            trace_.add(now_, "action_failed", std::move(f));
        }
    }
    endpoint_.set_time(now_);
    for (const std::string& cp : endpoint_.poll_releases()) {
        std::size_t n;
        try {
            n = node_index(cp);
        } catch (const std::out_of_range&) {
            continue;   // a gate this world does not model
        }
        trace_.add(now_, "release", {{"checkpost", cp}});
        step_node(n, event::OperatorRelease{}, now_);
    }
}

void World::refresh_zones() {
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        Node& node = nodes_[n];
        for (const auto& v : vehicles_) {
            const bool inside = v.active && v.spec.tag && node.spec.enabled &&
                                std::abs(v.position - node.spec.position) <= node.spec.range;
            const bool was = node.in_zone.contains(v.spec.id);
            if (inside && !was) {
                node.in_zone.insert(v.spec.id);
                trace_.add(now_, "zone_enter",
                           {{"checkpost", node.spec.id}, {"vehicle", v.spec.id}, {"tag", v.spec.tag->str()},
                            {"position", metres(v.position)}});
            } else if (!inside && was) {
                node.in_zone.erase(v.spec.id);
                node.served.erase(v.spec.id);
                trace_.add(now_, "zone_exit", {{"checkpost", node.spec.id}, {"vehicle", v.spec.id}});
            }
        }
        if (node.reader_busy_until > now_) continue;

        std::vector<TagId> unread;
        std::map<TagId, std::string> owner_of;
        for (const auto& v : vehicles_) {
            if (node.in_zone.contains(v.spec.id) && !node.served.contains(v.spec.id)) {
                unread.push_back(*v.spec.tag);
                owner_of[*v.spec.tag] = v.spec.id;
            }
        }
        if (unread.empty()) continue;

        std::vector<TagId> order = unread;
        if (unread.size() > 1) {
            const TreeResult r = tree_singulate(TagField{unread, scenario_.seed});
            order = r.discovered;
            trace_.add(now_, "singulate",
                       {{"checkpost", node.spec.id}, {"tags", std::to_string(unread.size())},
                        {"queries", std::to_string(r.query_count)}});
        }
        const SimDuration frame = link_.reader_frame_latency();
        for (std::size_t i = 0; i < order.size(); ++i) {
            const SimTime start = now_ + frame * static_cast<std::int64_t>(i);
            schedule(start + frame, FrameArrival{n, owner_of.at(order[i]), order[i], start});
        }
        node.reader_busy_until = now_ + frame * static_cast<std::int64_t>(order.size());
    }
}

void World::on_frame(const FrameArrival& f, SimTime t) {
    Node& node = nodes_[f.node];
    std::string outcome = "accepted";
    if (node.state.mux != MuxSource::Reader) {
        outcome = "dropped";
    } else if (dedupe_filter(node.state, f.tag, t, node_config_) == DedupeDecision::Suppress) {
        outcome = "suppressed";
    }
    trace_.add(t, "frame",
               {{"checkpost", node.spec.id}, {"vehicle", f.vehicle}, {"tag", f.tag.str()},
                {"started", format_seconds(f.started)}, {"latency", format_seconds(t - f.started)},
                {"outcome", outcome}});
    if (outcome == "dropped") return;
    node.served.insert(f.vehicle);
    step_node(f.node, event::TagScanned{f.tag}, t);
}

void World::step_node(std::size_t n, const NodeEvent& ev, SimTime t) {
    Node& node = nodes_[n];
    std::optional<TagId> tag = exchange_tag(node);
    if (const auto* s = std::get_if<event::TagScanned>(&ev)) tag = s->tag;
    const StepResult r = step(node.state, ev, t, node_config_);
    node.state = r.state;
    if (r.fault) {
        trace_.add(t, "fault",
                   {{"checkpost", node.spec.id}, {"error", std::string(error_name(r.fault->code))},
                    {"byte", hex_byte(r.fault->byte)}});
    }
    for (const auto& a : r.actions) {
        const std::string cp = node.spec.id;
        const std::string tag_text = tag ? tag->str() : "-";
        std::visit(overloaded{
                       [&](const action::SendToServer& s) {
                           trace_.add(t, "detect_sent", {{"checkpost", cp}, {"tag", s.tag.str()}});
                           send_up(n, wire::Detect{cp, s.tag}, t);
                       },
                       [&](const action::SendEcho& s) {
                           trace_.add(t, "echo_sent",
                                      {{"checkpost", cp}, {"tag", tag_text}, {"code", code_text(s.code.wire_byte())}});
                           send_up(n, wire::Echo{s.code.wire_byte()}, t);
                       },
                       [&](const action::SelectMux& s) {
                           trace_.add(t, "mux", {{"checkpost", cp}, {"source", std::string(mux_name(s.source))}});
                       },
                       [&](const action::CloseGate&) {
                           trace_.add(t, "gate_close", {{"checkpost", cp}, {"tag", tag_text}});
                       },
                       [&](const action::KeepGateOpen&) {
                           trace_.add(t, "gate_keep_open", {{"checkpost", cp}, {"tag", tag_text}});
                       },
                       [&](const action::OpenGate&) { trace_.add(t, "gate_open", {{"checkpost", cp}}); },
                       [&](const action::RaiseAlarm& s) {
                           trace_.add(t, "alarm", {{"checkpost", cp}, {"tag", tag_text}, {"reason", s.reason}});
                       },
                   },
                   a);
    }
}

void World::send_up(std::size_t n, const wire::Message& m, SimTime t) {
    Node& node = nodes_[n];
    std::string line = wire::format(m);
    if (std::holds_alternative<wire::Echo>(m)) line = maybe_corrupt(std::move(line), t);
    schedule(t + link_.server_line_latency(line.size() + 1), Uplink{n, line});
    schedule(t + scenario_.node_timeout, TimerFire{n, ++node.timer});
}

std::string World::maybe_corrupt(std::string line, SimTime t) {
    if (scenario_.link.corruption_probability <= 0 || line.empty()) return line;
    const bool carries_code = line.starts_with("CODE ") || line.starts_with("ECHO ") || line.starts_with("RESEND ");
    if (!carries_code) return line;
    // Raw draws keep the stream identical across standard libraries.
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const unsigned bit = static_cast<unsigned>(rng_() % 8);
    if (u < scenario_.link.corruption_probability) {
        const auto before = static_cast<std::uint8_t>(line.back());
        const auto after = static_cast<std::uint8_t>(before ^ (1U << bit));
        line.back() = static_cast<char>(after);
        trace_.add(t, "link_fault", {{"line", line.substr(0, line.find(' '))},
                                        {"from", hex_byte(before)}, {"to", hex_byte(after)}});
    }
    return line;
}

void World::on_uplink(const Uplink& u, SimTime t) {
    endpoint_.set_time(t);
    std::string reply = maybe_corrupt(endpoint_.exchange(nodes_[u.node].spec.id, u.line), t);
    schedule(t + link_.server_extra_latency + link_.server_line_latency(reply.size() + 1), Downlink{u.node, reply});
}

void World::on_downlink(const Downlink& d, SimTime t) {
    Node& node = nodes_[d.node];
    const std::optional<TagId> tag = exchange_tag(node);
    Fields f{{"checkpost", node.spec.id}, {"tag", tag ? tag->str() : "-"}};
    std::optional<NodeEvent> ev;
    std::string kind = "downlink_malformed";
    try {
        const wire::Message m = wire::parse(d.line);
        ev = wire::to_node_event(m);
        std::visit(overloaded{
                       [&](const wire::Code& c) {
                           kind = "code_received";
                           f.emplace_back("byte", hex_byte(c.code));
                           f.emplace_back("code", code_text(c.code));
                       },
                       [&](const wire::Ack&) { kind = "ack"; },
                       [&](const wire::Resend& r) {
                           kind = "resend";
                           f.emplace_back("byte", hex_byte(r.code));
                           f.emplace_back("code", code_text(r.code));
                       },
                       [&](const wire::Err& e) {
                           kind = "server_error";
                           f.emplace_back("error", std::string(error_name(e.code)));
                       },
                       [&](const auto&) { kind = "downlink_unexpected"; },
                   },
                   m);
    } catch (const Error&) {
    }
    std::string outcome = "accepted";
    if (!ev) {
        outcome = "ignored";
    } else if (node.state.mux != MuxSource::Server) {
        outcome = "dropped";
    }
    f.emplace_back("outcome", outcome);
    trace_.add(t, kind, std::move(f));
    if (outcome == "accepted") step_node(d.node, *ev, t);
}

void World::on_timer(const TimerFire& fire, SimTime t) {
    Node& node = nodes_[fire.node];
    if (fire.token != node.timer) return;
    if (!std::holds_alternative<mode::AwaitCode>(node.state.mode) &&
        !std::holds_alternative<mode::Echoing>(node.state.mode)) {
        return;
    }
    const std::optional<TagId> tag = exchange_tag(node);
    trace_.add(t, "timeout",
               {{"checkpost", node.spec.id}, {"tag", tag ? tag->str() : "-"},
                {"retries", std::to_string(node.state.retries)}});
    step_node(fire.node, event::Timeout{}, t);
}

std::optional<double> World::obstruction_ahead(const VehicleState& v) const {
    std::optional<double> best;
    auto consider = [&](double d) {
        d = std::max(d, 0.0);
        if (!best || d < *best) best = d;
    };
    for (const auto& n : nodes_) {
        const double g = n.spec.gate_position();
        if (n.state.gate == GatePosition::Closed && g >= v.position) consider(g - v.position);
    }
    for (const auto& u : vehicles_) {
        if (&u == &v || !u.active || u.position <= v.position) continue;
        consider(u.position - u.spec.length - v.position);
    }
    return best;
}

void World::move_vehicles(SimDuration dt) {
    for (auto& v : vehicles_) {
        if (v.active || v.finished || v.spec.start_time > now_) continue;
        v.active = true;
        v.moving = true;
        v.position = v.spec.route.front();
        trace_.add(now_, "vehicle_enter",
                   {{"vehicle", v.spec.id}, {"tag", v.spec.tag ? v.spec.tag->str() : "-"},
                    {"position", metres(v.position)}});
    }

    // Everyone senses the same snapshot before anyone moves.
    std::vector<std::optional<double>> obstruction(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        auto& v = vehicles_[i];
        if (!v.active) continue;
        obstruction[i] = obstruction_ahead(v);
        v.controller = sense(v.spec.lateral_offset, obstruction[i], options_.sensors, v.controller.last_action);
        v.controller.last_action = drive(v.controller);
    }

    const double dt_s = to_seconds(dt);
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        auto& v = vehicles_[i];
        if (!v.active) continue;
        const DriveAction act = v.controller.last_action;
        if (act == DriveAction::Stop) {
            if (v.moving) {
                const bool obstacle = comparators(v.controller).obstacle;
                Fields f{{"vehicle", v.spec.id}, {"position", metres(v.position)},
                         {"reason", obstacle ? "obstacle" : "line"}};
                if (obstacle) f.emplace_back("clearance", metres(*obstruction[i]));
                trace_.add(now_, "vehicle_stop", std::move(f));
                v.moving = false;
            }
            continue;
        }
        if (!v.moving) {
            trace_.add(now_, "vehicle_resume", {{"vehicle", v.spec.id}, {"position", metres(v.position)}});
            v.moving = true;
        }
        const double before = v.position;
        v.position = std::min(before + v.spec.speed * dt_s, v.spec.route.back());
        for (const auto& n : nodes_) {
            const double g = n.spec.gate_position();
            if (g > before && g <= v.position) {
                v.gates_passed.insert(n.spec.id);
                trace_.add(now_, "vehicle_pass",
                           {{"vehicle", v.spec.id}, {"checkpost", n.spec.id},
                            {"gate", std::string(gate_name(n.state.gate))}});
            }
        }
        while (v.next_waypoint + 1 < v.spec.route.size() && v.position >= v.spec.route[v.next_waypoint]) {
            trace_.add(now_, "waypoint", {{"vehicle", v.spec.id}, {"index", std::to_string(v.next_waypoint)}});
            ++v.next_waypoint;
        }
        if (v.position >= v.spec.route.back()) {
            v.active = false;
            v.finished = true;
            v.moving = false;
            trace_.add(now_, "vehicle_finish", {{"vehicle", v.spec.id}, {"position", metres(v.position)}});
        }
    }
}

EventTrace run_scenario(const Scenario& scenario, RegistryEndpoint& endpoint, std::optional<std::uint64_t> seed) {
    Scenario s = scenario;
    if (seed) s.seed = *seed;
    World world(std::move(s), endpoint);
    while (!world.done()) world.advance();
    return world.trace();
}

}  // namespace ractdas
