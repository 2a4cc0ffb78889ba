#include "ractdas/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ractdas/error.hpp"
#include "ractdas/line_follower.hpp"
#include "ractdas/wire.hpp"

namespace ractdas {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& why) { fail(ErrorCode::ScenarioInvalid, why); }

// Walks one JSON object, rejecting keys nobody asked for.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) invalid(where_ + " must be an object");
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json& at(const char* key) {
        if (!has(key)) invalid(where_ + "." + key + " is required");
        return j_.at(key);
    }
    double number(const char* key) {
        const json& v = at(key);
        if (!v.is_number()) invalid(where_ + "." + key + " must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) invalid(where_ + "." + key + " must be finite");
        return d;
    }
    double number(const char* key, double fallback) { return has(key) ? number(key) : fallback; }
    std::string string(const char* key) {
        const json& v = at(key);
        if (!v.is_string()) invalid(where_ + "." + key + " must be a string");
        return v.get<std::string>();
    }
    bool boolean(const char* key, bool fallback) {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) invalid(where_ + "." + key + " must be true or false");
        return j_.at(key).get<bool>();
    }
    const json& array(const char* key) {
        const json& v = at(key);
        if (!v.is_array()) invalid(where_ + "." + key + " must be an array");
        return v;
    }
    const json* optional_array(const char* key) { return has(key) ? &array(key) : nullptr; }
    TagId tag(const json& v, const std::string& what) {
        if (!v.is_string()) invalid(what + " must be a tag string");
        try {
            return TagId::parse(v.get<std::string>());
        } catch (const Error& e) {
            invalid(what + ": " + e.what());
        }
    }
    SimDuration seconds(const char* key, SimDuration fallback) {
        return has(key) ? duration_from_seconds(number(key)) : fallback;
    }
    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) invalid(where_ + ": unknown field '" + k + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

std::string_view action_kind_name(ActionKind k) noexcept {
    switch (k) {
        case ActionKind::ReportStolen: return "report_stolen";
        case ActionKind::ClearReport: return "clear_report";
        case ActionKind::OperatorRelease: return "operator_release";
    }
    return "?";
}

Scenario parse_scenario(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        invalid(std::string("not JSON: ") + e.what());
    }
    Scenario s;
    Fields f(root, "scenario");
    if (!f.at("version").is_number_integer()) invalid("scenario.version must be an integer");
    s.version = f.at("version").get<int>();
    if (f.has("seed")) {
        if (!f.at("seed").is_number_unsigned()) invalid("scenario.seed must be a non-negative integer");
        s.seed = f.at("seed").get<std::uint64_t>();
    }
    s.dt = f.seconds("dt", s.dt);
    s.duration = duration_from_seconds(f.number("duration"));
    s.node_timeout = f.seconds("node_timeout", s.node_timeout);
    if (f.has("max_retries")) {
        if (!f.at("max_retries").is_number_integer()) invalid("scenario.max_retries must be an integer");
        s.max_retries = f.at("max_retries").get<int>();
    }
    if (f.has("policy")) {
        s.policy = policy_from_name(f.string("policy"));
        if (!s.policy) invalid("scenario.policy must be STRICT or LENIENT");
    }

    for (const json& c : f.array("checkposts")) {
        Fields cf(c, "checkpost");
        CheckpostSpec cp;
        cp.id = cf.string("id");
        cp.position = cf.number("position");
        cp.gate_offset = cf.number("gate_offset", cp.gate_offset);
        cp.range = cf.number("range", cp.range);
        cp.enabled = cf.boolean("enabled", cp.enabled);
        cf.finish();
        s.checkposts.push_back(std::move(cp));
    }
    for (const json& v : f.array("vehicles")) {
        Fields vf(v, "vehicle");
        VehicleSpec veh;
        veh.id = vf.string("id");
        if (vf.has("tag")) veh.tag = vf.tag(vf.at("tag"), "vehicle " + veh.id + " tag");
        for (const json& w : vf.array("route")) {
            if (!w.is_number()) invalid("vehicle " + veh.id + " route entries must be numbers");
            veh.route.push_back(w.get<double>());
        }
        veh.speed = vf.number("speed", veh.speed);
        veh.start_time = kEpoch + vf.seconds("start_time", SimDuration{0});
        veh.lateral_offset = vf.number("lateral_offset", veh.lateral_offset);
        veh.length = vf.number("length", veh.length);
        vf.finish();
        s.vehicles.push_back(std::move(veh));
    }
    if (const json* actions = f.optional_array("actions")) {
        for (const json& a : *actions) {
            Fields af(a, "action");
            ScheduledAction act;
            act.at = kEpoch + duration_from_seconds(af.number("at"));
            const std::string kind = af.string("kind");
            if (kind == "report_stolen" || kind == "clear_report") {
                act.kind = kind == "report_stolen" ? ActionKind::ReportStolen : ActionKind::ClearReport;
                act.tag = af.tag(af.at("tag"), "action " + kind + " tag");
            } else if (kind == "operator_release") {
                act.kind = ActionKind::OperatorRelease;
                act.checkpost = af.string("checkpost");
            } else {
                invalid("action.kind '" + kind + "' is not report_stolen, clear_report or operator_release");
            }
            af.finish();
            s.actions.push_back(std::move(act));
        }
    }
    if (const json* owners = f.optional_array("owners")) {
        for (const json& o : *owners) {
            Fields of(o, "owner");
            OwnerSpec owner;
            owner.login = of.string("login");
            owner.password = of.string("password");
            if (const json* tags = of.optional_array("tags")) {
                for (const json& t : *tags) owner.tags.push_back(of.tag(t, "owner " + owner.login + " tag"));
            }
            of.finish();
            s.owners.push_back(std::move(owner));
        }
    }
    if (f.has("link")) {
        Fields lf(f.at("link"), "link");
        auto bps = [&](const char* key, int fallback) {
            if (!lf.has(key)) return fallback;
            if (!lf.at(key).is_number_integer()) invalid(std::string("link.") + key + " must be an integer");
            return lf.at(key).get<int>();
        };
        s.link.reader_bps = bps("reader_bps", s.link.reader_bps);
        s.link.server_bps = bps("server_bps", s.link.server_bps);
        s.link.server_extra_latency = lf.seconds("server_extra_latency", s.link.server_extra_latency);
        s.link.corruption_probability = lf.number("corruption_probability", 0);
        lf.finish();
    }
    f.finish();
    validate(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) invalid("cannot read scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

void validate(const Scenario& s) {
    if (s.version != 1) invalid("unsupported scenario version " + std::to_string(s.version));
    if (s.dt <= SimDuration{0}) invalid("dt must be positive");
    if (s.duration < SimDuration{0}) invalid("duration must be non-negative");
    if (s.node_timeout <= SimDuration{0}) invalid("node_timeout must be positive");
    if (s.max_retries < 0) invalid("max_retries must be non-negative");
    if (s.link.reader_bps <= 0 || s.link.server_bps <= 0) invalid("link rates must be positive");
    if (s.link.server_extra_latency < SimDuration{0}) invalid("link.server_extra_latency must be non-negative");
    if (!(s.link.corruption_probability >= 0 && s.link.corruption_probability <= 1)) {
        invalid("link.corruption_probability must lie in [0, 1]");
    }
    const SimTime end = kEpoch + s.duration;

    std::set<std::string> cps;
    for (const auto& c : s.checkposts) {
        if (!wire::valid_checkpost_id(c.id)) invalid("checkpost id '" + c.id + "' must be 1-64 printable characters");
        if (!cps.insert(c.id).second) invalid("duplicate checkpost id " + c.id);
        if (!std::isfinite(c.position)) invalid("checkpost " + c.id + " position must be finite");
        if (!(c.range > 0)) invalid("checkpost " + c.id + " range must be positive");
        if (!(c.gate_offset > 0)) invalid("checkpost " + c.id + " gate_offset must be positive");
    }

    std::set<std::string> vids;
    std::set<TagId> known_tags;
    for (const auto& v : s.vehicles) {
        if (v.id.empty()) invalid("vehicle id must be non-empty");
        if (!vids.insert(v.id).second) invalid("duplicate vehicle id " + v.id);
        if (v.route.empty()) invalid("vehicle " + v.id + " route is empty");
        for (std::size_t i = 0; i < v.route.size(); ++i) {
            if (!std::isfinite(v.route[i])) invalid("vehicle " + v.id + " route must be finite");
            if (i > 0 && !(v.route[i] > v.route[i - 1])) invalid("vehicle " + v.id + " route must strictly increase");
        }
        if (!(v.speed >= 0)) invalid("vehicle " + v.id + " speed must be non-negative");
        if (!(v.length > 0)) invalid("vehicle " + v.id + " length must be positive");
        // One tick of travel must stay well inside the obstacle range.
        if (v.speed * to_seconds(s.dt) >= kObstacleRange) {
            invalid("vehicle " + v.id + ": dt*speed must be below the 0.10 m obstacle range");
        }
        if (v.start_time < kEpoch || v.start_time > end) invalid("vehicle " + v.id + " start_time outside duration");
        if (v.tag) {
            if (!known_tags.insert(*v.tag).second) invalid("tag " + v.tag->str() + " carried by two vehicles");
        }
    }

    std::set<std::string> logins;
    std::set<TagId> owned;
    for (const auto& o : s.owners) {
        if (o.login.empty()) invalid("owner login must be non-empty");
        if (!logins.insert(o.login).second) invalid("duplicate owner " + o.login);
        for (const auto& t : o.tags) {
            if (!owned.insert(t).second) invalid("tag " + t.str() + " listed for two owners");
            known_tags.insert(t);
        }
    }

    for (const auto& a : s.actions) {
        if (a.at < kEpoch || a.at > end) invalid("action at " + format_seconds(a.at) + " outside duration");
        if (a.kind == ActionKind::OperatorRelease) {
            if (!cps.contains(a.checkpost)) invalid("action references unknown checkpost '" + a.checkpost + "'");
        } else if (!a.tag || !known_tags.contains(*a.tag)) {
            invalid("action references tag " + (a.tag ? a.tag->str() : std::string("?")) +
                    " that no vehicle or owner carries");
        }
    }
}

}  // namespace ractdas
