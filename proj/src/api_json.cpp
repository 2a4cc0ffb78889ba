#include "ractdas/api_json.hpp"

#include "ractdas/error.hpp"

namespace ractdas::api {

namespace {

std::int64_t ns(SimTime t) { return t.time_since_epoch().count(); }
SimTime at_ns(const json& j) { return SimTime{SimDuration{j.get<std::int64_t>()}}; }

}  // namespace

Role role_from(const std::string& s) {
    const auto r = role_from_name(s);
    if (!r) fail(ErrorCode::MalformedMessage, "role must be OWNER or OPERATOR, got '" + s + "'");
    return *r;
}

json to_json(const UserAccount& u) {
    json tags = json::array();
    for (const auto& t : u.owned_tags) tags.push_back(t.str());
    return {{"login", u.login}, {"role", role_name(u.role)}, {"owned_tags", tags}};
}

json to_json(const TagRecord& t) {
    return {{"tag", t.tag.str()},
            {"owner", t.owner_login},
            {"registered_at", ns(t.registered_at)},
            {"status", status_name(t.status)}};
}

json to_json(const TheftReport& r) {
    json j{{"tag", r.tag.str()}, {"reported_by", r.reported_by}, {"opened_at", ns(r.opened_at)}, {"open", r.open()}};
    if (r.closed_at) j["closed_at"] = ns(*r.closed_at);
    if (r.closed_by) j["closed_by"] = *r.closed_by;
    return j;
}

json to_json(const RegistryEvent& e) {
    json j{{"event_id", e.event_id}, {"at", ns(e.at)}, {"kind", event_kind_name(e.kind)}};
    if (!e.checkpost_id.empty()) j["checkpost"] = e.checkpost_id;
    if (e.tag) j["tag"] = e.tag->str();
    if (e.verdict) {
        j["verdict"] = verdict_name(*e.verdict);
        j["echo_ok"] = e.echo_ok;
    }
    if (!e.actor.empty()) j["actor"] = e.actor;
    return j;
}

json to_json(const std::string& checkpost_id, const GateView& g) {
    json j{{"checkpost", checkpost_id}, {"gate", gate_name(g.gate)}};
    j["held_tag"] = g.held_tag ? json(g.held_tag->str()) : json(nullptr);
    return j;
}

json to_json(const Session& s) {
    return {{"token", s.token}, {"login", s.login}, {"role", role_name(s.role)}, {"expires_at", ns(s.expires_at)}};
}

UserAccount user_from(const json& j) {
    UserAccount u;
    u.login = j.at("login").get<std::string>();
    u.role = role_from(j.at("role").get<std::string>());
    for (const auto& t : j.value("owned_tags", json::array())) u.owned_tags.insert(TagId::parse(t.get<std::string>()));
    return u;
}

TagRecord tag_from(const json& j) {
    const std::string status = j.at("status").get<std::string>();
    return {TagId::parse(j.at("tag").get<std::string>()), j.at("owner").get<std::string>(),
            at_ns(j.at("registered_at")), status == "CLEAR" ? TagStatus::Clear : TagStatus::ReportedStolen};
}

TheftReport report_from(const json& j) {
    TheftReport r;
    r.tag = TagId::parse(j.at("tag").get<std::string>());
    r.reported_by = j.at("reported_by").get<std::string>();
    r.opened_at = at_ns(j.at("opened_at"));
    if (j.contains("closed_at")) r.closed_at = at_ns(j.at("closed_at"));
    if (j.contains("closed_by")) r.closed_by = j.at("closed_by").get<std::string>();
    return r;
}

RegistryEvent event_from(const json& j) {
    RegistryEvent e;
    e.event_id = j.at("event_id").get<std::uint64_t>();
    e.at = at_ns(j.at("at"));
    const std::string kind = j.at("kind").get<std::string>();
    for (EventKind k : {EventKind::Detection, EventKind::ReportOpened, EventKind::ReportCleared,
                        EventKind::GateReleased}) {
        if (event_kind_name(k) == kind) e.kind = k;
    }
    e.checkpost_id = j.value("checkpost", "");
    if (j.contains("tag")) e.tag = TagId::parse(j.at("tag").get<std::string>());
    if (j.contains("verdict")) {
        e.verdict = j.at("verdict").get<std::string>() == "ARREST" ? Verdict::Arrest : Verdict::Go;
        e.echo_ok = j.value("echo_ok", false);
    }
    e.actor = j.value("actor", "");
    return e;
}

GateView gate_from(const json& j) {
    GateView g;
    g.gate = j.at("gate").get<std::string>() == "CLOSED" ? GatePosition::Closed : GatePosition::Open;
    if (!j.at("held_tag").is_null()) g.held_tag = TagId::parse(j.at("held_tag").get<std::string>());
    return g;
}

Session session_from(const json& j) {
    return {j.at("token").get<std::string>(), j.at("login").get<std::string>(),
            role_from(j.at("role").get<std::string>()), at_ns(j.at("expires_at"))};
}

}  // namespace ractdas::api
