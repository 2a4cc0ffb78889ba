#include "ractdas/journal.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ractdas {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void corrupt(std::int64_t line_no, const std::string& why) {
    fail(ErrorCode::CorruptRecord, "line " + std::to_string(line_no) + ": " + why, line_no);
}

json digest_json(const PasswordDigest& d) {
    return {{"salt", d.salt_hex}, {"digest", d.digest_hex}, {"iterations", d.iterations}};
}

PasswordDigest digest_from(const json& j) {
    return {j.at("salt").get<std::string>(), j.at("digest").get<std::string>(), j.at("iterations").get<int>()};
}

void push_event(RegistryState& s, RegistryEvent e) {
    e.event_id = s.high_water() + 1;
    s.events.push_back(std::move(e));
}

}  // namespace

std::string to_line(const JournalRecord& r) {
    json j;
    j["seq"] = r.seq;
    j["ts"] = r.ts.time_since_epoch().count();
    std::visit(overloaded{
                   [&](const record::RegisterUser& b) {
                       j["type"] = "register_user";
                       j["login"] = b.login;
                       j["role"] = role_name(b.role);
                       j["password"] = digest_json(b.password);
                   },
                   [&](const record::ChangePassword& b) {
                       j["type"] = "change_password";
                       j["login"] = b.login;
                       j["password"] = digest_json(b.password);
                   },
                   [&](const record::RegisterTag& b) {
                       j["type"] = "register_tag";
                       j["tag"] = b.tag.str();
                       j["owner"] = b.owner;
                   },
                   [&](const record::ReportStolen& b) {
                       j["type"] = "report_stolen";
                       j["tag"] = b.tag.str();
                       j["actor"] = b.actor;
                   },
                   [&](const record::ClearReport& b) {
                       j["type"] = "clear_report";
                       j["tag"] = b.tag.str();
                       j["actor"] = b.actor;
                   },
                   [&](const record::Detection& b) {
                       j["type"] = "detection";
                       j["checkpost"] = b.checkpost;
                       j["tag"] = b.tag.str();
                       j["verdict"] = verdict_name(b.verdict);
                       j["echo_ok"] = b.echo_ok;
                       j["detected_at"] = b.detected_at.time_since_epoch().count();
                   },
                   [&](const record::Release& b) {
                       j["type"] = "release";
                       j["checkpost"] = b.checkpost;
                       j["actor"] = b.actor;
                   },
               },
               r.body);
    return j.dump();
}

JournalRecord parse_record(std::string_view line, std::int64_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        corrupt(line_no, std::string("not JSON: ") + e.what());
    }
    try {
        JournalRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.ts = SimTime{SimDuration{j.at("ts").get<std::int64_t>()}};
        const std::string type = j.at("type").get<std::string>();
        if (type == "register_user") {
            const auto role = role_from_name(j.at("role").get<std::string>());
            if (!role) corrupt(line_no, "bad role");
            r.body = record::RegisterUser{j.at("login").get<std::string>(), *role, digest_from(j.at("password"))};
        } else if (type == "change_password") {
            r.body = record::ChangePassword{j.at("login").get<std::string>(), digest_from(j.at("password"))};
        } else if (type == "register_tag") {
            r.body = record::RegisterTag{TagId::parse(j.at("tag").get<std::string>()), j.at("owner").get<std::string>()};
        } else if (type == "report_stolen") {
            r.body = record::ReportStolen{TagId::parse(j.at("tag").get<std::string>()), j.at("actor").get<std::string>()};
        } else if (type == "clear_report") {
            r.body = record::ClearReport{TagId::parse(j.at("tag").get<std::string>()), j.at("actor").get<std::string>()};
        } else if (type == "detection") {
            const std::string v = j.at("verdict").get<std::string>();
            if (v != "ARREST" && v != "GO") corrupt(line_no, "bad verdict");
            r.body = record::Detection{j.at("checkpost").get<std::string>(),
                                       TagId::parse(j.at("tag").get<std::string>()),
                                       v == "ARREST" ? Verdict::Arrest : Verdict::Go, j.at("echo_ok").get<bool>(),
                                       SimTime{SimDuration{j.at("detected_at").get<std::int64_t>()}}};
        } else if (type == "release") {
            r.body = record::Release{j.at("checkpost").get<std::string>(), j.at("actor").get<std::string>()};
        } else {
            corrupt(line_no, "unknown record type '" + type + "'");
        }
        return r;
    } catch (const json::exception& e) {
        corrupt(line_no, std::string("bad field: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptRecord) throw;
        corrupt(line_no, e.what());
    }
}

void apply_record(RegistryState& state, const JournalRecord& r, std::int64_t line_no) {
    if (r.seq != state.last_seq + 1) {
        corrupt(line_no, "seq " + std::to_string(r.seq) + " does not follow " + std::to_string(state.last_seq));
    }
    // Validate fully before touching the state.
    std::visit(overloaded{
                   [&](const record::RegisterUser& b) {
                       if (b.login.empty() || state.users.contains(b.login)) corrupt(line_no, "duplicate login");
                   },
                   [&](const record::ChangePassword& b) {
                       if (!state.users.contains(b.login)) corrupt(line_no, "unknown login");
                   },
                   [&](const record::RegisterTag& b) {
                       const auto it = state.users.find(b.owner);
                       if (it == state.users.end() || it->second.role != Role::Owner) corrupt(line_no, "bad owner");
                       if (state.tags.contains(b.tag)) corrupt(line_no, "duplicate tag");
                   },
                   [&](const record::ReportStolen& b) {
                       if (!state.tags.contains(b.tag)) corrupt(line_no, "unknown tag");
                       if (state.open_report(b.tag)) corrupt(line_no, "already reported");
                   },
                   [&](const record::ClearReport& b) {
                       if (!state.open_report(b.tag)) corrupt(line_no, "no open report");
                   },
                   [&](const record::Detection& b) {
                       if (b.checkpost.empty()) corrupt(line_no, "empty checkpost");
                   },
                   [&](const record::Release& b) {
                       if (b.checkpost.empty()) corrupt(line_no, "empty checkpost");
                   },
               },
               r.body);

    std::visit(overloaded{
                   [&](const record::RegisterUser& b) {
                       state.users[b.login] = UserAccount{b.login, b.password, b.role, {}};
                   },
                   [&](const record::ChangePassword& b) { state.users[b.login].password = b.password; },
                   [&](const record::RegisterTag& b) {
                       state.tags[b.tag] = TagRecord{b.tag, b.owner, r.ts, TagStatus::Clear};
                       state.users[b.owner].owned_tags.insert(b.tag);
                   },
                   [&](const record::ReportStolen& b) {
                       state.reports.push_back(TheftReport{b.tag, b.actor, r.ts, std::nullopt, std::nullopt});
                       state.tags[b.tag].status = TagStatus::ReportedStolen;
                       RegistryEvent e;
                       e.at = r.ts;
                       e.kind = EventKind::ReportOpened;
                       e.tag = b.tag;
                       e.actor = b.actor;
                       push_event(state, std::move(e));
                   },
                   [&](const record::ClearReport& b) {
                       for (auto& rep : state.reports) {
                           if (rep.tag == b.tag && rep.open()) {
                               rep.closed_at = r.ts;
                               rep.closed_by = b.actor;
                           }
                       }
                       state.tags[b.tag].status = TagStatus::Clear;
                       RegistryEvent e;
                       e.at = r.ts;
                       e.kind = EventKind::ReportCleared;
                       e.tag = b.tag;
                       e.actor = b.actor;
                       push_event(state, std::move(e));
                   },
                   [&](const record::Detection& b) {
                       RegistryEvent e;
                       e.at = b.detected_at;
                       e.kind = EventKind::Detection;
                       e.checkpost_id = b.checkpost;
                       e.tag = b.tag;
                       e.verdict = b.verdict;
                       e.echo_ok = b.echo_ok;
                       push_event(state, std::move(e));
                       GateView& g = state.gates[b.checkpost];
                       // A failed echo means the node will fail secure.
                       if (b.verdict == Verdict::Arrest || !b.echo_ok) {
                           g.gate = GatePosition::Closed;
                           g.held_tag = b.tag;
                       }
                   },
                   [&](const record::Release& b) {
                       RegistryEvent e;
                       e.at = r.ts;
                       e.kind = EventKind::GateReleased;
                       e.checkpost_id = b.checkpost;
                       e.actor = b.actor;
                       push_event(state, std::move(e));
                       state.gates[b.checkpost] = GateView{};
                   },
               },
               r.body);
    state.last_seq = r.seq;
}

ReplayOutcome journal_replay_text(std::string_view text) {
    ReplayOutcome out;
    std::int64_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        ++line_no;
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.error = Error(ErrorCode::CorruptRecord,
                              "line " + std::to_string(line_no) + ": truncated record (no newline)", line_no);
            return out;
        }
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        try {
            apply_record(out.state, parse_record(line, line_no), line_no);
            ++out.records;
        } catch (const Error& e) {
            out.error = e;
            return out;
        }
    }
    return out;
}

ReplayOutcome journal_replay(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ReplayOutcome out;
        out.error = Error(ErrorCode::JournalIo, "cannot open " + path.string());
        return out;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return journal_replay_text(buf.str());
}

}  // namespace ractdas
