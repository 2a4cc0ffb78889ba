#include "ractdas/registry.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "ractdas/error.hpp"
#include "ractdas/journal.hpp"

namespace ractdas {

namespace {

bool valid_login(const std::string& login) {
    return !login.empty() && login.size() <= 64 &&
           std::all_of(login.begin(), login.end(), [](unsigned char c) { return std::isgraph(c) != 0; });
}

}  // namespace

std::string_view role_name(Role r) noexcept { return r == Role::Owner ? "OWNER" : "OPERATOR"; }

std::optional<Role> role_from_name(std::string_view s) noexcept {
    if (s == "OWNER") return Role::Owner;
    if (s == "OPERATOR") return Role::Operator;
    return std::nullopt;
}

std::string_view status_name(TagStatus s) noexcept {
    return s == TagStatus::Clear ? "CLEAR" : "REPORTED_STOLEN";
}

std::string_view policy_name(Policy p) noexcept { return p == Policy::Strict ? "STRICT" : "LENIENT"; }

std::optional<Policy> policy_from_name(std::string_view s) noexcept {
    if (s == "STRICT") return Policy::Strict;
    if (s == "LENIENT") return Policy::Lenient;
    return std::nullopt;
}

std::string_view event_kind_name(EventKind k) noexcept {
    switch (k) {
        case EventKind::Detection: return "detection";
        case EventKind::ReportOpened: return "report_opened";
        case EventKind::ReportCleared: return "report_cleared";
        case EventKind::GateReleased: return "gate_released";
    }
    return "unknown";
}

const TheftReport* RegistryState::open_report(const TagId& tag) const noexcept {
    for (auto it = reports.rbegin(); it != reports.rend(); ++it) {
        if (it->tag == tag && it->open()) return &*it;
    }
    return nullptr;
}

DecisionCode decide(const RegistryState& state, const TagId& tag, Policy policy) {
    const auto it = state.tags.find(tag);
    if (it == state.tags.end()) {
        return policy == Policy::Strict ? DecisionCode::arrest() : DecisionCode::go();
    }
    return it->second.status == TagStatus::ReportedStolen ? DecisionCode::arrest() : DecisionCode::go();
}

SimTime wall_clock_now() {
    const auto since_epoch = std::chrono::system_clock::now().time_since_epoch();
    return SimTime{std::chrono::duration_cast<SimDuration>(since_epoch)};
}

Registry::Registry(RegistryConfig config, RegistryClock clock)
    : config_(config), clock_(std::move(clock)) {}

Registry::Registry(RegistryConfig config, RegistryClock clock, RegistryState initial)
    : config_(config), clock_(std::move(clock)), state_(std::move(initial)) {}

Registry::Registry(RegistryConfig config, RegistryClock clock, const std::filesystem::path& journal)
    : config_(config), clock_(std::move(clock)) {
    if (std::filesystem::exists(journal)) {
        ReplayOutcome replay = journal_replay(journal);
        if (replay.error) throw *replay.error;
        state_ = std::move(replay.state);
    }
    journal_.emplace(journal, std::ios::app | std::ios::binary);
    if (!*journal_) fail(ErrorCode::JournalIo, "cannot open journal " + journal.string() + " for append");
}

void Registry::commit(JournalRecord record) {
    record.seq = state_.last_seq + 1;
    record.ts = clock_();
    if (journal_) {
        *journal_ << to_line(record) << '\n';
        journal_->flush();
        if (!*journal_) fail(ErrorCode::JournalIo, "journal write failed");
    }
    try {
        apply_record(state_, record);
    } catch (const Error& e) {
        // Callers validate first; reaching this is a bug.
        throw std::logic_error(std::string("validated record failed to apply: ") + e.what());
    }
    events_cv_.notify_all();
}

const Session& Registry::authenticate(const std::string& token) const {
    const auto it = sessions_.find(token);
    if (it == sessions_.end()) fail(ErrorCode::NotAuthorized, "no such session");
    if (clock_() >= it->second.expires_at) fail(ErrorCode::SessionExpired, "session expired");
    return it->second;
}

const Session& Registry::require_operator(const std::string& token) const {
    const Session& s = authenticate(token);
    if (s.role != Role::Operator) fail(ErrorCode::NotAuthorized, "operator role required");
    return s;
}

UserAccount Registry::make_user(const std::string& login, const std::string& password, Role role) {
    if (!valid_login(login)) fail(ErrorCode::MalformedMessage, "login must be 1-64 printable characters");
    if (state_.users.contains(login)) fail(ErrorCode::DuplicateLogin, "login '" + login + "' is taken");
    if (password.size() < config_.min_password_length) {
        fail(ErrorCode::WeakPassword, "password shorter than " + std::to_string(config_.min_password_length));
    }
    commit({0, {}, record::RegisterUser{login, role, make_password_digest(password, config_.kdf_iterations)}});
    return state_.users.at(login);
}

UserAccount Registry::bootstrap_operator(const std::string& login, const std::string& password) {
    std::lock_guard lock(mu_);
    if (!state_.users.empty()) fail(ErrorCode::NotAuthorized, "bootstrap only allowed on an empty registry");
    return make_user(login, password, Role::Operator);
}

Session Registry::login(const std::string& login, const std::string& password) {
    std::lock_guard lock(mu_);
    const auto it = state_.users.find(login);
    if (it == state_.users.end() || !verify_password(password, it->second.password)) {
        fail(ErrorCode::BadCredentials, "wrong login or password");
    }
    const SimTime now = clock_();
    std::erase_if(sessions_, [&](const auto& kv) { return now >= kv.second.expires_at; });
    Session s{random_hex(16), login, it->second.role, now + config_.session_ttl};
    sessions_[s.token] = s;
    return s;
}

void Registry::change_password(const std::string& token, const std::string& old_password,
                               const std::string& new_password) {
    std::lock_guard lock(mu_);
    const Session& s = authenticate(token);
    const UserAccount& user = state_.users.at(s.login);
    if (!verify_password(old_password, user.password)) fail(ErrorCode::BadCredentials, "old password mismatch");
    if (new_password.size() < config_.min_password_length) {
        fail(ErrorCode::WeakPassword, "password shorter than " + std::to_string(config_.min_password_length));
    }
    commit({0, {}, record::ChangePassword{s.login, make_password_digest(new_password, config_.kdf_iterations)}});
}

UserAccount Registry::register_user(const std::string& token, const std::string& login,
                                    const std::string& password, Role role) {
    std::lock_guard lock(mu_);
    require_operator(token);
    return make_user(login, password, role);
}

TagRecord Registry::register_tag(const std::string& token, const std::string& owner_login, const TagId& tag) {
    std::lock_guard lock(mu_);
    const Session& actor = authenticate(token);
    const auto owner = state_.users.find(owner_login);
    if (owner == state_.users.end()) fail(ErrorCode::UnknownOwner, "no account '" + owner_login + "'");
    if (owner->second.role != Role::Owner) fail(ErrorCode::RoleViolation, "operators cannot own tags");
    if (actor.role != Role::Operator && actor.login != owner_login) {
        fail(ErrorCode::NotAuthorized, "owners may only register their own tags");
    }
    if (state_.tags.contains(tag)) fail(ErrorCode::DuplicateTag, tag.str() + " is already registered");
    commit({0, {}, record::RegisterTag{tag, owner_login}});
    return state_.tags.at(tag);
}

TheftReport Registry::report_stolen(const std::string& token, const TagId& tag) {
    std::lock_guard lock(mu_);
    const Session& actor = authenticate(token);
    const auto it = state_.tags.find(tag);
    if (it == state_.tags.end()) fail(ErrorCode::UnknownTag, tag.str() + " is not registered");
    if (actor.role != Role::Operator && it->second.owner_login != actor.login) {
        fail(ErrorCode::NotAuthorized, "only the owner or an operator may report " + tag.str());
    }
    if (state_.open_report(tag)) fail(ErrorCode::AlreadyReported, tag.str() + " already has an open report");
    commit({0, {}, record::ReportStolen{tag, actor.login}});
    return *state_.open_report(tag);
}

TheftReport Registry::clear_report(const std::string& token, const TagId& tag) {
    std::lock_guard lock(mu_);
    const Session& actor = authenticate(token);
    const auto it = state_.tags.find(tag);
    if (it == state_.tags.end()) fail(ErrorCode::UnknownTag, tag.str() + " is not registered");
    if (actor.role != Role::Operator && it->second.owner_login != actor.login) {
        fail(ErrorCode::NotAuthorized, "only the owner or an operator may clear " + tag.str());
    }
    if (!state_.open_report(tag)) fail(ErrorCode::NoOpenReport, tag.str() + " has no open report");
    commit({0, {}, record::ClearReport{tag, actor.login}});
    for (auto r = state_.reports.rbegin(); r != state_.reports.rend(); ++r) {
        if (r->tag == tag) return *r;
    }
    throw std::logic_error("cleared report vanished");
}

GateView Registry::release_gate(const std::string& token, const std::string& checkpost_id) {
    std::lock_guard lock(mu_);
    const Session& actor = require_operator(token);
    if (checkpost_id.empty()) fail(ErrorCode::MalformedMessage, "empty checkpost id");
    if (const auto g = state_.gates.find(checkpost_id); g != state_.gates.end() && g->second.held_tag) {
        if (state_.open_report(*g->second.held_tag)) {
            fail(ErrorCode::GateHoldsStolenTag,
                 checkpost_id + " holds " + g->second.held_tag->str() + " which is still reported stolen");
        }
    }
    commit({0, {}, record::Release{checkpost_id, actor.login}});
    return state_.gates.at(checkpost_id);
}

TagRecord Registry::tag_record(const std::string& token, const TagId& tag) const {
    std::lock_guard lock(mu_);
    const Session& actor = authenticate(token);
    const auto it = state_.tags.find(tag);
    if (it == state_.tags.end()) fail(ErrorCode::UnknownTag, tag.str() + " is not registered");
    if (actor.role != Role::Operator && it->second.owner_login != actor.login) {
        fail(ErrorCode::NotAuthorized, "not your tag");
    }
    return it->second;
}

std::optional<Session> Registry::session(const std::string& token) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(token);
    if (it == sessions_.end() || clock_() >= it->second.expires_at) return std::nullopt;
    return it->second;
}

DecisionCode Registry::decide(const TagId& tag) const {
    std::lock_guard lock(mu_);
    return ractdas::decide(state_, tag, config_.policy);
}

void Registry::finalize(const std::string& checkpost_id, const Exchange& ex, bool echo_ok) {
    commit({0, {}, record::Detection{checkpost_id, ex.tag, ex.code.verdict(), echo_ok, ex.detected_at}});
    pending_.erase(checkpost_id);
}

DecisionCode Registry::handle_detect(const std::string& checkpost_id, const TagId& tag) {
    std::lock_guard lock(mu_);
    if (checkpost_id.empty()) fail(ErrorCode::MalformedMessage, "empty checkpost id");
    if (const auto it = pending_.find(checkpost_id); it != pending_.end()) {
        if (it->second.tag == tag) return it->second.code;
        const Exchange abandoned = it->second;
        finalize(checkpost_id, abandoned, false);
    }
    const DecisionCode code = ractdas::decide(state_, tag, config_.policy);
    pending_.insert_or_assign(checkpost_id, Exchange{tag, code, clock_(), 0});
    return code;
}

EchoReply Registry::handle_echo(const std::string& checkpost_id, std::uint8_t echoed_byte) {
    std::lock_guard lock(mu_);
    const auto it = pending_.find(checkpost_id);
    if (it == pending_.end()) {
        fail(ErrorCode::ProtocolOrderViolation, "echo from " + checkpost_id + " with no outstanding detect");
    }
    Exchange& ex = it->second;
    if (echoed_byte == ex.code.wire_byte()) {
        const Exchange done = ex;
        finalize(checkpost_id, done, true);
        return {true, done.code, true};
    }
    if (++ex.mismatches > config_.max_retries) {
        const Exchange done = ex;
        finalize(checkpost_id, done, false);
        return {false, done.code, true};
    }
    return {false, ex.code, false};
}

std::vector<RegistryEvent> Registry::events_since(std::uint64_t since) const {
    std::lock_guard lock(mu_);
    std::vector<RegistryEvent> out;
    for (const auto& e : state_.events) {
        if (e.event_id > since) out.push_back(e);
    }
    return out;
}

std::vector<RegistryEvent> Registry::wait_events(std::uint64_t since, std::chrono::milliseconds wait) const {
    {
        std::unique_lock lock(mu_);
        events_cv_.wait_for(lock, wait, [&] { return state_.high_water() > since; });
    }
    return events_since(since);
}

std::uint64_t Registry::high_water() const {
    std::lock_guard lock(mu_);
    return state_.high_water();
}

std::vector<std::string> Registry::checkposts() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, view] : state_.gates) out.push_back(id);
    return out;
}

GateView Registry::gate(const std::string& checkpost_id) const {
    std::lock_guard lock(mu_);
    const auto it = state_.gates.find(checkpost_id);
    return it == state_.gates.end() ? GateView{} : it->second;
}

RegistryState Registry::snapshot() const {
    std::lock_guard lock(mu_);
    return state_;
}

}  // namespace ractdas
