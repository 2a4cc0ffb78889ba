#include "ractdas/endpoint.hpp"

#include "ractdas/journal.hpp"

namespace ractdas {

namespace {

constexpr const char* kSimOperator = "sim-operator";

template <class F>
void tolerate(ErrorCode benign, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        if (e.code() != benign) throw;
    }
}

}  // namespace

LocalEndpoint::LocalEndpoint(RegistryConfig config, RegistryState initial)
    : now_(std::make_shared<SimTime>(kEpoch)), operator_login_(kSimOperator), operator_password_(random_hex(16)) {
    const PasswordDigest digest = make_password_digest(operator_password_, config.kdf_iterations);
    JournalRecord rec;
    rec.seq = initial.last_seq + 1;
    if (const auto it = initial.users.find(operator_login_); it != initial.users.end()) {
        if (it->second.role != Role::Operator) {
            fail(ErrorCode::ScenarioInvalid, std::string(kSimOperator) + " exists but is not an operator");
        }
        rec.body = record::ChangePassword{operator_login_, digest};
    } else {
        rec.body = record::RegisterUser{operator_login_, Role::Operator, digest};
    }
    apply_record(initial, rec);
    release_cursor_ = initial.high_water();
    auto now = now_;
    registry_ = std::make_unique<Registry>(config, [now] { return *now; }, std::move(initial));
}

const std::string& LocalEndpoint::token() {
    // Sessions lapse after 30 simulated minutes; log in afresh each time.
    token_ = registry_->login(operator_login_, operator_password_).token;
    return token_;
}

std::string LocalEndpoint::exchange(const std::string& checkpost_id, const std::string& line) {
    auto it = sessions_.try_emplace(checkpost_id, *registry_).first;
    return it->second.handle(line);
}

void LocalEndpoint::apply(const ScheduledAction& action) {
    switch (action.kind) {
        case ActionKind::ReportStolen: registry_->report_stolen(token(), *action.tag); break;
        case ActionKind::ClearReport: registry_->clear_report(token(), *action.tag); break;
        case ActionKind::OperatorRelease: registry_->release_gate(token(), action.checkpost); break;
    }
}

std::vector<std::string> LocalEndpoint::poll_releases() {
    std::vector<std::string> out;
    for (const auto& e : registry_->events_since(release_cursor_)) {
        if (e.kind == EventKind::GateReleased) out.push_back(e.checkpost_id);
        release_cursor_ = e.event_id;
    }
    return out;
}

void LocalEndpoint::seed_owners(const std::vector<OwnerSpec>& owners) {
    const std::string op = token();
    for (const auto& o : owners) {
        tolerate(ErrorCode::DuplicateLogin, [&] { registry_->register_user(op, o.login, o.password, Role::Owner); });
        for (const auto& t : o.tags) {
            tolerate(ErrorCode::DuplicateTag, [&] { registry_->register_tag(op, o.login, t); });
        }
    }
    release_cursor_ = registry_->high_water();
}

RemoteEndpoint::RemoteEndpoint(RemoteOptions options) : options_(std::move(options)), http_(options_.http) {
    http_.login(options_.operator_login, options_.operator_password);
    release_cursor_ = http_.server_event_id();
}

std::string RemoteEndpoint::exchange(const std::string& checkpost_id, const std::string& line) {
    auto& client = wires_[checkpost_id];
    if (!client) client = std::make_unique<WireClient>(options_.wire);
    return client->exchange(line);
}

void RemoteEndpoint::apply(const ScheduledAction& action) {
    auto run = [&] {
        switch (action.kind) {
            case ActionKind::ReportStolen: http_.report_stolen(*action.tag); break;
            case ActionKind::ClearReport: http_.clear_report(*action.tag); break;
            case ActionKind::OperatorRelease: http_.release_gate(action.checkpost); break;
        }
    };
    try {
        run();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SessionExpired) throw;
        http_.login(options_.operator_login, options_.operator_password);
        run();
    }
}

std::vector<std::string> RemoteEndpoint::poll_releases() {
    std::vector<std::string> out;
    for (const auto& e : http_.events(release_cursor_).events) {
        if (e.kind == EventKind::GateReleased) out.push_back(e.checkpost_id);
        release_cursor_ = e.event_id;
    }
    return out;
}

void RemoteEndpoint::seed_owners(const std::vector<OwnerSpec>& owners) {
    for (const auto& o : owners) {
        tolerate(ErrorCode::DuplicateLogin, [&] { http_.register_user(o.login, o.password, Role::Owner); });
        for (const auto& t : o.tags) tolerate(ErrorCode::DuplicateTag, [&] { http_.register_tag(o.login, t); });
    }
    release_cursor_ = http_.server_event_id();
}

}  // namespace ractdas
