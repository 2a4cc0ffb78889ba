#pragma once

// Central theft registry: user and tag databases, theft reports, the
// ARREST/GO decision, echo verification of check-post exchanges, and the
// event feed consoles poll.
//
// All mutations go through one mutex and are journaled before they are
// applied, so the observable behaviour is linearizable and the journal
// replays to the same state (see journal.hpp).

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ractdas/checkpost.hpp"
#include "ractdas/password.hpp"
#include "ractdas/sim_time.hpp"
#include "ractdas/tag_id.hpp"

namespace ractdas {

enum class Role { Owner, Operator };
enum class TagStatus { Clear, ReportedStolen };

// Strict arrests unregistered tags as well as reported ones. Lenient lets
// unknown tags through and only stops reported cars.
enum class Policy { Strict, Lenient };

std::string_view role_name(Role r) noexcept;
std::optional<Role> role_from_name(std::string_view s) noexcept;
std::string_view status_name(TagStatus s) noexcept;
std::string_view policy_name(Policy p) noexcept;
std::optional<Policy> policy_from_name(std::string_view s) noexcept;

struct UserAccount {
    std::string login;
    PasswordDigest password;
    Role role = Role::Owner;
    std::set<TagId> owned_tags;

    friend bool operator==(const UserAccount&, const UserAccount&) = default;
};

struct TagRecord {
    TagId tag;
    std::string owner_login;
    SimTime registered_at;
    TagStatus status = TagStatus::Clear;

    friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

struct TheftReport {
    TagId tag;
    std::string reported_by;
    SimTime opened_at;
    std::optional<SimTime> closed_at;
    std::optional<std::string> closed_by;

    bool open() const noexcept { return !closed_at.has_value(); }
    friend bool operator==(const TheftReport&, const TheftReport&) = default;
};

enum class EventKind { Detection, ReportOpened, ReportCleared, GateReleased };

std::string_view event_kind_name(EventKind k) noexcept;

// One entry of the append-only feed. A detection event carries the verdict
// sent to the check-post and whether the node echoed it back correctly.
struct RegistryEvent {
    std::uint64_t event_id = 0;
    SimTime at;
    EventKind kind = EventKind::Detection;
    std::string checkpost_id;            // Detection, GateReleased
    std::optional<TagId> tag;            // Detection, Report*
    std::optional<Verdict> verdict;      // Detection
    bool echo_ok = false;                // Detection
    std::string actor;                   // Report*, GateReleased

    friend bool operator==(const RegistryEvent&, const RegistryEvent&) = default;
};

// Server-side view of a check-post gate, derived from finalized detections
// and releases.
struct GateView {
    GatePosition gate = GatePosition::Open;
    std::optional<TagId> held_tag;

    friend bool operator==(const GateView&, const GateView&) = default;
};

// Everything that persists. Sessions and in-flight exchanges are not part
// of it.
struct RegistryState {
    std::map<std::string, UserAccount> users;
    std::map<TagId, TagRecord> tags;
    std::vector<TheftReport> reports;
    std::vector<RegistryEvent> events;
    std::map<std::string, GateView> gates;
    std::uint64_t last_seq = 0;

    std::uint64_t high_water() const noexcept { return events.empty() ? 0 : events.back().event_id; }
    const TheftReport* open_report(const TagId& tag) const noexcept;

    friend bool operator==(const RegistryState&, const RegistryState&) = default;
};

// Verdict for `tag` against `state`. Total and pure.
DecisionCode decide(const RegistryState& state, const TagId& tag, Policy policy);

struct RegistryConfig {
    Policy policy = Policy::Strict;
    int max_retries = 3;
    SimDuration session_ttl = std::chrono::minutes(30);
    int kdf_iterations = 20000;
    std::size_t min_password_length = 8;
};

using RegistryClock = std::function<SimTime()>;

// Wall clock expressed as SimTime since the Unix epoch.
SimTime wall_clock_now();

struct Session {
    std::string token;
    std::string login;
    Role role = Role::Owner;
    SimTime expires_at;
};

struct JournalRecord;

struct EchoReply {
    bool ack = false;
    DecisionCode code = DecisionCode::go();   // code to resend when !ack
    bool finalized = false;                   // exchange closed by this echo
};

class Registry {
public:
    explicit Registry(RegistryConfig config = {}, RegistryClock clock = wall_clock_now);
    Registry(RegistryConfig config, RegistryClock clock, RegistryState initial);

    // Replays `journal` if it exists (throws Error(CorruptRecord) on a bad
    // record) and appends every later mutation to it.
    Registry(RegistryConfig config, RegistryClock clock, const std::filesystem::path& journal);

    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;

    const RegistryConfig& config() const noexcept { return config_; }

    // Creates the first operator. Only allowed while no accounts exist.
    UserAccount bootstrap_operator(const std::string& login, const std::string& password);

    Session login(const std::string& login, const std::string& password);
    void change_password(const std::string& token, const std::string& old_password,
                         const std::string& new_password);

    UserAccount register_user(const std::string& token, const std::string& login,
                              const std::string& password, Role role);
    TagRecord register_tag(const std::string& token, const std::string& owner_login, const TagId& tag);
    TheftReport report_stolen(const std::string& token, const TagId& tag);
    TheftReport clear_report(const std::string& token, const TagId& tag);
    GateView release_gate(const std::string& token, const std::string& checkpost_id);

    // Owners see their own tags only.
    TagRecord tag_record(const std::string& token, const TagId& tag) const;
    std::optional<Session> session(const std::string& token) const;

    DecisionCode decide(const TagId& tag) const;

    // Check-post exchange. A repeated detect for the tag already in flight
    // resends the same code; a detect for a different tag abandons the old
    // exchange (finalized with echo_ok = false).
    DecisionCode handle_detect(const std::string& checkpost_id, const TagId& tag);
    // Throws ProtocolOrderViolation when nothing is outstanding.
    EchoReply handle_echo(const std::string& checkpost_id, std::uint8_t echoed_byte);

    std::vector<RegistryEvent> events_since(std::uint64_t since) const;
    // Blocks up to `wait` for an event newer than `since`.
    std::vector<RegistryEvent> wait_events(std::uint64_t since, std::chrono::milliseconds wait) const;
    std::uint64_t high_water() const;
    std::vector<std::string> checkposts() const;
    GateView gate(const std::string& checkpost_id) const;

    RegistryState snapshot() const;

private:
    struct Exchange {
        TagId tag;
        DecisionCode code;
        SimTime detected_at;
        int mismatches = 0;
    };

    const Session& authenticate(const std::string& token) const;
    const Session& require_operator(const std::string& token) const;
    void commit(JournalRecord record);
    void finalize(const std::string& checkpost_id, const Exchange& ex, bool echo_ok);
    UserAccount make_user(const std::string& login, const std::string& password, Role role);

    RegistryConfig config_;
    RegistryClock clock_;
    mutable std::mutex mu_;
    mutable std::condition_variable events_cv_;
    RegistryState state_;
    std::map<std::string, Session> sessions_;
    std::map<std::string, Exchange> pending_;
    std::optional<std::ofstream> journal_;
};

}  // namespace ractdas
