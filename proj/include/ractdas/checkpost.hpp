#pragma once

// Check-post controller.
//
// The node reads tags continuously with its Rx line muxed to the reader.
// On a read it forwards the tag to the server, flips the mux to the server
// link and waits for a one-byte verdict. It echoes the verdict back, and once
// the server acknowledges the echo it drives the gate and returns the mux to
// the reader. Lost or garbled replies are retried; when retries run out the
// gate closes and an alarm is raised.
//
// `step` is a pure function of (state, event, now, config).

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ractdas/error.hpp"
#include "ractdas/sim_time.hpp"
#include "ractdas/tag_id.hpp"

namespace ractdas {

enum class Verdict { Arrest, Go };

class DecisionCode {
public:
    static constexpr std::uint8_t kArrestByte = 0x41;  // 'A'
    static constexpr std::uint8_t kGoByte = 0x47;      // 'G'

    static constexpr DecisionCode arrest() noexcept { return DecisionCode{Verdict::Arrest}; }
    static constexpr DecisionCode go() noexcept { return DecisionCode{Verdict::Go}; }
    static constexpr DecisionCode of(Verdict v) noexcept { return DecisionCode{v}; }
    static std::optional<DecisionCode> from_byte(std::uint8_t byte) noexcept;

    constexpr Verdict verdict() const noexcept { return verdict_; }
    constexpr std::uint8_t wire_byte() const noexcept {
        return verdict_ == Verdict::Arrest ? kArrestByte : kGoByte;
    }
    constexpr char letter() const noexcept { return static_cast<char>(wire_byte()); }

    friend constexpr bool operator==(DecisionCode, DecisionCode) = default;

private:
    constexpr explicit DecisionCode(Verdict v) noexcept : verdict_(v) {}
    Verdict verdict_;
};

std::string_view verdict_name(Verdict v) noexcept;

enum class MuxSource { Reader, Server };
enum class GatePosition { Open, Closed };

std::string_view mux_name(MuxSource m) noexcept;
std::string_view gate_name(GatePosition g) noexcept;

namespace mode {
struct Scanning {
    friend bool operator==(const Scanning&, const Scanning&) = default;
};
// Forwarding and Actuating are passed through inside a single step; a state
// returned from step() is always Scanning, AwaitCode or Echoing.
struct Forwarding {
    TagId tag;
    friend bool operator==(const Forwarding&, const Forwarding&) = default;
};
struct AwaitCode {
    TagId tag;
    friend bool operator==(const AwaitCode&, const AwaitCode&) = default;
};
struct Echoing {
    TagId tag;
    DecisionCode code;
    friend bool operator==(const Echoing&, const Echoing&) = default;
};
struct Actuating {
    DecisionCode code;
    friend bool operator==(const Actuating&, const Actuating&) = default;
};
}  // namespace mode

using NodeMode = std::variant<mode::Scanning, mode::Forwarding, mode::AwaitCode, mode::Echoing,
                              mode::Actuating>;

std::string_view mode_name(const NodeMode& m) noexcept;

struct CheckpostConfig {
    int max_retries = 3;
    SimDuration dedupe_window = std::chrono::seconds(2);
};

struct DedupeMemo {
    TagId tag;
    SimTime accepted_at;
    friend bool operator==(const DedupeMemo&, const DedupeMemo&) = default;
};

struct CheckpostState {
    std::string id;
    NodeMode mode = mode::Scanning{};
    MuxSource mux = MuxSource::Reader;
    GatePosition gate = GatePosition::Open;
    int retries = 0;
    std::optional<DedupeMemo> dedupe;

    static CheckpostState initial(std::string id) {
        CheckpostState s;
        s.id = std::move(id);
        return s;
    }

    friend bool operator==(const CheckpostState&, const CheckpostState&) = default;
};

// Mode/mux coupling: Scanning needs the reader, AwaitCode and Echoing the
// server. Also checks the retry bound.
bool coupling_holds(const CheckpostState& s, const CheckpostConfig& config) noexcept;

namespace event {
struct TagScanned {
    TagId tag;
};
struct ServerByte {
    std::uint8_t byte;
};
struct AckReceived {};
struct ResendReceived {
    DecisionCode code;
};
struct Timeout {};
struct OperatorRelease {};
}  // namespace event

using NodeEvent = std::variant<event::TagScanned, event::ServerByte, event::AckReceived,
                               event::ResendReceived, event::Timeout, event::OperatorRelease>;

std::string describe(const NodeEvent& e);

namespace action {
struct SendToServer {
    TagId tag;
    friend bool operator==(const SendToServer&, const SendToServer&) = default;
};
struct SelectMux {
    MuxSource source;
    friend bool operator==(const SelectMux&, const SelectMux&) = default;
};
struct SendEcho {
    DecisionCode code;
    friend bool operator==(const SendEcho&, const SendEcho&) = default;
};
struct CloseGate {
    friend bool operator==(const CloseGate&, const CloseGate&) = default;
};
struct KeepGateOpen {
    friend bool operator==(const KeepGateOpen&, const KeepGateOpen&) = default;
};
struct OpenGate {
    friend bool operator==(const OpenGate&, const OpenGate&) = default;
};
struct RaiseAlarm {
    std::string reason;
    friend bool operator==(const RaiseAlarm&, const RaiseAlarm&) = default;
};
}  // namespace action

using NodeAction = std::variant<action::SendToServer, action::SelectMux, action::SendEcho,
                                action::CloseGate, action::KeepGateOpen, action::OpenGate,
                                action::RaiseAlarm>;

std::string describe(const NodeAction& a);

// CloseGate or KeepGateOpen: the verdict being carried out.
bool is_gate_actuation(const NodeAction& a) noexcept;

struct StepFault {
    ErrorCode code;   // UnknownCodeByte
    std::uint8_t byte;
};

struct StepResult {
    CheckpostState state;
    std::vector<NodeAction> actions;
    bool suppressed = false;            // TagScanned dropped by the dedupe window
    std::optional<StepFault> fault;     // recoverable protocol fault that took the retry path
};

enum class DedupeDecision { Accept, Suppress };

DedupeDecision dedupe_filter(const CheckpostState& state, const TagId& tag, SimTime now,
                             const CheckpostConfig& config = {});

// Throws Error(IllegalEvent) when the event cannot arrive on the currently
// selected mux source: TagScanned needs the reader; ServerByte, AckReceived
// and ResendReceived need the server link.
StepResult step(const CheckpostState& state, const NodeEvent& event, SimTime now,
                const CheckpostConfig& config = {});

}  // namespace ractdas
