#include "ractdas/checkpost.hpp"

#include <cstdio>

namespace ractdas {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string byte_hex(std::uint8_t b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", b);
    return buf;
}

bool needs_reader(const NodeEvent& e) noexcept { return std::holds_alternative<event::TagScanned>(e); }

bool needs_server(const NodeEvent& e) noexcept {
    return std::holds_alternative<event::ServerByte>(e) || std::holds_alternative<event::AckReceived>(e) ||
           std::holds_alternative<event::ResendReceived>(e);
}

// Consumes one retry. Returns false when the budget is already spent.
bool take_retry(CheckpostState& s, const CheckpostConfig& config) {
    if (s.retries >= config.max_retries) return false;
    ++s.retries;
    return true;
}

void fail_secure(StepResult& r) {
    r.state.gate = GatePosition::Closed;
    r.state.mode = mode::Scanning{};
    r.state.mux = MuxSource::Reader;
    r.state.retries = 0;
    r.actions.emplace_back(action::CloseGate{});
    r.actions.emplace_back(action::RaiseAlarm{"fail-secure"});
    r.actions.emplace_back(action::SelectMux{MuxSource::Reader});
}

void actuate(StepResult& r, DecisionCode code) {
    r.state.mode = mode::Actuating{code};
    if (code.verdict() == Verdict::Arrest) {
        r.state.gate = GatePosition::Closed;
        r.actions.emplace_back(action::CloseGate{});
    } else {
        r.actions.emplace_back(action::KeepGateOpen{});
    }
    r.state.mode = mode::Scanning{};
    r.state.mux = MuxSource::Reader;
    r.state.retries = 0;
    r.actions.emplace_back(action::SelectMux{MuxSource::Reader});
}

}  // namespace

std::optional<DecisionCode> DecisionCode::from_byte(std::uint8_t byte) noexcept {
    if (byte == kArrestByte) return arrest();
    if (byte == kGoByte) return go();
    return std::nullopt;
}

std::string_view verdict_name(Verdict v) noexcept { return v == Verdict::Arrest ? "ARREST" : "GO"; }
std::string_view mux_name(MuxSource m) noexcept { return m == MuxSource::Reader ? "READER" : "SERVER"; }
std::string_view gate_name(GatePosition g) noexcept { return g == GatePosition::Open ? "OPEN" : "CLOSED"; }

std::string_view mode_name(const NodeMode& m) noexcept {
    return std::visit(overloaded{
                          [](const mode::Scanning&) { return std::string_view("SCANNING"); },
                          [](const mode::Forwarding&) { return std::string_view("FORWARDING"); },
                          [](const mode::AwaitCode&) { return std::string_view("AWAIT_CODE"); },
                          [](const mode::Echoing&) { return std::string_view("ECHOING"); },
                          [](const mode::Actuating&) { return std::string_view("ACTUATING"); },
                      },
                      m);
}

bool coupling_holds(const CheckpostState& s, const CheckpostConfig& config) noexcept {
    if (s.retries < 0 || s.retries > config.max_retries) return false;
    if (std::holds_alternative<mode::Scanning>(s.mode)) return s.mux == MuxSource::Reader;
    if (std::holds_alternative<mode::AwaitCode>(s.mode) || std::holds_alternative<mode::Echoing>(s.mode)) {
        return s.mux == MuxSource::Server;
    }
    return false;  // transient modes never rest
}

std::string describe(const NodeEvent& e) {
    return std::visit(overloaded{
                          [](const event::TagScanned& t) { return "TagScanned(" + t.tag.str() + ")"; },
                          [](const event::ServerByte& b) { return "ServerByte(" + byte_hex(b.byte) + ")"; },
                          [](const event::AckReceived&) { return std::string("AckReceived"); },
                          [](const event::ResendReceived& r) {
                              return std::string("ResendReceived(") + r.code.letter() + ")";
                          },
                          [](const event::Timeout&) { return std::string("Timeout"); },
                          [](const event::OperatorRelease&) { return std::string("OperatorRelease"); },
                      },
                      e);
}

std::string describe(const NodeAction& a) {
    return std::visit(overloaded{
                          [](const action::SendToServer& s) { return "SendToServer(" + s.tag.str() + ")"; },
                          [](const action::SelectMux& m) {
                              return "SelectMux(" + std::string(mux_name(m.source)) + ")";
                          },
                          [](const action::SendEcho& s) { return std::string("SendEcho(") + s.code.letter() + ")"; },
                          [](const action::CloseGate&) { return std::string("CloseGate"); },
                          [](const action::KeepGateOpen&) { return std::string("KeepGateOpen"); },
                          [](const action::OpenGate&) { return std::string("OpenGate"); },
                          [](const action::RaiseAlarm& r) { return "RaiseAlarm(" + r.reason + ")"; },
                      },
                      a);
}

bool is_gate_actuation(const NodeAction& a) noexcept {
    return std::holds_alternative<action::CloseGate>(a) || std::holds_alternative<action::KeepGateOpen>(a);
}

DedupeDecision dedupe_filter(const CheckpostState& state, const TagId& tag, SimTime now,
                             const CheckpostConfig& config) {
    if (state.dedupe && state.dedupe->tag == tag && now - state.dedupe->accepted_at < config.dedupe_window) {
        return DedupeDecision::Suppress;
    }
    return DedupeDecision::Accept;
}

StepResult step(const CheckpostState& state, const NodeEvent& ev, SimTime now, const CheckpostConfig& config) {
    if ((needs_reader(ev) && state.mux != MuxSource::Reader) ||
        (needs_server(ev) && state.mux != MuxSource::Server)) {
        fail(ErrorCode::IllegalEvent, describe(ev) + " while " + std::string(mode_name(state.mode)) +
                                          " with mux on " + std::string(mux_name(state.mux)));
    }

    StepResult r{state, {}, false, std::nullopt};
    CheckpostState& s = r.state;

    if (std::holds_alternative<event::OperatorRelease>(ev)) {
        if (s.gate == GatePosition::Closed) {
            s.gate = GatePosition::Open;
            r.actions.emplace_back(action::OpenGate{});
        }
        return r;
    }

    if (std::holds_alternative<mode::Scanning>(s.mode)) {
        // Only a tag read does anything here; a late timer is stale.
        if (const auto* scan = std::get_if<event::TagScanned>(&ev)) {
            if (dedupe_filter(s, scan->tag, now, config) == DedupeDecision::Suppress) {
                r.suppressed = true;
                return r;
            }
            s.dedupe = DedupeMemo{scan->tag, now};
            s.mode = mode::Forwarding{scan->tag};
            r.actions.emplace_back(action::SendToServer{scan->tag});
            s.mux = MuxSource::Server;
            r.actions.emplace_back(action::SelectMux{MuxSource::Server});
            s.retries = 0;
            s.mode = mode::AwaitCode{scan->tag};
        }
        return r;
    }

    if (const auto* await = std::get_if<mode::AwaitCode>(&s.mode)) {
        const TagId tag = await->tag;
        if (const auto* b = std::get_if<event::ServerByte>(&ev)) {
            if (const auto code = DecisionCode::from_byte(b->byte)) {
                s.mode = mode::Echoing{tag, *code};
                r.actions.emplace_back(action::SendEcho{*code});
                return r;
            }
            r.fault = StepFault{ErrorCode::UnknownCodeByte, b->byte};
        } else if (!std::holds_alternative<event::Timeout>(ev)) {
            return r;  // ack/resend with nothing echoed yet: ignore, the timer recovers
        }
        if (!take_retry(s, config)) {
            fail_secure(r);
            return r;
        }
        r.actions.emplace_back(action::SendToServer{tag});
        return r;
    }

    if (const auto* echo = std::get_if<mode::Echoing>(&s.mode)) {
        const DecisionCode code = echo->code;
        const TagId tag = echo->tag;
        if (std::holds_alternative<event::AckReceived>(ev)) {
            actuate(r, code);
            return r;
        }
        if (const auto* resend = std::get_if<event::ResendReceived>(&ev)) {
            if (!take_retry(s, config)) {
                fail_secure(r);
                return r;
            }
            s.mode = mode::Echoing{tag, resend->code};
            r.actions.emplace_back(action::SendEcho{resend->code});
            return r;
        }
        if (std::holds_alternative<event::Timeout>(ev)) {
            if (!take_retry(s, config)) {
                fail_secure(r);
                return r;
            }
            r.actions.emplace_back(action::SendEcho{code});
            return r;
        }
        return r;  // duplicate verdict byte after a re-forward
    }

    return r;
}

}  // namespace ractdas
