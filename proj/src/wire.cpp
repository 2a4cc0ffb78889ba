#include "ractdas/wire.hpp"

#include <algorithm>
#include <cctype>

#include "ractdas/registry.hpp"

namespace ractdas::wire {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void malformed(std::string_view line, const char* why) {
    fail(ErrorCode::MalformedMessage, std::string(why) + ": '" + std::string(line) + "'");
}

std::string with_byte(std::string_view verb, std::uint8_t b) {
    std::string s(verb);
    s.push_back(' ');
    s.push_back(static_cast<char>(b));
    return s;
}

// "VERB x" with exactly one octet after the space.
std::optional<std::uint8_t> byte_arg(std::string_view line, std::string_view verb) {
    if (line.size() != verb.size() + 2 || line.substr(0, verb.size()) != verb || line[verb.size()] != ' ') {
        return std::nullopt;
    }
    return static_cast<std::uint8_t>(line.back());
}

}  // namespace

bool valid_checkpost_id(std::string_view id) noexcept {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isgraph(c) != 0; });
}

std::string format(const Message& m) {
    return std::visit(overloaded{
                          [](const Detect& d) { return "DETECT " + d.checkpost + " " + d.tag.str(); },
                          [](const Echo& e) { return with_byte("ECHO", e.code); },
                          [](const Code& c) { return with_byte("CODE", c.code); },
                          [](const Ack&) { return std::string("ACK"); },
                          [](const Resend& r) { return with_byte("RESEND", r.code); },
                          [](const Err& e) { return "ERR " + std::string(error_name(e.code)); },
                      },
                      m);
}

Message parse(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (line.find('\n') != std::string_view::npos) malformed(line, "embedded newline");

    // The octet may itself be '\r', so try these before dropping a CR.
    for (int pass = 0; pass < 2; ++pass) {
        if (auto b = byte_arg(line, "CODE")) return Code{*b};
        if (auto b = byte_arg(line, "ECHO")) return Echo{*b};
        if (auto b = byte_arg(line, "RESEND")) return Resend{*b};
        if (pass == 0 && !line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        } else {
            break;
        }
    }
    if (line == "ACK") return Ack{};
    if (line.starts_with("ERR ")) {
        const auto code = error_from_name(line.substr(4));
        if (!code) malformed(line, "unknown error name");
        return Err{*code};
    }
    if (line.starts_with("DETECT ")) {
        const std::string_view rest = line.substr(7);
        const auto sp = rest.find(' ');
        if (sp == std::string_view::npos) malformed(line, "DETECT needs a check-post and a tag");
        const std::string_view cp = rest.substr(0, sp);
        const std::string_view tag = rest.substr(sp + 1);
        if (!valid_checkpost_id(cp)) malformed(line, "bad check-post id");
        if (tag.size() != TagId::kDigits ||
            !std::all_of(tag.begin(), tag.end(), [](char c) { return is_wire_hex(static_cast<std::uint8_t>(c)); })) {
            malformed(line, "tag must be ten uppercase hex digits");
        }
        return Detect{std::string(cp), TagId::parse(tag)};
    }
    malformed(line, "unknown message");
}

std::optional<NodeEvent> to_node_event(const Message& m) {
    if (const auto* c = std::get_if<Code>(&m)) return event::ServerByte{c->code};
    if (std::holds_alternative<Ack>(m)) return event::AckReceived{};
    if (const auto* r = std::get_if<Resend>(&m)) {
        if (const auto code = DecisionCode::from_byte(r->code)) return event::ResendReceived{*code};
    }
    return std::nullopt;
}

Message Session::handle(const Message& request) {
    try {
        if (const auto* d = std::get_if<Detect>(&request)) {
            checkpost_ = d->checkpost;
            return Code{registry_.handle_detect(d->checkpost, d->tag).wire_byte()};
        }
        if (const auto* e = std::get_if<Echo>(&request)) {
            if (!checkpost_) return Err{ErrorCode::ProtocolOrderViolation};
            const EchoReply r = registry_.handle_echo(*checkpost_, e->code);
            if (r.ack) return Ack{};
            return Resend{r.code.wire_byte()};
        }
        return Err{ErrorCode::MalformedMessage};
    } catch (const Error& e) {
        return Err{e.code()};
    }
}

std::string Session::handle(std::string_view line) {
    try {
        return format(handle(parse(line)));
    } catch (const Error& e) {
        return format(Err{e.code()});
    }
}

}  // namespace ractdas::wire
