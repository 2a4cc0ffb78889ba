#pragma once

// Check-post <-> registry line protocol, one message per '\n'-terminated line:
//
//   node -> server   DETECT <checkpost_id> <tag_id>
//   server -> node   CODE <c>
//   node -> server   ECHO <c>
//   server -> node   ACK | RESEND <c>
//   server -> node   ERR <ErrorName>
//
// <c> is a single raw octet. A link fault can turn 'A' into any byte, so
// parsing keeps whatever arrived and leaves validity to the receiver.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ractdas/checkpost.hpp"
#include "ractdas/error.hpp"
#include "ractdas/tag_id.hpp"

namespace ractdas {

class Registry;

namespace wire {

struct Detect {
    std::string checkpost;
    TagId tag;
    friend bool operator==(const Detect&, const Detect&) = default;
};
struct Echo {
    std::uint8_t code;
    friend bool operator==(const Echo&, const Echo&) = default;
};
struct Code {
    std::uint8_t code;
    friend bool operator==(const Code&, const Code&) = default;
};
struct Ack {
    friend bool operator==(const Ack&, const Ack&) = default;
};
struct Resend {
    std::uint8_t code;
    friend bool operator==(const Resend&, const Resend&) = default;
};
struct Err {
    ErrorCode code;
    friend bool operator==(const Err&, const Err&) = default;
};

using Message = std::variant<Detect, Echo, Code, Ack, Resend, Err>;

// Without the trailing newline.
std::string format(const Message& m);
// Accepts the line with or without a trailing "\n" / "\r\n". Throws
// Error(MalformedMessage).
Message parse(std::string_view line);

bool valid_checkpost_id(std::string_view id) noexcept;

// Node side: the event a server line turns into, if any. An unknown RESEND
// byte or an ERR yields nothing; the node's timeout covers it.
std::optional<NodeEvent> to_node_event(const Message& m);

// Server side of one connection. The first DETECT binds the connection to
// its check-post; later DETECTs may rebind.
class Session {
public:
    explicit Session(Registry& registry) : registry_(registry) {}

    // Reply line (no newline) to one request line. Never throws on bad
    // input; errors come back as ERR.
    std::string handle(std::string_view line);
    Message handle(const Message& request);

    const std::optional<std::string>& checkpost() const noexcept { return checkpost_; }

private:
    Registry& registry_;
    std::optional<std::string> checkpost_;
};

}  // namespace wire
}  // namespace ractdas
