#include "doctest.h"
#include "ractdas/wire.hpp"
#include "support/registry_fixture.hpp"

using namespace ractdas;
using namespace ractdas::testing;

namespace {

const TagId kTag = TagId::parse("0F0184F07A");

}  // namespace

TEST_CASE("message formats") {
    CHECK(wire::format(wire::Detect{"CP1", kTag}) == "DETECT CP1 0F0184F07A");
    CHECK(wire::format(wire::Code{'A'}) == "CODE A");
    CHECK(wire::format(wire::Echo{'G'}) == "ECHO G");
    CHECK(wire::format(wire::Ack{}) == "ACK");
    CHECK(wire::format(wire::Resend{'G'}) == "RESEND G");
    CHECK(wire::format(wire::Err{ErrorCode::ProtocolOrderViolation}) == "ERR ProtocolOrderViolation");
}

TEST_CASE("parse inverts format for every code octet except newline") {
    for (int b = 0; b < 256; ++b) {
        if (b == '\n') continue;
        const auto byte = static_cast<std::uint8_t>(b);
        for (const wire::Message& m : {wire::Message{wire::Code{byte}}, wire::Message{wire::Echo{byte}},
                                      wire::Message{wire::Resend{byte}}}) {
            CHECK(wire::parse(wire::format(m)) == m);
        }
    }
    const wire::Message d = wire::Detect{"north-gate", TagId::parse("DEADBEEF00")};
    CHECK(wire::parse(wire::format(d) + "\r\n") == d);
    CHECK(wire::parse("ACK\n") == wire::Message{wire::Ack{}});
}

TEST_CASE("malformed lines") {
    for (const char* line : {"", "HELLO", "ACK extra", "CODE", "CODE AG", "CODEA", "DETECT CP1",
                             "DETECT CP1 0f0184f07a", "DETECT CP1 0F0184F07", "DETECT  0F0184F07A",
                             "DETECT CP1 0F0184F07A X", "ERR NoSuchError"}) {
        CAPTURE(line);
        try {
            wire::parse(line);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedMessage);
        }
    }
}

TEST_CASE("server lines become node events") {
    auto ev = wire::to_node_event(wire::Code{0x58});
    REQUIRE(ev);
    CHECK(std::get<event::ServerByte>(*ev).byte == 0x58);
    CHECK(std::holds_alternative<event::AckReceived>(*wire::to_node_event(wire::Ack{})));
    ev = wire::to_node_event(wire::Resend{'A'});
    REQUIRE(ev);
    CHECK(std::get<event::ResendReceived>(*ev).code == DecisionCode::arrest());
    CHECK_FALSE(wire::to_node_event(wire::Resend{'a'}));
    CHECK_FALSE(wire::to_node_event(wire::Err{ErrorCode::ProtocolOrderViolation}));
    CHECK_FALSE(wire::to_node_event(wire::Detect{"CP1", kTag}));
}

TEST_CASE("server session") {
    ManualClock clock;
    Registry reg(fast_config(), clock.fn());
    const Populated p = populate(reg);
    wire::Session s(reg);

    CHECK(s.handle("ECHO G") == "ERR ProtocolOrderViolation");
    CHECK(s.handle("CODE G") == "ERR MalformedMessage");
    CHECK(s.handle("garbage") == "ERR MalformedMessage");
    CHECK(s.handle("DETECT CP1 0F0184F07A") == "CODE G");
    CHECK(s.checkpost() == "CP1");
    CHECK(s.handle("ECHO A") == "RESEND G");
    CHECK(s.handle("ECHO G") == "ACK");

    reg.report_stolen(p.alice, kTag);
    CHECK(s.handle("DETECT CP1 0F0184F07A") == "CODE A");
    CHECK(s.handle("ECHO A") == "ACK");
    CHECK(s.handle("DETECT CP1 DEADBEEF00") == "CODE A");
}
