#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "ractdas/client.hpp"
#include "ractdas/service.hpp"
#include "support/registry_fixture.hpp"

using namespace ractdas;
using namespace ractdas::testing;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

const TagId kTag = TagId::parse("0F0184F07A");

struct Running {
    ManualClock clock;
    Registry reg{fast_config(), clock.fn()};
    HttpApi http{reg};
    WireServer wire{reg};
    Address http_addr, wire_addr;

    Running() {
        reg.bootstrap_operator("op", "operator-pw");
        http_addr.port = http.start("127.0.0.1", 0);
        wire_addr.port = wire.start("127.0.0.1", 0);
    }
};

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::MalformedMessage;
}

}  // namespace

TEST_CASE("addresses") {
    CHECK(parse_address("127.0.0.1:8080").port == 8080);
    CHECK(parse_address(":9").host == "127.0.0.1");
    CHECK(parse_address("example.org:1").host == "example.org");
    CHECK(code_of([] { parse_address("nohost"); }) == ErrorCode::MalformedMessage);
    CHECK(code_of([] { parse_address("h:99999"); }) == ErrorCode::MalformedMessage);
    CHECK(code_of([] { parse_address("h:12x"); }) == ErrorCode::MalformedMessage);
}

TEST_CASE("status mapping") {
    CHECK(http_status(ErrorCode::BadCredentials) == 401);
    CHECK(http_status(ErrorCode::SessionExpired) == 401);
    CHECK(http_status(ErrorCode::NotAuthorized) == 403);
    CHECK(http_status(ErrorCode::RoleViolation) == 403);
    CHECK(http_status(ErrorCode::UnknownTag) == 404);
    CHECK(http_status(ErrorCode::NoOpenReport) == 404);
    CHECK(http_status(ErrorCode::AlreadyReported) == 409);
    CHECK(http_status(ErrorCode::DuplicateTag) == 409);
    CHECK(http_status(ErrorCode::WeakPassword) == 400);
    CHECK(http_status(ErrorCode::InvalidTagId) == 400);
}

TEST_CASE("HTTP API flows through the client") {
    Running r;
    HttpClient op(r.http_addr);
    CHECK(code_of([&] { op.login("op", "wrong-password"); }) == ErrorCode::BadCredentials);
    const Session s = op.login("op", "operator-pw");
    CHECK(s.role == Role::Operator);

    CHECK(op.register_user("alice", "s3cretpw!", Role::Owner).role == Role::Owner);
    CHECK(code_of([&] { op.register_user("alice", "s3cretpw!", Role::Owner); }) == ErrorCode::DuplicateLogin);
    CHECK(code_of([&] { op.register_user("carol", "ab", Role::Owner); }) == ErrorCode::WeakPassword);
    CHECK(op.register_tag("alice", kTag).status == TagStatus::Clear);
    CHECK(code_of([&] { op.register_tag("op", TagId::parse("DEADBEEF00")); }) == ErrorCode::RoleViolation);

    HttpClient alice(r.http_addr);
    alice.login("alice", "s3cretpw!");
    CHECK(alice.tag(kTag).owner_login == "alice");
    CHECK(alice.report_stolen(kTag).open());
    CHECK(alice.server_event_id() == 1);
    CHECK(code_of([&] { alice.report_stolen(kTag); }) == ErrorCode::AlreadyReported);
    CHECK(code_of([&] { alice.report_stolen(TagId::parse("DEADBEEF00")); }) == ErrorCode::UnknownTag);
    CHECK(code_of([&] { alice.release_gate("CP1"); }) == ErrorCode::NotAuthorized);

    // Check-post exchange over TCP.
    WireClient node(r.wire_addr);
    CHECK(node.exchange("DETECT CP1 0F0184F07A") == "CODE A");
    CHECK(node.request(wire::Echo{'A'}) == wire::Message{wire::Ack{}});
    CHECK(node.exchange("ECHO A") == "ERR ProtocolOrderViolation");

    CHECK(code_of([&] { op.release_gate("CP1"); }) == ErrorCode::GateHoldsStolenTag);
    CHECK_FALSE(alice.clear_report(kTag).open());
    CHECK(code_of([&] { alice.clear_report(kTag); }) == ErrorCode::NoOpenReport);
    CHECK(op.release_gate("CP1").gate == GatePosition::Open);

    const EventPage page = op.events(0);
    REQUIRE(page.events.size() == 4);
    CHECK(page.events[1].kind == EventKind::Detection);
    CHECK(page.events[1].verdict == Verdict::Arrest);
    CHECK(page.events[1].checkpost_id == "CP1");
    CHECK(page.events[3].kind == EventKind::GateReleased);
    CHECK(page.server_event_id == 4);
    CHECK(op.events(3).events.size() == 1);

    alice.change_password("s3cretpw!", "n3w-password");
    HttpClient again(r.http_addr);
    CHECK(code_of([&] { again.login("alice", "s3cretpw!"); }) == ErrorCode::BadCredentials);
    CHECK_NOTHROW(again.login("alice", "n3w-password"));

    r.clock.advance(31min);
    CHECK(code_of([&] { alice.tag(kTag); }) == ErrorCode::SessionExpired);
}

TEST_CASE("raw HTTP bodies") {
    Running r;
    httplib::Client c(r.http_addr.host, r.http_addr.port);

    auto res = c.Post("/login", R"({"login":"op","password":"operator-pw"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json login = json::parse(res->body);
    CHECK(login.contains("token"));
    CHECK(login["server_event_id"] == 0);
    const httplib::Headers auth{{"Authorization", "Bearer " + login["token"].get<std::string>()}};

    res = c.Post("/login", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"] == "MalformedMessage");

    res = c.Post("/users", R"({"login":"x","password":"password-1","role":"OWNER"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 403);
    const json err = json::parse(res->body);
    CHECK(err["error"] == "NotAuthorized");
    CHECK(err.contains("message"));
    CHECK(err.contains("server_event_id"));

    res = c.Get("/tags/0F0184F07A", auth);
    REQUIRE(res);
    CHECK(res->status == 404);
    res = c.Get("/tags/ZZZ", auth);
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(json::parse(res->body)["error"] == "InvalidTagId");

    res = c.Post("/users", auth, R"({"login":"x","password":"password-1","role":"KING"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = c.Get("/events?since=abc");
    REQUIRE(res);
    CHECK(res->status == 400);
}

TEST_CASE("long-poll returns as soon as an event lands") {
    Running r;
    HttpClient op(r.http_addr);
    op.login("op", "operator-pw");
    op.register_user("alice", "s3cretpw!", Role::Owner);
    op.register_tag("alice", kTag);

    std::thread writer([&] {
        std::this_thread::sleep_for(100ms);
        r.reg.report_stolen(op.token(), kTag);
    });
    const auto start = std::chrono::steady_clock::now();
    const EventPage page = op.events(0, 10s);
    writer.join();
    REQUIRE(page.events.size() == 1);
    CHECK(page.events[0].kind == EventKind::ReportOpened);
    CHECK(std::chrono::steady_clock::now() - start < 5s);
}

TEST_CASE("concurrent check-post connections") {
    Running r;
    std::vector<std::thread> nodes;
    std::atomic<int> acks{0};
    for (int i = 0; i < 8; ++i) {
        nodes.emplace_back([&, i] {
            WireClient node(r.wire_addr);
            for (int k = 0; k < 20; ++k) {
                const std::string tag = TagId::from_value(static_cast<std::uint64_t>(i * 100 + k)).str();
                const std::string code = node.exchange("DETECT CP" + std::to_string(i) + " " + tag);
                if (node.exchange("ECHO " + code.substr(5)) == "ACK") acks.fetch_add(1);
            }
        });
    }
    for (auto& t : nodes) t.join();
    CHECK(acks.load() == 160);
    CHECK(r.reg.high_water() == 160);
}

TEST_CASE("unreachable registry") {
    Address dead;
    {
        Running r;
        dead = r.http_addr;
    }
    HttpClient c(dead, 500ms);
    CHECK(code_of([&] { c.login("op", "operator-pw"); }) == ErrorCode::RegistryUnreachable);
    Address dead_wire;
    {
        Running r;
        dead_wire = r.wire_addr;
    }
    CHECK(code_of([&] { WireClient w(dead_wire, 500ms); }) == ErrorCode::RegistryUnreachable);
}
