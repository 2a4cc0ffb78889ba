#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ractdas/journal.hpp"
#include "support/registry_fixture.hpp"

using namespace ractdas;
using namespace ractdas::testing;

namespace {

const TagId kTag = TagId::parse("0F0184F07A");

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("empty journal replays to an empty registry") {
    const ReplayOutcome r = journal_replay_text("");
    CHECK_FALSE(r.error.has_value());
    CHECK(r.records == 0);
    CHECK(r.state == RegistryState{});
}

TEST_CASE("missing journal file is an I/O error") {
    TempDir dir;
    const ReplayOutcome r = journal_replay(dir.file("absent.jsonl"));
    REQUIRE(r.error.has_value());
    CHECK(r.error->code() == ErrorCode::JournalIo);
}

TEST_CASE("register, tag, report replays to ARREST") {
    TempDir dir;
    const auto path = dir.file("j.jsonl");
    ManualClock clock;
    {
        Registry reg(fast_config(), clock.fn(), path);
        reg.bootstrap_operator("op", "operator-pw");
        const std::string op = reg.login("op", "operator-pw").token;
        reg.register_user(op, "alice", "s3cretpw!", Role::Owner);
        reg.register_tag(op, "alice", kTag);
        reg.report_stolen(op, kTag);
    }
    const ReplayOutcome r = journal_replay(path);
    REQUIRE_FALSE(r.error.has_value());
    CHECK(r.records == 4);
    CHECK(decide(r.state, kTag, Policy::Strict) == DecisionCode::arrest());

    // Reopening continues the sequence and keeps credentials.
    Registry again(fast_config(), clock.fn(), path);
    const std::string alice = again.login("alice", "s3cretpw!").token;
    again.clear_report(alice, kTag);
    const ReplayOutcome r2 = journal_replay(path);
    REQUIRE_FALSE(r2.error.has_value());
    CHECK(r2.records == 5);
    CHECK(r2.state.last_seq == 5);
    CHECK(decide(r2.state, kTag, Policy::Strict) == DecisionCode::go());
}

TEST_CASE("record lines round-trip") {
    JournalRecord rec;
    rec.seq = 7;
    rec.ts = SimTime{SimDuration{1200000000}};
    rec.body = record::ReportStolen{kTag, "alice"};
    const std::string line = to_line(rec);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(line.find("\"type\":\"report_stolen\"") != std::string::npos);
    const JournalRecord back = parse_record(line, 1);
    CHECK(back.seq == 7);
    CHECK(back.ts == rec.ts);
    CHECK(std::get<record::ReportStolen>(back.body).tag == kTag);
}

TEST_CASE("bad records report their line") {
    const std::string good =
        to_line({1, {}, record::RegisterUser{"op", Role::Operator, make_password_digest("operator-pw", 1)}}) + "\n";
    struct Case {
        const char* name;
        std::string second;
    };
    const Case cases[] = {
        {"not json", "{oops\n"},
        {"unknown type", R"({"seq":2,"ts":0,"type":"launch"})" "\n"},
        {"seq gap", R"({"seq":5,"ts":0,"type":"release","checkpost":"CP1","actor":"op"})" "\n"},
        {"bad tag", R"({"seq":2,"ts":0,"type":"report_stolen","tag":"XYZ","actor":"op"})" "\n"},
        {"unknown tag", R"({"seq":2,"ts":0,"type":"report_stolen","tag":"0F0184F07A","actor":"op"})" "\n"},
        {"operator owns tag", R"({"seq":2,"ts":0,"type":"register_tag","tag":"0F0184F07A","owner":"op"})" "\n"},
        {"missing field", R"({"seq":2,"ts":0,"type":"release"})" "\n"},
    };
    for (const Case& c : cases) {
        CAPTURE(c.name);
        const ReplayOutcome r = journal_replay_text(good + c.second);
        REQUIRE(r.error.has_value());
        CHECK(r.error->code() == ErrorCode::CorruptRecord);
        CHECK(r.error->position() == 2);
        CHECK(r.records == 1);
        CHECK(r.state.users.contains("op"));
    }
}

TEST_CASE("replay fixpoint over random operation sequences") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        CAPTURE(seed);
        TempDir dir;
        const auto path = dir.file("j.jsonl");
        ManualClock clock;
        RegistryState live;
        {
            Registry reg(fast_config(seed % 2 ? Policy::Strict : Policy::Lenient), clock.fn(), path);
            random_operations(reg, seed, 150, &clock);
            live = reg.snapshot();
        }
        const ReplayOutcome r = journal_replay(path);
        REQUIRE_FALSE(r.error.has_value());
        CHECK(r.records == live.last_seq);
        CHECK(r.state == live);
    }
}

TEST_CASE("truncation at every byte keeps the committed prefix") {
    TempDir dir;
    const auto path = dir.file("j.jsonl");
    ManualClock clock;
    {
        Registry reg(fast_config(), clock.fn(), path);
        random_operations(reg, 99, 80, &clock);
    }
    const std::string text = slurp(path);
    REQUIRE(!text.empty());

    // Oracle: state after each complete line, by independent prefix replay.
    std::vector<std::size_t> line_ends;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') line_ends.push_back(i + 1);
    }
    std::vector<RegistryState> prefix{RegistryState{}};
    for (std::size_t end : line_ends) {
        const ReplayOutcome r = journal_replay_text(std::string_view(text).substr(0, end));
        REQUIRE_FALSE(r.error.has_value());
        prefix.push_back(r.state);
    }

    for (std::size_t cut = 0; cut <= text.size(); ++cut) {
        const ReplayOutcome r = journal_replay_text(std::string_view(text).substr(0, cut));
        const auto complete = static_cast<std::size_t>(
            std::upper_bound(line_ends.begin(), line_ends.end(), cut) - line_ends.begin());
        const bool on_boundary = cut == 0 || (complete > 0 && line_ends[complete - 1] == cut);
        if (on_boundary) {
            CHECK_FALSE(r.error.has_value());
        } else {
            REQUIRE(r.error.has_value());
            CHECK(r.error->code() == ErrorCode::CorruptRecord);
            CHECK(r.error->position() == static_cast<std::int64_t>(complete + 1));
        }
        CHECK(r.records == complete);
        CHECK(r.state == prefix[complete]);
    }
}

TEST_CASE("a corrupt journal refuses to open") {
    TempDir dir;
    const auto path = dir.file("j.jsonl");
    {
        std::ofstream out(path);
        out << "{\"seq\":1,\"ts\":0,\"type\":\"release\"";
    }
    ManualClock clock;
    try {
        Registry reg(fast_config(), clock.fn(), path);
        FAIL("opened a corrupt journal");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptRecord);
        CHECK(e.position() == 1);
    }
}
