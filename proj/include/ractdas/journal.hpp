#pragma once

// Append-only journal. One JSON object per '\n'-terminated line:
//
//   {"seq":7,"type":"report_stolen","ts":1200000000,"tag":"0F0184F07A","actor":"alice"}
//
// `seq` strictly increases from 1 and `ts` is nanoseconds. A line without its
// terminating newline was never committed and is treated as corrupt.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ractdas/error.hpp"
#include "ractdas/registry.hpp"

namespace ractdas {

namespace record {
struct RegisterUser {
    std::string login;
    Role role;
    PasswordDigest password;
};
struct ChangePassword {
    std::string login;
    PasswordDigest password;
};
struct RegisterTag {
    TagId tag;
    std::string owner;
};
struct ReportStolen {
    TagId tag;
    std::string actor;
};
struct ClearReport {
    TagId tag;
    std::string actor;
};
struct Detection {
    std::string checkpost;
    TagId tag;
    Verdict verdict;
    bool echo_ok;
    SimTime detected_at;
};
struct Release {
    std::string checkpost;
    std::string actor;
};
}  // namespace record

using RecordBody = std::variant<record::RegisterUser, record::ChangePassword, record::RegisterTag,
                                record::ReportStolen, record::ClearReport, record::Detection,
                                record::Release>;

struct JournalRecord {
    std::uint64_t seq = 0;
    SimTime ts;
    RecordBody body;
};

std::string to_line(const JournalRecord& r);   // without trailing newline
// `line_no` is only used for the error position.
JournalRecord parse_record(std::string_view line, std::int64_t line_no);

// Applies one record. Throws Error(CorruptRecord) when the record does not
// fit the state (unknown owner, non-monotone seq, ...); the state is left
// untouched in that case.
void apply_record(RegistryState& state, const JournalRecord& r, std::int64_t line_no = 0);

struct ReplayOutcome {
    RegistryState state;            // everything up to the first bad line
    std::uint64_t records = 0;
    std::optional<Error> error;     // CorruptRecord with the 1-based line number
};

ReplayOutcome journal_replay(const std::filesystem::path& path);
ReplayOutcome journal_replay_text(std::string_view text);

}  // namespace ractdas
