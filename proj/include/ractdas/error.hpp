#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ractdas {

// Every domain failure carries one of these codes. The CLI maps them to exit
// code 1 and the HTTP API to an error body; the names are part of that wire
// contract and must stay stable.
enum class ErrorCode {
    InvalidTagId,
    BadStartByte,
    BadStopByte,
    NonHexPayload,
    FramingError,
    LengthError,
    IllegalEvent,
    UnknownCodeByte,
    DuplicateLogin,
    WeakPassword,
    UnknownUser,
    UnknownOwner,
    DuplicateTag,
    RoleViolation,
    NotAuthorized,
    UnknownTag,
    AlreadyReported,
    NoOpenReport,
    GateHoldsStolenTag,
    ProtocolOrderViolation,
    MalformedMessage,
    BadCredentials,
    SessionExpired,
    CorruptRecord,
    JournalIo,
    ScenarioInvalid,
    RegistryUnreachable,
};

std::string_view error_name(ErrorCode code) noexcept;
std::optional<ErrorCode> error_from_name(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::int64_t> position = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

    // Group index for FramingError, 1-based line number for CorruptRecord.
    std::optional<std::int64_t> position() const noexcept { return position_; }

private:
    ErrorCode code_;
    std::optional<std::int64_t> position_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message,
                       std::optional<std::int64_t> position = std::nullopt);

}  // namespace ractdas
