#include "ractdas/error.hpp"

#include <array>
#include <utility>

namespace ractdas {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 27> kNames{{
    {ErrorCode::InvalidTagId, "InvalidTagId"},
    {ErrorCode::BadStartByte, "BadStartByte"},
    {ErrorCode::BadStopByte, "BadStopByte"},
    {ErrorCode::NonHexPayload, "NonHexPayload"},
    {ErrorCode::FramingError, "FramingError"},
    {ErrorCode::LengthError, "LengthError"},
    {ErrorCode::IllegalEvent, "IllegalEvent"},
    {ErrorCode::UnknownCodeByte, "UnknownCodeByte"},
    {ErrorCode::DuplicateLogin, "DuplicateLogin"},
    {ErrorCode::WeakPassword, "WeakPassword"},
    {ErrorCode::UnknownUser, "UnknownUser"},
    {ErrorCode::UnknownOwner, "UnknownOwner"},
    {ErrorCode::DuplicateTag, "DuplicateTag"},
    {ErrorCode::RoleViolation, "RoleViolation"},
    {ErrorCode::NotAuthorized, "NotAuthorized"},
    {ErrorCode::UnknownTag, "UnknownTag"},
    {ErrorCode::AlreadyReported, "AlreadyReported"},
    {ErrorCode::NoOpenReport, "NoOpenReport"},
    {ErrorCode::GateHoldsStolenTag, "GateHoldsStolenTag"},
    {ErrorCode::ProtocolOrderViolation, "ProtocolOrderViolation"},
    {ErrorCode::MalformedMessage, "MalformedMessage"},
    {ErrorCode::BadCredentials, "BadCredentials"},
    {ErrorCode::SessionExpired, "SessionExpired"},
    {ErrorCode::CorruptRecord, "CorruptRecord"},
    {ErrorCode::JournalIo, "JournalIo"},
    {ErrorCode::ScenarioInvalid, "ScenarioInvalid"},
    {ErrorCode::RegistryUnreachable, "RegistryUnreachable"},
}};

}  // namespace

std::string_view error_name(ErrorCode code) noexcept {
    for (const auto& [c, n] : kNames) {
        if (c == code) return n;
    }
    return "Unknown";
}

std::optional<ErrorCode> error_from_name(std::string_view name) noexcept {
    for (const auto& [c, n] : kNames) {
        if (n == name) return c;
    }
    return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::int64_t> position)
    : std::runtime_error(std::string(error_name(code)) + ": " + message),
      code_(code),
      position_(position) {}

void fail(ErrorCode code, const std::string& message, std::optional<std::int64_t> position) {
    throw Error(code, message, position);
}

}  // namespace ractdas
