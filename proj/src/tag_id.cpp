#include "ractdas/tag_id.hpp"

#include <cctype>

#include "ractdas/error.hpp"

namespace ractdas {

namespace {

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

}  // namespace

bool is_wire_hex(std::uint8_t byte) noexcept {
    return (byte >= '0' && byte <= '9') || (byte >= 'A' && byte <= 'F');
}

TagId TagId::parse(std::string_view text) {
    if (text.size() != kDigits) {
        fail(ErrorCode::InvalidTagId,
             "expected 10 hex digits, got " + std::to_string(text.size()) + " characters");
    }
    std::uint64_t v = 0;
    for (char c : text) {
        const int d = hex_value(c);
        if (d < 0) fail(ErrorCode::InvalidTagId, "non-hex character in '" + std::string(text) + "'");
        v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    return TagId{v};
}

TagId TagId::from_value(std::uint64_t value) {
    if (value > kMaxValue) fail(ErrorCode::InvalidTagId, "value exceeds 40 bits");
    return TagId{value};
}

std::string TagId::str() const {
    static constexpr char kDigitChars[] = "0123456789ABCDEF";
    std::string out(kDigits, '0');
    std::uint64_t v = value_;
    for (int i = kDigits - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigitChars[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace ractdas
