#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace ractdas {

// The 40-bit identity stored on a passive tag, written as ten uppercase hex
// digits. Ordering is numeric, which coincides with lexicographic order of
// the canonical text.
class TagId {
public:
    static constexpr int kDigits = 10;
    static constexpr int kBits = 40;
    static constexpr std::uint64_t kMaxValue = (std::uint64_t{1} << kBits) - 1;

    // Accepts upper or lower case; throws Error(InvalidTagId).
    static TagId parse(std::string_view text);
    static TagId from_value(std::uint64_t value);

    TagId() = default;   // 0000000000

    std::uint64_t value() const noexcept { return value_; }
    std::string str() const;

    // Bit `index` counted from the most significant of the 40 (index 0).
    bool bit(int index) const noexcept { return (value_ >> (kBits - 1 - index)) & 1U; }

    friend auto operator<=>(const TagId&, const TagId&) = default;

private:
    explicit TagId(std::uint64_t v) : value_(v) {}
    std::uint64_t value_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const TagId& t) { return os << t.str(); }

// Wire alphabet: ASCII '0'-'9' and 'A'-'F' only.
bool is_wire_hex(std::uint8_t byte) noexcept;

}  // namespace ractdas

template <>
struct std::hash<ractdas::TagId> {
    std::size_t operator()(const ractdas::TagId& t) const noexcept {
        return std::hash<std::uint64_t>{}(t.value());
    }
};
