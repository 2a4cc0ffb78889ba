#pragma once

// Reader serial protocol.
//
// A tag read leaves the reader as 12 printable bytes:
//
//   [0x0A] [ten ASCII hex digits of the tag] [0x0D]
//
// and every byte travels as an 8N1 UART character: start bit 0, eight data
// bits least significant first, stop bit 1. A frame is therefore 120 bits.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ractdas/error.hpp"
#include "ractdas/tag_id.hpp"

namespace ractdas {

inline constexpr std::uint8_t kFrameStart = 0x0A;
inline constexpr std::uint8_t kFrameStop = 0x0D;
inline constexpr std::size_t kFrameSize = 12;
inline constexpr std::size_t kBitsPerChar = 10;

using Frame = std::array<std::uint8_t, kFrameSize>;

Frame encode_frame(const TagId& tag);

// Throws Error with BadStartByte, BadStopByte, NonHexPayload, or LengthError
// when the input is not 12 bytes.
TagId decode_frame(std::span<const std::uint8_t> bytes);

// Sequence of binary symbols, one per element, each 0 or 1.
class BitStream {
public:
    BitStream() = default;
    explicit BitStream(std::vector<std::uint8_t> bits);

    // Parses '0'/'1' characters; whitespace is ignored.
    static BitStream parse(std::string_view text);

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    void flip(std::size_t i) { bits_.at(i) ^= 1U; }

    // 10-bit character groups separated by `separator` (none when '\0').
    std::string str(char separator = ' ') const;

    friend bool operator==(const BitStream&, const BitStream&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

BitStream encode_uart(std::span<const std::uint8_t> bytes);

// Throws LengthError when the length is not a multiple of 10 and
// FramingError (position = group index) on a bad start or stop bit.
std::vector<std::uint8_t> decode_uart(const BitStream& bits);

std::string hex_dump(std::span<const std::uint8_t> bytes);

struct ScanError {
    ErrorCode code;           // NonHexPayload or BadStopByte
    std::uint64_t offset;     // absolute stream offset of the offending byte
};

// Incremental frame scanner state. Holds at most one partial frame.
struct ScannerState {
    std::vector<std::uint8_t> partial;
    std::uint64_t consumed = 0;   // bytes fed so far
    std::uint64_t skipped = 0;    // bytes that ended up outside any valid frame
    std::uint64_t frames = 0;
};

struct ScanResult {
    std::vector<TagId> tags;
    std::vector<ScanError> errors;
    std::uint64_t skipped = 0;    // skipped during this call
};

// Finds every well-formed frame in `buffer`, carrying partial frames across
// calls. A malformed candidate is reported and dropped; scanning resumes at
// the next start byte.
ScanResult scan_stream(std::span<const std::uint8_t> buffer, ScannerState& state);

}  // namespace ractdas
