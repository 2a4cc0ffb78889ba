#include "ractdas/frame_codec.hpp"

#include <cctype>
#include <cstdio>
#include <string_view>

namespace ractdas {

Frame encode_frame(const TagId& tag) {
    Frame f{};
    f.front() = kFrameStart;
    const std::string digits = tag.str();
    for (std::size_t i = 0; i < digits.size(); ++i) {
        f[i + 1] = static_cast<std::uint8_t>(digits[i]);
    }
    f.back() = kFrameStop;
    return f;
}

TagId decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kFrameSize) {
        fail(ErrorCode::LengthError, "frame must be 12 bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes.front() != kFrameStart) fail(ErrorCode::BadStartByte, "first byte is not 0x0A");
    if (bytes.back() != kFrameStop) fail(ErrorCode::BadStopByte, "last byte is not 0x0D");
    std::string digits;
    digits.reserve(TagId::kDigits);
    for (std::size_t i = 1; i + 1 < kFrameSize; ++i) {
        if (!is_wire_hex(bytes[i])) {
            fail(ErrorCode::NonHexPayload, "payload byte " + std::to_string(i) + " is not 0-9A-F");
        }
        digits.push_back(static_cast<char>(bytes[i]));
    }
    return TagId::parse(digits);
}

BitStream::BitStream(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b &= 1U;
}

BitStream BitStream::parse(std::string_view text) {
    std::vector<std::uint8_t> bits;
    for (char c : text) {
        if (c == '0' || c == '1') {
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            fail(ErrorCode::MalformedMessage, std::string("unexpected character '") + c + "' in bit string");
        }
    }
    return BitStream{std::move(bits)};
}

std::string BitStream::str(char separator) const {
    std::string out;
    out.reserve(bits_.size() + bits_.size() / kBitsPerChar);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (separator != '\0' && i > 0 && i % kBitsPerChar == 0) out.push_back(separator);
        out.push_back(static_cast<char>('0' + bits_[i]));
    }
    return out;
}

BitStream encode_uart(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> bits;
    bits.reserve(bytes.size() * kBitsPerChar);
    for (std::uint8_t byte : bytes) {
        bits.push_back(0);
        for (int k = 0; k < 8; ++k) bits.push_back((byte >> k) & 1U);
        bits.push_back(1);
    }
    return BitStream{std::move(bits)};
}

std::vector<std::uint8_t> decode_uart(const BitStream& stream) {
    if (stream.size() % kBitsPerChar != 0) {
        fail(ErrorCode::LengthError,
             "bit count " + std::to_string(stream.size()) + " is not a multiple of 10");
    }
    const auto bits = stream.bits();
    std::vector<std::uint8_t> out;
    out.reserve(bits.size() / kBitsPerChar);
    for (std::size_t g = 0; g < bits.size() / kBitsPerChar; ++g) {
        const auto group = bits.subspan(g * kBitsPerChar, kBitsPerChar);
        if (group[0] != 0 || group[9] != 1) {
            fail(ErrorCode::FramingError, "bad start/stop bit in group " + std::to_string(g),
                 static_cast<std::int64_t>(g));
        }
        std::uint8_t byte = 0;
        for (int k = 0; k < 8; ++k) byte |= static_cast<std::uint8_t>(group[1 + k] << k);
        out.push_back(byte);
    }
    return out;
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
    std::string out;
    char buf[4];
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%02X", bytes[i]);
        if (i > 0) out.push_back(' ');
        out += buf;
    }
    return out;
}

ScanResult scan_stream(std::span<const std::uint8_t> buffer, ScannerState& state) {
    ScanResult result;
    auto& partial = state.partial;

    auto drop_candidate = [&](ErrorCode code, std::uint64_t offset) {
        result.errors.push_back({code, offset});
        result.skipped += partial.size();
        partial.clear();
    };

    for (std::uint8_t byte : buffer) {
        const std::uint64_t offset = state.consumed++;
        if (partial.empty()) {
            if (byte == kFrameStart) {
                partial.push_back(byte);
            } else {
                ++result.skipped;
            }
            continue;
        }

        if (partial.size() < kFrameSize - 1) {
            if (is_wire_hex(byte)) {
                partial.push_back(byte);
            } else if (byte == kFrameStart) {
                drop_candidate(ErrorCode::NonHexPayload, offset);
                partial.push_back(byte);
            } else {
                drop_candidate(byte == kFrameStop ? ErrorCode::BadStopByte : ErrorCode::NonHexPayload,
                               offset);
                ++result.skipped;
            }
            continue;
        }

        // Eleven bytes held: this one must be the stop byte.
        if (byte == kFrameStop) {
            partial.push_back(byte);
            result.tags.push_back(decode_frame(partial));
            partial.clear();
            ++state.frames;
        } else if (byte == kFrameStart) {
            drop_candidate(ErrorCode::BadStopByte, offset);
            partial.push_back(byte);
        } else {
            drop_candidate(ErrorCode::BadStopByte, offset);
            ++result.skipped;
        }
    }
    state.skipped += result.skipped;
    return result;
}

}  // namespace ractdas
