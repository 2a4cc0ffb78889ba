#include <bitset>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "ractdas/frame_codec.hpp"

using namespace ractdas;

namespace {

using Bytes = std::vector<std::uint8_t>;

const Bytes kReferenceFrame{0x0A, 0x30, 0x46, 0x30, 0x31, 0x38, 0x34, 0x46, 0x30, 0x37, 0x41, 0x0D};

// Frozen from the bit-reversal oracle below (reverse the MSB-first binary of
// each byte, wrap in start 0 / stop 1).
const char* kReferenceFrameBits =
    "0010100001 0000011001 0011000101 0000011001 0100011001 0000111001 "
    "0001011001 0011000101 0000011001 0111011001 0100000101 0101100001";

std::string reversal_oracle(const Bytes& bytes) {
    std::string out;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        std::string msb_first = std::bitset<8>(bytes[i]).to_string();
        if (i > 0) out += ' ';
        out += '0' + std::string(msb_first.rbegin(), msb_first.rend()) + '1';
    }
    return out;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidTagId;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<int> byte(0, 255);
    Bytes out(len(rng));
    for (auto& b : out) b = static_cast<std::uint8_t>(byte(rng));
    return out;
}

TagId random_tag(std::mt19937_64& rng) {
    return TagId::from_value(rng() & TagId::kMaxValue);
}

}  // namespace

TEST_CASE("TagId parsing normalizes case and rejects bad input") {
    CHECK(TagId::parse("0f0184f07a").str() == "0F0184F07A");
    CHECK(TagId::parse("0F0184F07A").value() == 0x0F0184F07AULL);
    CHECK(code_of([] { TagId::parse("0F0184F07"); }) == ErrorCode::InvalidTagId);
    CHECK(code_of([] { TagId::parse("0F0184F07G"); }) == ErrorCode::InvalidTagId);
    CHECK(code_of([] { TagId::from_value(TagId::kMaxValue + 1); }) == ErrorCode::InvalidTagId);
    CHECK(TagId::parse("0000000001") < TagId::parse("00000000A0"));
}

TEST_CASE("encode_frame matches the reader's published byte sequence") {
    const Frame f = encode_frame(TagId::parse("0F0184F07A"));
    CHECK(Bytes(f.begin(), f.end()) == kReferenceFrame);

    const Frame zeros = encode_frame(TagId::parse("0000000000"));
    const Frame ones = encode_frame(TagId::parse("FFFFFFFFFF"));
    CHECK(zeros.front() == 0x0A);
    CHECK(zeros.back() == 0x0D);
    CHECK(ones.front() == 0x0A);
    CHECK(ones.back() == 0x0D);
    for (std::size_t i = 1; i <= 10; ++i) {
        CHECK(zeros[i] == 0x30);
        CHECK(ones[i] == 0x46);
    }
}

TEST_CASE("decode_frame inverts encoding and classifies malformed frames") {
    CHECK(decode_frame(kReferenceFrame).str() == "0F0184F07A");

    Bytes swapped = kReferenceFrame;
    std::swap(swapped.front(), swapped.back());
    CHECK(code_of([&] { decode_frame(swapped); }) == ErrorCode::BadStartByte);

    Bytes bad_stop = kReferenceFrame;
    bad_stop.back() = 0x0A;
    CHECK(code_of([&] { decode_frame(bad_stop); }) == ErrorCode::BadStopByte);

    Bytes g_payload = kReferenceFrame;
    g_payload[4] = 'G';
    CHECK(code_of([&] { decode_frame(g_payload); }) == ErrorCode::NonHexPayload);

    Bytes lower = kReferenceFrame;
    lower[2] = 'f';
    CHECK(code_of([&] { decode_frame(lower); }) == ErrorCode::NonHexPayload);

    CHECK(code_of([&] { decode_frame(Bytes(11, 0x30)); }) == ErrorCode::LengthError);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const TagId t = random_tag(rng);
        CHECK(decode_frame(encode_frame(t)) == t);
    }
}

TEST_CASE("encode_uart emits LSB-first 8N1 groups") {
    CHECK(encode_uart(Bytes{}).empty());
    CHECK(encode_uart(Bytes{0x0A}).str() == "0010100001");
    CHECK(reversal_oracle(Bytes{0x0A}) == "0010100001");

    const BitStream stream = encode_uart(kReferenceFrame);
    CHECK(stream.size() == 120);
    CHECK(stream.str() == kReferenceFrameBits);
    CHECK(reversal_oracle(kReferenceFrame) == kReferenceFrameBits);

    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const Bytes b = random_bytes(rng, 40);
        CHECK(encode_uart(b).str() == reversal_oracle(b));
    }
}

TEST_CASE("decode_uart inverts encoding and reports framing faults") {
    CHECK(decode_uart(BitStream::parse("0 01010000 1")) == Bytes{0x0A});

    BitStream s = encode_uart(kReferenceFrame);
    s.flip(20);  // start bit of group 2
    const Error err = [&] {
        try {
            decode_uart(s);
        } catch (const Error& e) {
            return e;
        }
        return Error(ErrorCode::InvalidTagId, "no throw");
    }();
    CHECK(err.code() == ErrorCode::FramingError);
    CHECK(err.position() == 2);

    CHECK(code_of([] { decode_uart(BitStream::parse("001010000")); }) == ErrorCode::LengthError);
    CHECK(code_of([] { decode_uart(BitStream::parse("0010100000")); }) == ErrorCode::FramingError);

    std::mt19937_64 rng(13);
    for (int i = 0; i < 2000; ++i) {
        const Bytes b = random_bytes(rng, 64);
        const BitStream bits = encode_uart(b);
        REQUIRE(bits.size() == 10 * b.size());
        for (std::size_t g = 0; g < b.size(); ++g) {
            CHECK(bits[10 * g] == 0);
            CHECK(bits[10 * g + 9] == 1);
        }
        CHECK(decode_uart(bits) == b);
        CHECK(encode_uart(decode_uart(bits)) == bits);
    }
}

TEST_CASE("single bit flips of a frame never alias to the same payload") {
    const BitStream clean = encode_uart(kReferenceFrame);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        BitStream flipped = clean;
        flipped.flip(i);
        try {
            const Bytes decoded = decode_uart(flipped);
            CHECK(decoded != kReferenceFrame);
            std::optional<TagId> tag;
            try {
                tag = decode_frame(decoded);
            } catch (const Error&) {
                // rejected by the frame grammar
            }
            CHECK(tag != TagId::parse("0F0184F07A"));
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::FramingError);
        }
    }
}

TEST_CASE("scan_stream: concatenation, splits and garbage") {
    const TagId a = TagId::parse("0F0184F07A");
    const TagId b = TagId::parse("DEADBEEF00");
    const Frame fa = encode_frame(a);
    const Frame fb = encode_frame(b);

    SUBCASE("back-to-back frames") {
        Bytes buf(fa.begin(), fa.end());
        buf.insert(buf.end(), fb.begin(), fb.end());
        ScannerState st;
        const ScanResult r = scan_stream(buf, st);
        CHECK(r.tags == std::vector<TagId>{a, b});
        CHECK(r.errors.empty());
        CHECK(r.skipped == 0);
    }

    SUBCASE("frame split at byte 6") {
        ScannerState st;
        const Bytes buf(fa.begin(), fa.end());
        const auto head = std::span(buf).first(6);
        const auto tail = std::span(buf).subspan(6);
        CHECK(scan_stream(head, st).tags.empty());
        CHECK(st.partial.size() == 6);
        CHECK(scan_stream(tail, st).tags == std::vector<TagId>{a});
        CHECK(st.partial.empty());
    }

    SUBCASE("leading garbage byte") {
        Bytes buf{0xFF};
        buf.insert(buf.end(), fa.begin(), fa.end());
        ScannerState st;
        const ScanResult r = scan_stream(buf, st);
        CHECK(r.tags == std::vector<TagId>{a});
        CHECK(r.skipped == 1);
        CHECK(r.errors.empty());
    }

    SUBCASE("malformed candidates resynchronize at the next start byte") {
        Bytes buf{0x0A, '1', '2', 'x', 'y'};          // non-hex after start
        buf.insert(buf.end(), {0x0A, '1', '2', 0x0D});  // premature stop
        buf.insert(buf.end(), {0x0A, '3'});             // interrupted by a new start
        buf.insert(buf.end(), fb.begin(), fb.end());
        ScannerState st;
        const ScanResult r = scan_stream(buf, st);
        CHECK(r.tags == std::vector<TagId>{b});
        REQUIRE(r.errors.size() == 3);
        CHECK(r.errors[0].code == ErrorCode::NonHexPayload);
        CHECK(r.errors[0].offset == 3);
        CHECK(r.errors[1].code == ErrorCode::BadStopByte);
        CHECK(r.errors[2].code == ErrorCode::NonHexPayload);
        CHECK(r.skipped == buf.size() - kFrameSize);
    }

    SUBCASE("eleven hex bytes then a non-stop byte") {
        Bytes buf(fa.begin(), fa.end() - 1);
        buf.push_back('5');
        ScannerState st;
        const ScanResult r = scan_stream(buf, st);
        CHECK(r.tags.empty());
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].code == ErrorCode::BadStopByte);
        CHECK(st.partial.empty());
    }
}

namespace {

// Whole-buffer reference: every start position whose 12-byte window is a
// well-formed frame.
std::vector<TagId> window_oracle(const Bytes& buf) {
    std::vector<TagId> out;
    for (std::size_t i = 0; i + kFrameSize <= buf.size(); ++i) {
        if (buf[i] != kFrameStart || buf[i + 11] != kFrameStop) continue;
        bool ok = true;
        std::string digits;
        for (std::size_t j = 1; j <= 10; ++j) {
            const char c = static_cast<char>(buf[i + j]);
            ok = ok && ((c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'));
            digits.push_back(c);
        }
        if (ok) out.push_back(TagId::parse(digits));
    }
    return out;
}

}  // namespace

TEST_CASE("scan_stream agrees with the window oracle at every split point") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> garbage_len(0, 5);
    std::uniform_int_distribution<int> any_byte(0, 255);
    const Bytes noisy_alphabet{0x0D, '0', 'A', 'F', '9', 0x41, 0x00, 0xFF};
    std::uniform_int_distribution<std::size_t> pick(0, noisy_alphabet.size() - 1);

    for (int trial = 0; trial < 300; ++trial) {
        Bytes buf;
        std::vector<TagId> expected;
        const int n = static_cast<int>(rng() % 6);
        for (int k = 0; k < n; ++k) {
            for (int g = garbage_len(rng); g > 0; --g) {
                std::uint8_t byte = (rng() & 1) ? noisy_alphabet[pick(rng)]
                                                : static_cast<std::uint8_t>(any_byte(rng));
                if (byte == kFrameStart) byte = 0x0B;
                buf.push_back(byte);
            }
            const TagId t = random_tag(rng);
            expected.push_back(t);
            const Frame f = encode_frame(t);
            buf.insert(buf.end(), f.begin(), f.end());
        }
        // With no 0x0A in the garbage the scanner must find exactly the frames.
        REQUIRE(window_oracle(buf) == expected);

        for (std::size_t split = 0; split <= buf.size(); ++split) {
            ScannerState st;
            auto r1 = scan_stream(std::span(buf).first(split), st);
            auto r2 = scan_stream(std::span(buf).subspan(split), st);
            r1.tags.insert(r1.tags.end(), r2.tags.begin(), r2.tags.end());
            CHECK(r1.tags == expected);
            CHECK(st.skipped + 12 * expected.size() == buf.size());
        }
    }
}

TEST_CASE("scan_stream over unrestricted noise still matches the oracle") {
    std::mt19937_64 rng(19);
    const Bytes alphabet{0x0A, 0x0D, '0', '1', 'A', 'F', 'G', 0xFF};
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        Bytes buf;
        const int len = static_cast<int>(rng() % 80);
        for (int i = 0; i < len; ++i) {
            if (rng() % 10 == 0) {
                const Frame f = encode_frame(random_tag(rng));
                buf.insert(buf.end(), f.begin(), f.end());
            } else {
                buf.push_back(alphabet[pick(rng)]);
            }
        }
        ScannerState st;
        const Bytes::size_type mid = buf.size() / 2;
        auto r1 = scan_stream(std::span(buf).first(mid), st);
        auto r2 = scan_stream(std::span(buf).subspan(mid), st);
        r1.tags.insert(r1.tags.end(), r2.tags.begin(), r2.tags.end());
        CHECK(r1.tags == window_oracle(buf));
        CHECK(st.partial.size() <= kFrameSize - 1);
    }
}
