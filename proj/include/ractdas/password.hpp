#pragma once

#include <string>
#include <string_view>

namespace ractdas {

// Salted PBKDF2-HMAC-SHA256. Hex-encoded so it can live in the journal.
struct PasswordDigest {
    std::string salt_hex;
    std::string digest_hex;
    int iterations = 0;

    friend bool operator==(const PasswordDigest&, const PasswordDigest&) = default;
};

PasswordDigest make_password_digest(std::string_view password, int iterations);
bool verify_password(std::string_view password, const PasswordDigest& digest);

// Hex of `bytes` cryptographically random bytes.
std::string random_hex(std::size_t bytes);

}  // namespace ractdas
