#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bacip {

using Bytes = std::vector<uint8_t>;
using Hash32 = std::array<uint8_t, 32>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const uint8_t> b) {
    return std::string(b.begin(), b.end());
}

std::string hex_encode(std::span<const uint8_t> data);
std::optional<Bytes> hex_decode(std::string_view hex);

// Standard alphabet with padding; the wire encoding for signatures and keys.
std::string base64_encode(std::span<const uint8_t> data);
std::optional<Bytes> base64_decode(std::string_view text);

// URL-safe alphabet, no padding (JWS segments).
std::string base64url_encode(std::span<const uint8_t> data);
std::optional<Bytes> base64url_decode(std::string_view text);

std::string hash_hex(const Hash32& h);
std::optional<Hash32> hash_from_hex(std::string_view hex);

}  // namespace bacip
