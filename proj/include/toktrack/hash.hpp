#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace toktrack {

// Lowercase hex SHA-1 of the given bytes.
std::string sha1_hex(std::string_view bytes);

// Converts the base36 digest form used by wiki dumps (up to 31 chars,
// case-insensitive, may omit leading zeros) to 40-char lowercase hex.
// Throws std::invalid_argument on characters outside [0-9a-z] or overflow.
std::string sha1_base36_to_hex(std::string_view base36);

// 64-bit FNV-1a, the seedless content hash used for index keys.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);

}  // namespace toktrack
