#include "toktrack/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace toktrack {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

std::string to_hex(const unsigned char* data, std::size_t len) {
  std::string out(len * 2, '0');
  for (std::size_t i = 0; i < len; ++i) {
    out[i * 2] = kHexDigits[data[i] >> 4];
    out[i * 2 + 1] = kHexDigits[data[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha1_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha1(), nullptr)) {
    throw std::runtime_error("sha1 digest failed");
  }
  return to_hex(digest, len);
}

std::string sha1_base36_to_hex(std::string_view base36) {
  if (base36.empty() || base36.size() > 31) {
    throw std::invalid_argument("bad base36 digest: " + std::string(base36));
  }
  std::array<unsigned char, 20> value{};
  for (char c : base36) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'z') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'Z') digit = c - 'A' + 10;
    else throw std::invalid_argument("bad base36 digest: " + std::string(base36));
    unsigned carry = static_cast<unsigned>(digit);
    for (int i = 19; i >= 0; --i) {
      unsigned v = value[static_cast<std::size_t>(i)] * 36u + carry;
      value[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v & 0xff);
      carry = v >> 8;
    }
    if (carry != 0) throw std::invalid_argument("base36 digest overflow: " + std::string(base36));
  }
  return to_hex(value.data(), value.size());
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace toktrack
