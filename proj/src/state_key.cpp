#include "gigpo/state_key.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace gigpo {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

StateKey::StateKey(std::string b) : bytes(std::move(b)), hash(fnv1a64(bytes)) {}

void KeyEncoder::prefix(std::uint8_t len) {
    buf_.push_back(static_cast<char>(len));
}

KeyEncoder& KeyEncoder::field_u8(std::uint8_t v) {
    prefix(1);
    buf_.push_back(static_cast<char>(v));
    return *this;
}

KeyEncoder& KeyEncoder::field_u32(std::uint32_t v) {
    prefix(4);
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return *this;
}

KeyEncoder& KeyEncoder::field_u64(std::uint64_t v) {
    prefix(8);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return *this;
}

KeyEncoder& KeyEncoder::field_bytes(std::string_view v) {
    if (v.size() > 255) throw std::length_error("KeyEncoder: field exceeds 255 bytes");
    prefix(static_cast<std::uint8_t>(v.size()));
    buf_.append(v);
    return *this;
}

KeyEncoder& KeyEncoder::field_u32_set(std::vector<std::uint32_t> values) {
    std::sort(values.begin(), values.end());
    if (values.size() * 4 > 255) throw std::length_error("KeyEncoder: set field exceeds 255 bytes");
    prefix(static_cast<std::uint8_t>(values.size() * 4));
    for (std::uint32_t v : values)
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return *this;
}

std::string to_hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("from_hex: odd-length input");
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("from_hex: non-hex character");
        out.push_back(static_cast<char>((hi << 4) | lo));
    }
    return out;
}

}  // namespace gigpo
