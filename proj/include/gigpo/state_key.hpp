#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gigpo {

// Canonical byte encoding of an environment observation. Keys are the unit
// of anchor-state grouping, so two semantically identical observations must
// produce byte-equal keys, and keys must never embed trajectory indices or
// step counters (nonce injection being the deliberate exception).
struct StateKey {
    std::string bytes;
    std::uint64_t hash = 0;  // fnv1a64(bytes), fixed at construction

    StateKey() = default;
    explicit StateKey(std::string b);

    bool operator==(const StateKey& other) const { return hash == other.hash && bytes == other.bytes; }
    bool operator!=(const StateKey& other) const { return !(*this == other); }
    bool operator<(const StateKey& other) const { return bytes < other.bytes; }
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const { return static_cast<std::size_t>(k.hash); }
};

std::uint64_t fnv1a64(std::string_view data);

// Builds a key as a sequence of length-prefixed fields in a fixed order.
// Integers are encoded little-endian at fixed width; no floating point is
// ever written, so the encoding is bit-exact across platforms and runs.
class KeyEncoder {
public:
    KeyEncoder& field_u8(std::uint8_t v);
    KeyEncoder& field_u32(std::uint32_t v);
    KeyEncoder& field_u64(std::uint64_t v);
    KeyEncoder& field_bytes(std::string_view v);
    // set-valued slot: sorted before encoding so enumeration order never leaks
    KeyEncoder& field_u32_set(std::vector<std::uint32_t> values);

    StateKey finish() const { return StateKey(buf_); }

private:
    void prefix(std::uint8_t len);
    std::string buf_;
};

std::string to_hex(std::string_view bytes);
std::string from_hex(std::string_view hex);  // throws std::invalid_argument on malformed input

}  // namespace gigpo
