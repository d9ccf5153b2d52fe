#include "doctest.h"

#include "gigpo/state_key.hpp"

using namespace gigpo;

TEST_CASE("key encoder produces length-prefixed fields in order") {
    KeyEncoder enc;
    enc.field_u8(7).field_u32(0x01020304u);
    StateKey key = enc.finish();
    const std::string expected = {
        '\x01', '\x07',                          // u8 field
        '\x04', '\x04', '\x03', '\x02', '\x01',  // u32 little-endian
    };
    CHECK(key.bytes == expected);
}

TEST_CASE("identical field sequences give byte-equal keys") {
    auto build = [] {
        KeyEncoder enc;
        enc.field_u8('K').field_u64(0xdeadbeefULL).field_u8(3);
        return enc.finish();
    };
    CHECK(build() == build());
    CHECK(build().hash == build().hash);
}

TEST_CASE("different field values give unequal keys") {
    KeyEncoder a, b;
    a.field_u8(2).field_u8(3);
    b.field_u8(3).field_u8(2);
    CHECK(a.finish() != b.finish());
}

TEST_CASE("set-valued fields are canonicalized before encoding") {
    KeyEncoder a, b;
    a.field_u32_set({3, 1, 2});
    b.field_u32_set({2, 3, 1});
    CHECK(a.finish() == b.finish());

    KeyEncoder c;
    c.field_u32_set({1, 2, 4});
    CHECK(a.finish() != c.finish());
}

TEST_CASE("hex round trip") {
    std::string bytes;
    for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(i));
    CHECK(from_hex(to_hex(bytes)) == bytes);
    CHECK(to_hex(std::string("\x00\xff", 2)) == "00ff");
    CHECK_THROWS_AS(from_hex("abc"), std::invalid_argument);
    CHECK_THROWS_AS(from_hex("zz"), std::invalid_argument);
}

TEST_CASE("fnv1a64 matches reference vectors") {
    // published FNV-1a test vectors
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("state key ordering is byte-lexicographic") {
    StateKey a(std::string("\x01\x02", 2));
    StateKey b(std::string("\x01\x03", 2));
    CHECK(a < b);
    CHECK(!(b < a));
}
