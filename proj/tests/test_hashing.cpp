#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "orthokey/hashing.hpp"
#include "orthokey/projspace.hpp"

using namespace orthokey;

namespace {

BitStr random_bits(unsigned n, RandomTape& tape) {
  BitStr s = BitStr::zeros(n);
  for (auto& w : s.words) w = tape.next();
  const unsigned tail = n & 63;
  if (tail) s.words.back() &= (std::uint64_t{1} << tail) - 1;
  return s;
}

BitStr xor_bits(const BitStr& a, const BitStr& b) {
  BitStr s = a;
  for (std::size_t i = 0; i < s.words.size(); ++i) s.words[i] ^= b.words[i];
  return s;
}

}  // namespace

TEST_CASE("matrices are functions of (seed, label)", "[hashing]") {
  RandomTape t1(42), t2(42), t3(43);
  const BinaryMatrix a(8, 48, t1, "round1/alice");
  const BinaryMatrix b(8, 48, t2, "round1/alice");
  const BinaryMatrix c(8, 48, t3, "round1/alice");
  RandomTape t4(42);
  const BinaryMatrix d(8, 48, t4, "round1/bob");
  CHECK(a.hex_dump() == b.hex_dump());
  CHECK(a.hex_dump() != c.hex_dump());
  CHECK(a.hex_dump() != d.hex_dump());
  CHECK(a.label() == "round1/alice");

  RandomTape probe(1);
  bool all_equal = true;
  for (int i = 0; i < 64; ++i) {
    const BitStr x = random_bits(48, probe);
    REQUIRE(a.apply(x) == b.apply(x));
    all_equal = all_equal && a.apply(x) == d.apply(x);
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("row streaming makes shorter hashes prefixes of longer ones",
          "[hashing]") {
  // the key-length monotonicity argument rests on this: the w-bit key hash
  // is the low w bits of the (w+delta)-bit one drawn from the same label
  RandomTape t1(7), t2(7), probe(2);
  const BinaryMatrix small(8, 48, t1, "key");
  const BinaryMatrix big(12, 48, t2, "key");
  for (int i = 0; i < 200; ++i) {
    const BitStr x = random_bits(48, probe);
    REQUIRE(small.apply(x).low64() == (big.apply(x).low64() & 0xFFu));
  }
}

TEST_CASE("hashes are linear over GF(2)", "[hashing]") {
  RandomTape t(3), probe(4);
  const BinaryMatrix m(16, 80, t, "lin");
  for (int i = 0; i < 1000; ++i) {
    const BitStr x = random_bits(80, probe);
    const BitStr y = random_bits(80, probe);
    REQUIRE(m.apply(xor_bits(x, y)) == xor_bits(m.apply(x), m.apply(y)));
  }
}

TEST_CASE("apply, apply64 and apply_word agree on one-word inputs",
          "[hashing]") {
  RandomTape t(9), probe(5);
  const BinaryMatrix m(24, 48, t, "w");
  for (int i = 0; i < 500; ++i) {
    const BitStr x = random_bits(48, probe);
    REQUIRE(m.apply(x).low64() == m.apply_word(x.low64()));
    REQUIRE(m.apply64(x) == m.apply_word(x.low64()));
  }
}

TEST_CASE("identity prefix copies input bits", "[hashing]") {
  const BinaryMatrix id = BinaryMatrix::identity_prefix(8, 48);
  RandomTape probe(6);
  for (int i = 0; i < 100; ++i) {
    const BitStr x = random_bits(48, probe);
    CHECK(id.apply(x).low64() == (x.low64() & 0xFFu));
  }
  CHECK_THROWS_AS(BinaryMatrix::identity_prefix(9, 8), std::invalid_argument);
}

TEST_CASE("input width is checked", "[hashing]") {
  RandomTape t(1);
  const BinaryMatrix m(4, 32, t, "x");
  CHECK_THROWS_AS(m.apply(BitStr::zeros(31)), std::invalid_argument);
  CHECK(sample_matrix(t, "y", 4, 32).apply(BitStr::zeros(32)).bits == 4u);
}

TEST_CASE("encode is injective and matches the word fast path", "[hashing]") {
  const FieldSpec f = make_field(2);  // GF(4), 2 bits per coordinate
  const std::vector<Direction> dirs = enumerate_directions(f, 3);
  std::set<std::uint64_t> codes;
  for (const Direction& d : dirs) {
    const BitStr e = encode(d);
    REQUIRE(e.bits == 6u);
    codes.insert(e.low64());
    detail::RawVec v{};
    for (unsigned i = 0; i < 3; ++i) v[i] = d.raw(i);
    REQUIRE(detail::encode_word(f, v, 3) == e.low64());
  }
  CHECK(codes.size() == dirs.size());
}

TEST_CASE("pair and triple encodings concatenate", "[hashing]") {
  const FieldSpec f = make_field(3);
  const std::vector<Direction> dirs = enumerate_directions(f, 3);
  const Direction &a = dirs[2], &b = dirs[10], &c = dirs[50];
  const BitStr ab = encode(a, b);
  REQUIRE(ab.bits == 18u);
  for (unsigned i = 0; i < 9; ++i) {
    CHECK(ab.bit(i) == encode(a).bit(i));
    CHECK(ab.bit(9 + i) == encode(b).bit(i));
  }
  const BitStr abc = encode(a, b, c);
  REQUIRE(abc.bits == 27u);
  for (unsigned i = 0; i < 9; ++i) CHECK(abc.bit(18 + i) == encode(c).bit(i));
}

TEST_CASE("collision rate sits within three sigmas of 2^-l", "[hashing]") {
  for (unsigned l : {1u, 4u, 8u}) {
    RandomTape tape(1000 + l);
    const CollisionStats st = collision_stats(l, 48, 100'000, tape);
    INFO("l = " << l << " rate = " << st.rate << " expected = " << st.expected
                << " sigma = " << st.sigma);
    CHECK(std::abs(st.rate - st.expected) <= 3.0 * st.sigma);
  }
  RandomTape t(1);
  CHECK_THROWS_AS(collision_stats(0, 8, 10, t), std::invalid_argument);
  CHECK_THROWS_AS(collision_stats(25, 8, 10, t), std::invalid_argument);
}
