#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "orthokey/field.hpp"
#include "orthokey/rng.hpp"

using namespace orthokey;

TEST_CASE("every pinned modulus is irreducible", "[field]") {
  for (unsigned n = 1; n <= 32; ++n) {
    const std::uint64_t m = (std::uint64_t{1} << n) | kFieldModulusLow[n];
    INFO("degree " << n << " modulus 0x" << std::hex << m);
    CHECK(detail::poly_irreducible(m));
  }
}

TEST_CASE("pinned moduli for the working degrees", "[field]") {
  CHECK(kFieldModulusLow[8] == 0x1Bu);
  CHECK(kFieldModulusLow[16] == 0x2Bu);
  CHECK(kFieldModulusLow[32] == 0x8Du);
  CHECK(make_field(8).full_modulus() == 0x11Bu);
  CHECK(make_field(8).order() == 256u);
  CHECK(make_field(16).order() == 65536u);
}

TEST_CASE("degree bounds are enforced", "[field]") {
  CHECK_THROWS_AS(make_field(0), std::invalid_argument);
  CHECK_THROWS_AS(make_field(33), std::invalid_argument);
  const FieldSpec f = make_field(4);
  CHECK_THROWS_AS(f.element(16), std::invalid_argument);
  CHECK_NOTHROW(f.element(15));
}

TEST_CASE("GF(4) multiplication table", "[field]") {
  // modulus x^2 + x + 1: with x = 2, x^2 = x + 1 = 3
  const FieldSpec f = make_field(2);
  auto m = [&](std::uint32_t a, std::uint32_t b) { return f.mul_raw(a, b); };
  CHECK(m(2, 2) == 3u);
  CHECK(m(2, 3) == 1u);
  CHECK(m(3, 3) == 2u);
  CHECK(m(0, 3) == 0u);
  CHECK(m(1, 3) == 3u);
}

TEST_CASE("GF(256) known inverse pair", "[field]") {
  // 0x53 * 0xCA = 1 under x^8+x^4+x^3+x+1 (the classic worked example)
  const FieldSpec f = make_field(8);
  CHECK(f.mul_raw(0x53, 0xCA) == 1u);
  CHECK(f.inv_raw(0x53) == 0xCAu);
}

TEST_CASE("exhaustive axioms at small degrees", "[field]") {
  for (unsigned n : {1u, 2u, 3u, 4u}) {
    const FieldSpec f = make_field(n);
    const std::uint32_t q = static_cast<std::uint32_t>(f.order());
    for (std::uint32_t a = 0; a < q; ++a) {
      for (std::uint32_t b = 0; b < q; ++b) {
        CHECK(f.mul_raw(a, b) == f.mul_raw(b, a));
        for (std::uint32_t c = 0; c < q; ++c) {
          REQUIRE(f.mul_raw(f.mul_raw(a, b), c) ==
                  f.mul_raw(a, f.mul_raw(b, c)));
          REQUIRE(f.mul_raw(a, b ^ c) == (f.mul_raw(a, b) ^ f.mul_raw(a, c)));
        }
      }
    }
    for (std::uint32_t a = 1; a < q; ++a)
      CHECK(f.mul_raw(a, f.inv_raw(a)) == 1u);
  }
}

TEST_CASE("Frobenius is additive over all GF(256) pairs", "[field]") {
  const FieldSpec f = make_field(8);
  auto sq = [&](std::uint32_t a) { return f.mul_raw(a, a); };
  for (std::uint32_t a = 0; a < 256; ++a)
    for (std::uint32_t b = 0; b < 256; ++b)
      REQUIRE(sq(a ^ b) == (sq(a) ^ sq(b)));
}

TEST_CASE("table path equals the carry-less path", "[field]") {
  // degrees <= 16 multiply through log/exp tables; the polynomial kernels
  // are an independent route to the same products
  for (unsigned n : {8u, 12u, 16u}) {
    const FieldSpec f = make_field(n);
    const std::uint64_t mask = f.order() - 1;
    RandomTape tape(0x5eed + n);
    for (int i = 0; i < 5000; ++i) {
      const auto a = static_cast<std::uint32_t>(tape.next() & mask);
      const auto b = static_cast<std::uint32_t>(tape.next() & mask);
      const auto direct = static_cast<std::uint32_t>(
          detail::clmod(detail::clmul(a, b), f.full_modulus()));
      REQUIRE(f.mul_raw(a, b) == direct);
    }
  }
}

TEST_CASE("large degrees run without tables", "[field]") {
  for (unsigned n : {20u, 32u}) {
    const FieldSpec f = make_field(n);
    const std::uint64_t mask = f.order() - 1;
    RandomTape tape(0xb165 + n);
    for (int i = 0; i < 300; ++i) {
      std::uint32_t a = static_cast<std::uint32_t>(tape.next() & mask);
      if (a == 0) a = 1;
      const std::uint32_t b = static_cast<std::uint32_t>(tape.next() & mask);
      const std::uint32_t c = static_cast<std::uint32_t>(tape.next() & mask);
      REQUIRE(f.mul_raw(a, f.inv_raw(a)) == 1u);
      REQUIRE(f.mul_raw(a, b ^ c) == (f.mul_raw(a, b) ^ f.mul_raw(a, c)));
    }
  }
}

TEST_CASE("element wrappers check their fields", "[field]") {
  const FieldSpec f4 = make_field(2);
  const FieldSpec f8 = make_field(3);
  const FieldElement a = f4.element(2), b = f4.element(3);
  CHECK(add(a, b).value == 1u);
  CHECK(mul(a, b).value == 1u);
  CHECK(inv(a).value == 3u);  // 2*3 = 1 in GF(4)
  const FieldElement c = f8.element(5);
  CHECK_THROWS_AS(add(a, c), std::invalid_argument);
  CHECK_THROWS_AS(mul(a, c), std::invalid_argument);
  CHECK_THROWS_AS(inv(f4.element(0)), std::domain_error);
}

TEST_CASE("dot products", "[field]") {
  const FieldSpec f = make_field(2);
  const std::vector<FieldElement> u = {f.element(1), f.element(2),
                                       f.element(3)};
  const std::vector<FieldElement> v = {f.element(3), f.element(3),
                                       f.element(1)};
  // 1*3 + 2*3 + 3*1 = 3 ^ 1 ^ 3 = 1
  CHECK(dot(u, v).value == 1u);
  CHECK(dot(u, u).value == (1u ^ 3u ^ 2u));  // squares of 1,2,3
  const std::vector<FieldElement> w = {f.element(1)};
  CHECK_THROWS_AS(dot(u, w), std::invalid_argument);
}
