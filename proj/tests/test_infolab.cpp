#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "orthokey/infolab.hpp"

using namespace orthokey;

namespace {

using Tuples = std::vector<std::vector<std::uint32_t>>;

JointDistribution uniform_bits(unsigned bits) {
  Tuples t;
  for (std::uint32_t v = 0; v < (1u << bits); ++v) t.push_back({v});
  return JointDistribution::from_counts(
      {"x"}, std::move(t), std::vector<std::uint64_t>(1u << bits, 1));
}

// x, y independent fair bits, z = x XOR y
JointDistribution xor_triple() {
  Tuples t;
  for (std::uint32_t x = 0; x < 2; ++x)
    for (std::uint32_t y = 0; y < 2; ++y) t.push_back({x, y, x ^ y});
  return JointDistribution::from_counts({"x", "y", "z"}, std::move(t),
                                        {1, 1, 1, 1});
}

}  // namespace

TEST_CASE("entropy basics", "[infolab]") {
  CHECK(entropy(uniform_bits(3), {"x"}) == Catch::Approx(3.0).margin(1e-12));

  const JointDistribution point({"x"}, Tuples{{7}},
                                std::vector<Rational>{Rational(1)});
  CHECK(entropy(point, {"x"}) == Catch::Approx(0.0).margin(1e-15));

  const auto biased =
      JointDistribution::from_counts({"x"}, Tuples{{0}, {1}}, {1, 3});
  CHECK(biased.exact());
  CHECK(entropy(biased, {"x"}) ==
        Catch::Approx(0.811278124459133).margin(1e-14));
}

TEST_CASE("distribution validation", "[infolab]") {
  CHECK_THROWS_AS(JointDistribution({"x"}, Tuples{{0}, {1}},
                                    std::vector<double>{0.5, 0.4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(JointDistribution({"x"}, Tuples{{0}, {1}},
                                    std::vector<double>{1.5, -0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(JointDistribution({"x"}, Tuples{{0}, {0}},
                                    std::vector<double>{0.5, 0.5}),
                  std::invalid_argument);  // duplicate tuples
  CHECK_THROWS_AS(JointDistribution({"x", "y"}, Tuples{{0}},
                                    std::vector<double>{1.0}),
                  std::invalid_argument);  // arity mismatch
  CHECK_THROWS_AS(JointDistribution({"x"}, Tuples{}, std::vector<double>{}),
                  std::invalid_argument);  // empty support
  CHECK_THROWS_AS(JointDistribution::from_counts({"x"}, Tuples{{0}}, {0}),
                  std::invalid_argument);  // zero total

  const auto d = uniform_bits(1);
  CHECK_THROWS_AS(entropy(d, {"nope"}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(d, {}), std::invalid_argument);

  const auto t = xor_triple();
  CHECK_THROWS_AS(mutual_info(t, {"x"}, {"x"}), std::invalid_argument);
  CHECK_THROWS_AS(mutual_info(t, {"x"}, {"y"}, {"y"}), std::invalid_argument);

  // double mode: exact probabilities are unavailable
  const JointDistribution dd({"x"}, Tuples{{0}, {1}},
                             std::vector<double>{0.25, 0.75});
  CHECK_FALSE(dd.exact());
  CHECK_THROWS_AS(dd.prob_exact(0), std::logic_error);
  CHECK(entropy(dd, {"x"}) == Catch::Approx(0.811278124459133).margin(1e-12));
}

TEST_CASE("shared block and XOR triple", "[infolab]") {
  // x = y, two uniform bits: everything is mutual
  Tuples t;
  for (std::uint32_t v = 0; v < 4; ++v) t.push_back({v, v});
  const auto shared =
      JointDistribution::from_counts({"x", "y"}, std::move(t), {1, 1, 1, 1});
  CHECK(mutual_info(shared, {"x"}, {"y"}) == Catch::Approx(2.0).margin(1e-12));

  const auto d = xor_triple();
  const ProfileReport p = profile(d, {"x"}, {"y"}, {"z"});
  CHECK(p.hx == Catch::Approx(1.0).margin(1e-12));
  CHECK(p.hxy == Catch::Approx(2.0).margin(1e-12));
  CHECK(p.hxyz == Catch::Approx(2.0).margin(1e-12));
  CHECK(p.hx_yz == Catch::Approx(0.0).margin(1e-12));
  CHECK(p.ixy == Catch::Approx(0.0).margin(1e-12));
  CHECK(p.ixy_z == Catch::Approx(1.0).margin(1e-12));
  CHECK(p.ixyz == Catch::Approx(-1.0).margin(1e-12));  // synergy
  CHECK(p.ix_yz == Catch::Approx(1.0).margin(1e-12));
  CHECK(p.max_identity_residual <= 1e-12);
}

TEST_CASE("chain rule on random exact distributions", "[infolab]") {
  RandomTape tape(31);
  for (unsigned t = 0; t < 50; ++t) {
    RandomTape tr = tape.sub("chain", t);
    const auto d = random_distribution(tr, 3, 4);
    const double lhs = mutual_info(d, {"v0"}, {"v1", "v2"});
    const double rhs = mutual_info(d, {"v0"}, {"v1"}) +
                       mutual_info(d, {"v0"}, {"v2"}, {"v1"});
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-9));
  }
}

TEST_CASE("uniform orthogonal-triple distribution, frozen profile",
          "[infolab]") {
  // all 125 ordered pairwise-orthogonal direction triples of F_4^3,
  // uniform weight; variables are direction ordinals
  const FieldSpec f = make_field(2);  // GF(4)
  const auto dirs = enumerate_directions(f, 3);
  REQUIRE(dirs.size() == 21u);
  Tuples t;
  for (std::uint32_t i = 0; i < dirs.size(); ++i)
    for (std::uint32_t j = 0; j < dirs.size(); ++j) {
      if (!is_orthogonal(dirs[i], dirs[j])) continue;
      for (std::uint32_t l = 0; l < dirs.size(); ++l)
        if (is_orthogonal(dirs[i], dirs[l]) &&
            is_orthogonal(dirs[j], dirs[l]))
          t.push_back({i, j, l});
    }
  REQUIRE(t.size() == 125u);
  const auto d = JointDistribution::from_counts(
      {"x", "y", "z"}, std::move(t), std::vector<std::uint64_t>(125, 1));
  REQUIRE(d.exact());

  const ProfileReport p = profile(d, {"x"}, {"y"}, {"z"});
  CHECK(p.hx == Catch::Approx(4.338577303).margin(1e-8));
  CHECK(p.hy == Catch::Approx(4.338577303).margin(1e-8));
  CHECK(p.hz == Catch::Approx(4.338577303).margin(1e-8));
  CHECK(p.hxy == Catch::Approx(6.501398666).margin(1e-8));
  CHECK(p.hxyz == Catch::Approx(6.965784284662087).margin(1e-12));
  CHECK(p.ixy == Catch::Approx(2.175755941).margin(1e-8));
  CHECK(p.ixy_z == Catch::Approx(1.698435743).margin(1e-8));
  CHECK(p.ixyz == Catch::Approx(0.477320198).margin(1e-8));
}

TEST_CASE("idealized geometric profile stays in the one-bit window",
          "[infolab]") {
  for (std::uint64_t q : {2u, 4u, 16u, 256u}) {
    for (unsigned k : {2u, 3u}) {
      ProfileReport p{};
      REQUIRE_NOTHROW(p = geometric_profile(q, k));
      const double n = std::log2(static_cast<double>(q));
      INFO("q=" << q << " k=" << k);
      CHECK(std::abs(p.hx - k * n) <= 1.0);
      CHECK(std::abs(p.ixy - n) <= 1.0);
      CHECK(std::abs(p.ix_yz - 2.0 * n) <= 1.0);
      CHECK(std::abs(p.ixyz) <= 1.0);
      if (q >= 4) CHECK(std::abs(p.hxyz - (3.0 * k - 3.0) * n) <= 2.0);
    }
  }
  // the smallest field compounds the per-stage overshoot: at q=2, k=3 the
  // joint entropy log2(15·7·3) sits 2.30 bits above 6
  CHECK(geometric_profile(2, 3).hxyz - 6.0 > 2.0);
  // spot value: q=4, k=2 has H(x) = log2 21
  CHECK(geometric_profile(4, 2).hx ==
        Catch::Approx(std::log2(21.0)).margin(1e-12));
  CHECK_THROWS_AS(geometric_profile(4, 1), std::invalid_argument);
  CHECK_THROWS_AS(geometric_profile(3, 2), std::invalid_argument);
}

TEST_CASE("interaction inequalities hold on random distributions",
          "[infolab]") {
  RandomTape tape(77);
  unsigned b2_checked = 0;
  for (unsigned t = 0; t < 300; ++t) {
    RandomTape tr = tape.sub("ineq", t);
    const unsigned nvars = 3 + static_cast<unsigned>(tr.below(3));
    const auto d = random_distribution(tr, nvars, 4);
    std::vector<std::string> rest;
    for (unsigned v = 2; v < nvars; ++v)
      rest.push_back("v" + std::to_string(v));
    const auto b1 = check_lemma_b1(d, {"v0"}, {"v1"}, rest);
    REQUIRE(b1.holds);
    REQUIRE(b1.slack >= -1e-9);
    if (nvars == 5) {
      const auto b2 =
          check_lemma_b2(d, {"v0"}, {"v1"}, {"v2"}, {"v3"}, {"v4"});
      REQUIRE(b2.part1.holds);
      REQUIRE(b2.part2.holds);
      REQUIRE(b2.holds);
      ++b2_checked;
    }
  }
  CHECK(b2_checked > 50u);
}

TEST_CASE("conditioning can exceed unconditional dependence", "[infolab]") {
  // XOR triple: I(x:y) = 0 but I(x:y|z) = 1; the inequality still holds
  // because the side information reveals I(z:xy) = 1
  const auto d = xor_triple();
  const auto r = check_lemma_b1(d, {"x"}, {"y"}, {"z"});
  CHECK(r.lhs == Catch::Approx(1.0).margin(1e-12));
  CHECK(r.rhs == Catch::Approx(1.0).margin(1e-12));
  CHECK(r.holds);
}

TEST_CASE("keybound audit on hand-built transcripts", "[infolab]") {
  // w = x = y (2 bits), constant transcript and helper message:
  // H(w) - I(w:t) = 2 <= I(x:y|mC) + 1 = 3
  {
    Tuples t;
    for (std::uint32_t v = 0; v < 4; ++v) t.push_back({v, v, 0, 0, v});
    const auto d = JointDistribution::from_counts(
        {"x", "y", "mC", "t", "w"}, std::move(t), {1, 1, 1, 1});
    const KeyboundReport r = keybound_audit(d);
    CHECK(r.h_w == Catch::Approx(2.0).margin(1e-12));
    CHECK(r.i_wt == Catch::Approx(0.0).margin(1e-12));
    CHECK(r.i_xy_given_mc == Catch::Approx(2.0).margin(1e-12));
    CHECK(r.holds);
  }
  // a key pulled out of thin air breaks the bound: w uniform on 8 values,
  // independent of an x = y pair that shares nothing
  {
    Tuples t;
    for (std::uint32_t w = 0; w < 8; ++w) t.push_back({0, 0, 0, 0, w});
    const auto d = JointDistribution::from_counts(
        {"x", "y", "mC", "t", "w"}, std::move(t),
        std::vector<std::uint64_t>(8, 1));
    const KeyboundReport r = keybound_audit(d);
    CHECK(r.lhs == Catch::Approx(3.0).margin(1e-12));
    CHECK(r.rhs == Catch::Approx(1.0).margin(1e-12));
    CHECK_FALSE(r.holds);
  }
  // missing variable names are rejected
  CHECK_THROWS_AS(keybound_audit(xor_triple()), std::invalid_argument);
}

TEST_CASE("random distributions are seed-deterministic", "[infolab]") {
  RandomTape a(5), b(5);
  const auto d1 = random_distribution(a, 4, 4);
  const auto d2 = random_distribution(b, 4, 4);
  REQUIRE(d1.size() == d2.size());
  for (std::size_t e = 0; e < d1.size(); ++e) {
    REQUIRE(d1.prob_exact(e) == d2.prob_exact(e));
    for (unsigned v = 0; v < 4; ++v)
      REQUIRE(d1.value(e, v) == d2.value(e, v));
  }
  CHECK_THROWS_AS(random_distribution(a, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(random_distribution(a, 9, 4), std::invalid_argument);
  CHECK_THROWS_AS(random_distribution(a, 3, 1), std::invalid_argument);
}
