#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "orthokey/specgraph.hpp"

using namespace orthokey;

TEST_CASE("nominal graph parameters", "[specgraph]") {
  const auto dd = graph_params(GraphKind::DirDir, 2, 2);
  CHECK(dd.nL == 7);
  CHECK(dd.nR == 7);
  CHECK(dd.dL == 3);
  CHECK(dd.dR == 3);
  const auto dp = graph_params(GraphKind::DirPair, 2, 2);
  CHECK(dp.nL == 7);
  CHECK(dp.nR == 21);
  CHECK(dp.dL == 3);
  CHECK(dp.dR == 1);
  // handshake: nL*dL == nR*dR for both kinds
  for (std::uint64_t q : {2u, 4u, 8u})
    for (unsigned k : {2u, 3u})
      for (GraphKind kind : {GraphKind::DirDir, GraphKind::DirPair}) {
        const auto s = graph_params(kind, q, k);
        CHECK(s.nL * s.dL == s.nR * s.dR);
      }
  CHECK_THROWS_AS(graph_params(GraphKind::DirDir, 3, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(graph_params(GraphKind::DirDir, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("DirDir graphs are exactly regular", "[specgraph]") {
  for (std::uint64_t q : {2u, 4u}) {
    for (unsigned k : {2u, 3u}) {
      const auto s = graph_params(GraphKind::DirDir, q, k);
      const BipartiteGraph g(s);
      const auto dl = s.dL.convert_to<std::uint64_t>();
      for (std::uint64_t r : g.row_sums()) REQUIRE(r == dl);
      for (std::uint64_t c : g.col_sums()) REQUIRE(c == dl);
      CHECK(BigInt(g.edge_count()) == s.nL * s.dL);
    }
  }
}

TEST_CASE("DirPair graphs are irregular in a frozen pattern", "[specgraph]") {
  // q=2, k=2: isotropic rows carry dL + N_k - N_{k-1} = 5, the rest dL = 3;
  // degenerate (y,y) columns carry N_k = 3, independent pairs N_{k-1} = 1
  const auto s = graph_params(GraphKind::DirPair, 2, 2);
  const BipartiteGraph g(s);

  std::map<std::uint64_t, unsigned> row_hist;
  for (std::uint64_t r : g.row_sums()) ++row_hist[r];
  CHECK(row_hist == std::map<std::uint64_t, unsigned>{{3, 4}, {5, 3}});

  std::map<std::uint64_t, unsigned> col_hist;
  for (std::uint64_t c : g.col_sums()) ++col_hist[c];
  CHECK(col_hist == std::map<std::uint64_t, unsigned>{{1, 18}, {3, 3}});

  // degenerate columns are exactly the isotropic diagonal
  unsigned degenerate = 0;
  for (std::uint64_t j = 0; j < g.n_right(); ++j) {
    const auto [y, z] = g.right_label(j);
    if (y == z) {
      ++degenerate;
      CHECK(g.col(j).size() == 3u);
    }
  }
  CHECK(degenerate == 3u);

  // every edge is a pairwise-orthogonal triple, so the total is the cube
  CHECK(BigInt(g.edge_count()) == count_triples(2, 3));
}

TEST_CASE("gram matches an independent dense product", "[specgraph]") {
  for (GraphKind kind : {GraphKind::DirDir, GraphKind::DirPair}) {
    const auto s = graph_params(kind, 2, 2);
    const BipartiteGraph g(s);
    const Biadjacency J = build_biadjacency(s);
    const auto gram = g.gram_int();
    for (std::uint64_t i = 0; i < J.rows; ++i)
      for (std::uint64_t j = 0; j < J.rows; ++j) {
        std::int64_t acc = 0;
        for (std::uint64_t c = 0; c < J.cols; ++c)
          acc += std::int64_t{J.at(i, c)} * J.at(j, c);
        REQUIRE(acc == gram[i * J.rows + j]);
      }
  }
}

TEST_CASE("DirDir gram equals the two-value closed form", "[specgraph]") {
  for (std::uint64_t q : {2u, 4u}) {
    for (unsigned k : {2u, 3u}) {
      const auto s = graph_params(GraphKind::DirDir, q, k);
      const GramForm gf = gram_closed_form(s);
      const BipartiteGraph g(s);
      const auto gram = g.gram_int();
      const std::uint64_t nl = g.n_left();
      const auto diag = gf.diag.convert_to<std::int64_t>();
      const auto off = gf.offdiag.convert_to<std::int64_t>();
      for (std::uint64_t i = 0; i < nl; ++i)
        for (std::uint64_t j = 0; j < nl; ++j)
          REQUIRE(gram[i * nl + j] == (i == j ? diag : off));
    }
  }
}

TEST_CASE("DirPair gram deviates from the two-value form", "[specgraph]") {
  // the irregularity above makes a constant diag/offdiag impossible; freeze
  // the measured q=2,k=2 structure as the regression value
  const auto s = graph_params(GraphKind::DirPair, 2, 2);
  const GramForm gf = gram_closed_form(s);
  CHECK(gf.diag == 3);
  CHECK(gf.offdiag == 0);
  const BipartiteGraph g(s);
  const auto gram = g.gram_int();
  const std::uint64_t nl = g.n_left();
  std::map<std::int64_t, unsigned> diag_hist, off_hist;
  for (std::uint64_t i = 0; i < nl; ++i)
    for (std::uint64_t j = 0; j < nl; ++j)
      ++(i == j ? diag_hist : off_hist)[gram[i * nl + j]];
  CHECK(diag_hist == std::map<std::int64_t, unsigned>{{3, 4}, {5, 3}});
  CHECK(off_hist == std::map<std::int64_t, unsigned>{{0, 24}, {1, 18}});
}

TEST_CASE("DirDir spectra match the closed forms", "[specgraph]") {
  struct Row {
    std::uint64_t q;
    unsigned k;
    double l1, l2;
  };
  const Row rows[] = {
      {2, 2, 3.0, 1.41421356237309515},
      {4, 2, 5.0, 2.0},
      {2, 3, 7.0, 2.0},
      {4, 3, 21.0, 4.0},
  };
  for (const Row& r : rows) {
    const auto rep = spectrum(graph_params(GraphKind::DirDir, r.q, r.k));
    INFO("q=" << r.q << " k=" << r.k);
    CHECK(rep.lambda1_numeric == Catch::Approx(r.l1).margin(1e-9));
    CHECK(rep.lambda2_numeric == Catch::Approx(r.l2).margin(1e-9));
    CHECK(rep.residual1 <= 1e-9);
    CHECK(rep.residual2 <= 1e-9);
  }
}

TEST_CASE("DirPair spectra: frozen true values exceed the ideal", "[specgraph]") {
  struct Row {
    std::uint64_t q;
    unsigned k;
    double l1, l2;
  };
  const Row rows[] = {
      {2, 2, 2.613125930, 2.326846270},
      {4, 2, 3.507690071, 3.162277660},
      {2, 3, 9.103465158, 5.291502622},
      {4, 3, 25.161877940, 14.003307164},
  };
  for (const Row& r : rows) {
    const auto s = graph_params(GraphKind::DirPair, r.q, r.k);
    const auto rep = spectrum(s);
    INFO("q=" << r.q << " k=" << r.k);
    CHECK(rep.lambda1_numeric == Catch::Approx(r.l1).margin(1e-7));
    CHECK(rep.lambda2_numeric == Catch::Approx(r.l2).margin(1e-7));
    // the built graph's lambda2 is strictly above the nominal-degree cap
    CHECK(rep.lambda2_numeric >
          std::sqrt(s.dL.convert_to<double>()) + 1e-6);
  }
}

TEST_CASE("lambda2 theory values", "[specgraph]") {
  CHECK(lambda2_theory_value(graph_params(GraphKind::DirDir, 2, 2)) ==
        Catch::Approx(std::sqrt(2.0)).margin(1e-12));
  CHECK(lambda2_theory_value(graph_params(GraphKind::DirDir, 4, 3)) ==
        Catch::Approx(4.0).margin(1e-12));
  // DirPair: sqrt(diag - offdiag) of the nominal gram
  CHECK(lambda2_theory_value(graph_params(GraphKind::DirPair, 2, 2)) ==
        Catch::Approx(std::sqrt(3.0)).margin(1e-12));
}

TEST_CASE("neighbor-set pair attains the worst exhaustive ratio",
          "[specgraph]") {
  const auto s = graph_params(GraphKind::DirDir, 2, 2);
  const BipartiteGraph g(s);
  // B = one column, A = its three neighbors: E = 3, main = 9/7,
  // deviation = 12/7, bound = sqrt(6)
  const std::vector<std::uint32_t> B = {0};
  std::vector<std::uint32_t> A(g.col(0).begin(), g.col(0).end());
  const MixingReport m = mixing_deviation(g, A, B);
  CHECK(m.edges == 3u);
  CHECK(m.main_term == Catch::Approx(9.0 / 7.0).margin(1e-12));
  CHECK(m.deviation == Catch::Approx(12.0 / 7.0).margin(1e-12));
  CHECK(m.bound == Catch::Approx(std::sqrt(6.0)).margin(1e-12));
  CHECK(m.satisfied);
  CHECK(m.ratio == Catch::Approx(0.699854212).margin(1e-8));

  CHECK_THROWS_AS(
      mixing_deviation(g, std::vector<std::uint32_t>{99}, B),
      std::out_of_range);
  CHECK_THROWS_AS(
      mixing_deviation(g, A, std::vector<std::uint32_t>{21}),
      std::out_of_range);
}

TEST_CASE("exhaustive mixing sweep finds no violations", "[specgraph]") {
  const auto s = graph_params(GraphKind::DirDir, 2, 2);
  const BipartiteGraph g(s);
  RandomTape tape(1);
  const MixingScanReport r = mixing_scan(g, 0, tape);
  CHECK(r.exhaustive);
  CHECK(r.pairs_checked == 16385u);  // 2^7 * 2^7 subset pairs + the full pair
  CHECK(r.violations == 0u);
  CHECK(r.corollary_checked == 8913u);
  CHECK(r.corollary_violations == 0u);
  CHECK(r.worst.ratio == Catch::Approx(0.699854212).margin(1e-8));
  CHECK(r.corollary_worst_ratio <= 2.0);
}

TEST_CASE("random mixing scans are seed-deterministic and worker-independent",
          "[specgraph]") {
  const auto s = graph_params(GraphKind::DirDir, 4, 2);
  const BipartiteGraph g(s);
  RandomTape t1(5), t2(5), t3(6);
  const MixingScanReport a = mixing_scan(g, 400, t1);
  const MixingScanReport b = mixing_scan(g, 400, t2, 3);
  const MixingScanReport c = mixing_scan(g, 400, t3);
  CHECK_FALSE(a.exhaustive);
  CHECK(a.pairs_checked == 401u);
  CHECK(a.violations == 0u);
  CHECK(a.worst.ratio == b.worst.ratio);
  CHECK(a.worst.sizeA == b.worst.sizeA);
  CHECK(a.worst.edges == b.worst.edges);
  CHECK(a.corollary_checked == b.corollary_checked);
  // a different seed samples different pairs
  CHECK((a.worst.sizeA != c.worst.sizeA || a.worst.sizeB != c.worst.sizeB ||
         a.worst.edges != c.worst.edges));
}

TEST_CASE("larger specs pass random scans", "[specgraph]") {
  for (auto [kind, q, k] :
       {std::tuple{GraphKind::DirDir, std::uint64_t{4}, 2u},
        std::tuple{GraphKind::DirDir, std::uint64_t{2}, 3u},
        std::tuple{GraphKind::DirPair, std::uint64_t{2}, 2u},
        std::tuple{GraphKind::DirPair, std::uint64_t{4}, 2u}}) {
    const BipartiteGraph g(graph_params(kind, q, k));
    RandomTape tape(11);
    const MixingScanReport r = mixing_scan(g, 1000, tape, 2);
    INFO(kind_name(kind) << " q=" << q << " k=" << k);
    CHECK(r.violations == 0u);
    CHECK(r.corollary_violations == 0u);
  }
}

TEST_CASE("capacity guards", "[specgraph]") {
  // q=256, k=2: 65793² cells / 16.9M right vertices — both rejected before
  // any enumeration happens
  CHECK_THROWS_AS(build_biadjacency(graph_params(GraphKind::DirDir, 256, 2)),
                  std::length_error);
  CHECK_THROWS_AS(BipartiteGraph(graph_params(GraphKind::DirPair, 256, 2)),
                  std::length_error);
}
