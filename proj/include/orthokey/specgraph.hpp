#pragma once

// The two bipartite orthogonality graphs on directions in F_q^{k+1}:
//   DirDir   L = R = directions, x ~ y iff x ⊥ y;
//   DirPair  L = directions, R = ordered orthogonal pairs (y,z),
//            x ~ (y,z) iff x ⊥ y and x ⊥ z.
// Closed-form nominal parameters, exact construction, gram structure,
// numeric spectra, and expander-mixing certification.
//
// The nominal parameters are the biregular ideal.  The DirDir graph attains
// them exactly.  The DirPair graph does not: isotropic directions admit the
// degenerate pair (y,y), which inflates isotropic left degrees to
// dL + N_k − N_{k-1} and gives (y,y) columns degree N_k instead of N_{k-1}.
// Construction below is the true incidence relation; reports carry both the
// nominal theory values and the measured ones so the gap is visible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "projspace.hpp"
#include "rng.hpp"

namespace orthokey {

enum class GraphKind { DirDir, DirPair };

inline const char* kind_name(GraphKind k) {
  return k == GraphKind::DirDir ? "dirdir" : "dirpair";
}

struct BipartiteGraphSpec {
  GraphKind kind;
  std::uint64_t q;
  unsigned k;
  BigInt nL, nR, dL, dR;  // nominal closed-form parameters
};

// nominal parameters; satisfy nL·dL = nR·dR as exact integers
inline BipartiteGraphSpec graph_params(GraphKind kind, std::uint64_t q,
                                       unsigned k) {
  require_power_of_two(q);
  if (k < 2) throw std::invalid_argument("graphs need k >= 2");
  BipartiteGraphSpec s{kind, q, k, 0, 0, 0, 0};
  const BigInt nk1 = count_directions(q, k + 1);
  const BigInt nk = count_directions(q, k);
  const BigInt nkm = count_directions(q, k - 1);
  if (kind == GraphKind::DirDir) {
    s.nL = s.nR = nk1;
    s.dL = s.dR = nk;
  } else {
    s.nL = nk1;
    s.nR = nk1 * nk;
    s.dL = nk * nkm;
    s.dR = nkm;
  }
  return s;
}

// closed-form J·Jᵀ structure: diag·I + offdiag·(AllOnes − I)
struct GramForm {
  BigInt diag, offdiag;
};

inline GramForm gram_closed_form(const BipartiteGraphSpec& s) {
  const BigInt nkm = count_directions(s.q, s.k - 1);
  if (s.kind == GraphKind::DirDir) return {s.dL, nkm};
  const BigInt nkm2 = s.k >= 2 && s.k - 2 >= 1
                          ? count_directions(s.q, s.k - 2)
                          : BigInt(0);  // N_0 = 0 when k = 2
  return {s.dL, nkm * nkm2};
}

// built incidence structure: per-right-vertex neighbor lists of left ordinals
class BipartiteGraph {
 public:
  explicit BipartiteGraph(const BipartiteGraphSpec& s) : spec_(s) {
    if (s.nL > kMaxEnumeration || s.nR > kMaxEnumeration)
      throw std::length_error("graph capacity exceeded: " + s.nL.str() +
                              " x " + s.nR.str());
    FieldSpec f = make_field(degree_of(s.q));
    const unsigned dim = s.k + 1;
    const std::vector<Direction> dirs = enumerate_directions(f, dim);
    n_left_ = dirs.size();
    if (s.kind == GraphKind::DirDir) {
      cols_.reserve(n_left_);
      for (const Direction& y : dirs) {
        std::vector<std::uint32_t> c;
        for (const Direction& x : orthogonal_to(std::span(&y, 1)))
          c.push_back(static_cast<std::uint32_t>(index_of(x)));
        cols_.push_back(std::move(c));
        right_pairs_.emplace_back(index_of(y), index_of(y));
      }
    } else {
      for (const Direction& y : dirs) {
        const std::uint64_t yi = index_of(y);
        for (const Direction& z : orthogonal_to(std::span(&y, 1))) {
          std::vector<std::uint32_t> c;
          if (z == y) {
            // degenerate pair at an isotropic y: x need only avoid y's span
            for (const Direction& x : orthogonal_to(std::span(&y, 1)))
              c.push_back(static_cast<std::uint32_t>(index_of(x)));
          } else {
            const std::array<Direction, 2> yz{y, z};
            for (const Direction& x : orthogonal_to(std::span(yz)))
              c.push_back(static_cast<std::uint32_t>(index_of(x)));
          }
          cols_.push_back(std::move(c));
          right_pairs_.emplace_back(yi, index_of(z));
        }
      }
    }
    if (BigInt(cols_.size()) != spec_.nR)
      throw std::logic_error("right vertex count mismatch vs closed form");
  }

  const BipartiteGraphSpec& spec() const { return spec_; }
  std::uint64_t n_left() const { return n_left_; }
  std::uint64_t n_right() const { return cols_.size(); }
  std::span<const std::uint32_t> col(std::uint64_t j) const {
    return cols_[j];
  }
  // right vertex j as a (y ordinal, z ordinal) pair; y = z for DirDir
  std::pair<std::uint64_t, std::uint64_t> right_label(std::uint64_t j) const {
    return right_pairs_[j];
  }

  std::vector<std::uint64_t> row_sums() const {
    std::vector<std::uint64_t> r(n_left_, 0);
    for (const auto& c : cols_)
      for (std::uint32_t i : c) ++r[i];
    return r;
  }
  std::vector<std::uint64_t> col_sums() const {
    std::vector<std::uint64_t> r(cols_.size());
    for (std::size_t j = 0; j < cols_.size(); ++j) r[j] = cols_[j].size();
    return r;
  }
  std::uint64_t edge_count() const {
    std::uint64_t e = 0;
    for (const auto& c : cols_) e += c.size();
    return e;
  }

  // exact J·Jᵀ accumulated per column (sum over right vertices of the outer
  // product of their neighbor lists)
  std::vector<std::int64_t> gram_int() const {
    std::vector<std::int64_t> g(n_left_ * n_left_, 0);
    for (const auto& c : cols_)
      for (std::uint32_t u : c)
        for (std::uint32_t v : c) ++g[std::size_t{u} * n_left_ + v];
    return g;
  }

 private:
  static unsigned degree_of(std::uint64_t q) {
    unsigned n = 0;
    while ((std::uint64_t{1} << n) < q) ++n;
    return n;
  }

  BipartiteGraphSpec spec_;
  std::uint64_t n_left_ = 0;
  std::vector<std::vector<std::uint32_t>> cols_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> right_pairs_;
};

// dense 0/1 matrix, row-major, for callers that want J itself
struct Biadjacency {
  std::uint64_t rows = 0, cols = 0;
  std::vector<std::uint8_t> data;
  std::uint8_t at(std::uint64_t r, std::uint64_t c) const {
    return data[r * cols + c];
  }
};

inline Biadjacency build_biadjacency(const BipartiteGraphSpec& s) {
  const BigInt cells = s.nL * s.nR;
  if (cells > 64'000'000)
    throw std::length_error("biadjacency capacity exceeded: " + cells.str() +
                            " cells");
  BipartiteGraph g(s);
  Biadjacency m;
  m.rows = g.n_left();
  m.cols = g.n_right();
  m.data.assign(m.rows * m.cols, 0);
  for (std::uint64_t j = 0; j < m.cols; ++j)
    for (std::uint32_t i : g.col(j)) m.data[std::uint64_t{i} * m.cols + j] = 1;
  return m;
}

struct SpectralReport {
  BipartiteGraphSpec spec;
  double lambda1_numeric = 0, lambda2_numeric = 0;
  double lambda1_theory = 0, lambda2_theory = 0;
  double residual1 = 0, residual2 = 0;
};

inline double lambda2_theory_value(const BipartiteGraphSpec& s) {
  if (s.kind == GraphKind::DirDir)
    return std::sqrt(std::pow(static_cast<double>(s.q),
                              static_cast<double>(s.k) - 1.0));
  const GramForm gf = gram_closed_form(s);
  return std::sqrt(static_cast<double>(gf.diag - gf.offdiag));
}

// numeric singular values of J via a dense symmetric eigensolve of J·Jᵀ,
// against the closed-form targets
inline SpectralReport spectrum(const BipartiteGraphSpec& s) {
  BipartiteGraph g(s);
  const auto gi = g.gram_int();
  const auto n = static_cast<Eigen::Index>(g.n_left());
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      gram(r, c) = static_cast<double>(gi[static_cast<std::size_t>(r) * n + c]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error(
        "eigensolver failed to converge (implicit QR sweep limit reached) on " +
        std::to_string(n) + "x" + std::to_string(n) + " gram");
  const auto& ev = es.eigenvalues();  // ascending
  const double e1 = std::max(0.0, ev(n - 1));
  const double e2 = n >= 2 ? std::max(0.0, ev(n - 2)) : 0.0;
  SpectralReport r;
  r.spec = s;
  r.lambda1_numeric = std::sqrt(e1);
  r.lambda2_numeric = std::sqrt(e2);
  r.lambda1_theory = std::sqrt(static_cast<double>(s.dL * s.dR));
  r.lambda2_theory = lambda2_theory_value(s);
  r.residual1 = std::abs(r.lambda1_numeric - r.lambda1_theory);
  r.residual2 = std::abs(r.lambda2_numeric - r.lambda2_theory);
  return r;
}

struct MixingReport {
  std::uint64_t sizeA = 0, sizeB = 0;
  std::uint64_t edges = 0;
  double main_term = 0;  // dL·#A·#B / nR, nominal parameters
  double bound = 0;      // lambda2_theory · sqrt(#A·#B)
  double deviation = 0;
  bool satisfied = true;
  double ratio = 0;  // deviation / bound, 0 when both vanish
};

namespace detail {

inline MixingReport mixing_report_from_counts(const BipartiteGraphSpec& s,
                                              std::uint64_t sizeA,
                                              std::uint64_t sizeB,
                                              std::uint64_t edges) {
  MixingReport r;
  r.sizeA = sizeA;
  r.sizeB = sizeB;
  r.edges = edges;
  const double ab = static_cast<double>(sizeA) * static_cast<double>(sizeB);
  r.main_term = static_cast<double>(s.dL) * ab / static_cast<double>(s.nR);
  r.bound = lambda2_theory_value(s) * std::sqrt(ab);
  r.deviation = std::abs(static_cast<double>(edges) - r.main_term);
  r.satisfied = r.deviation <= r.bound + 1e-9;
  if (r.bound > 0)
    r.ratio = r.deviation / r.bound;
  else
    r.ratio = r.deviation > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return r;
}

}  // namespace detail

inline MixingReport mixing_deviation(const BipartiteGraph& g,
                                     std::span<const std::uint32_t> A,
                                     std::span<const std::uint32_t> B) {
  std::vector<std::uint8_t> inA(g.n_left(), 0);
  for (std::uint32_t a : A) {
    if (a >= g.n_left()) throw std::out_of_range("left index out of range");
    inA[a] = 1;
  }
  std::uint64_t edges = 0;
  for (std::uint32_t b : B) {
    if (b >= g.n_right()) throw std::out_of_range("right index out of range");
    for (std::uint32_t i : g.col(b)) edges += inA[i];
  }
  return detail::mixing_report_from_counts(g.spec(), A.size(), B.size(),
                                           edges);
}

struct MixingScanReport {
  std::uint64_t pairs_checked = 0;
  bool exhaustive = false;
  MixingReport worst;  // maximal deviation/bound ratio
  std::uint64_t violations = 0;
  // Corollary-style constant-2 check on pairs with #A·#B ≥ (λ2·nR/dL)²
  std::uint64_t corollary_checked = 0;
  std::uint64_t corollary_violations = 0;
  double corollary_worst_ratio = 0;  // max edges/main_term on checked pairs
};

namespace detail {

inline void scan_fold(MixingScanReport& acc, const MixingReport& r,
                      double qualify_ab) {
  ++acc.pairs_checked;
  if (acc.pairs_checked == 1 || r.ratio > acc.worst.ratio) acc.worst = r;
  if (!r.satisfied) ++acc.violations;
  const double ab = static_cast<double>(r.sizeA) * r.sizeB;
  if (ab >= qualify_ab && r.main_term > 0) {
    ++acc.corollary_checked;
    const double cr = static_cast<double>(r.edges) / r.main_term;
    acc.corollary_worst_ratio = std::max(acc.corollary_worst_ratio, cr);
    if (static_cast<double>(r.edges) > 2.0 * r.main_term + 1e-9)
      ++acc.corollary_violations;
  }
}

inline void scan_merge(MixingScanReport& acc, const MixingScanReport& part) {
  acc.pairs_checked += part.pairs_checked;
  if (part.worst.ratio > acc.worst.ratio) acc.worst = part.worst;
  acc.violations += part.violations;
  acc.corollary_checked += part.corollary_checked;
  acc.corollary_violations += part.corollary_violations;
  acc.corollary_worst_ratio =
      std::max(acc.corollary_worst_ratio, part.corollary_worst_ratio);
}

}  // namespace detail

// worst case over subset pairs: exhaustive over all 2^nL · 2^nR pairs when
// both sides have at most 8 vertices, otherwise `trials` uniformly random
// pairs.  The full pair (A = L, B = R) is always checked first — it is the
// canonical member of the corollary's qualifying regime and random subsets
// at larger sizes can miss that regime entirely.
inline MixingScanReport mixing_scan(const BipartiteGraph& g,
                                    std::uint64_t trials, RandomTape& tape,
                                    unsigned workers = 1) {
  const BipartiteGraphSpec& s = g.spec();
  const double l2 = lambda2_theory_value(s);
  const double qab = l2 * static_cast<double>(s.nR) /
                     static_cast<double>(s.dL);
  const double qualify_ab = qab * qab;

  MixingScanReport acc;
  {
    std::vector<std::uint32_t> A(g.n_left()), B(g.n_right());
    for (std::uint32_t i = 0; i < g.n_left(); ++i) A[i] = i;
    for (std::uint32_t j = 0; j < g.n_right(); ++j) B[j] = j;
    detail::scan_fold(acc, mixing_deviation(g, A, B), qualify_ab);
  }

  if (g.n_left() <= 8 && g.n_right() <= 8) {
    acc.exhaustive = true;
    const unsigned nl = static_cast<unsigned>(g.n_left());
    const unsigned nr = static_cast<unsigned>(g.n_right());
    std::vector<std::uint32_t> colmask(nr, 0);
    for (unsigned j = 0; j < nr; ++j)
      for (std::uint32_t i : g.col(j)) colmask[j] |= 1u << i;
    for (std::uint32_t a = 0; a < (1u << nl); ++a) {
      const auto sizeA =
          static_cast<std::uint64_t>(__builtin_popcount(a));
      for (std::uint32_t b = 0; b < (1u << nr); ++b) {
        std::uint64_t edges = 0;
        for (unsigned j = 0; j < nr; ++j)
          if (b & (1u << j)) edges += __builtin_popcount(colmask[j] & a);
        detail::scan_fold(
            acc,
            detail::mixing_report_from_counts(
                s, sizeA, static_cast<std::uint64_t>(__builtin_popcount(b)),
                edges),
            qualify_ab);
      }
    }
    return acc;
  }

  // random mode; per-trial derived tapes keep results independent of the
  // worker partition
  const RandomTape scan = tape.sub("scan");
  auto run_range = [&](std::uint64_t lo, std::uint64_t hi,
                       MixingScanReport& out) {
    std::vector<std::uint8_t> inA(g.n_left());
    std::vector<std::uint32_t> B;
    for (std::uint64_t t = lo; t < hi; ++t) {
      RandomTape tr = scan.sub("trial", t);
      std::uint64_t sizeA = 0;
      for (std::uint64_t i = 0; i < g.n_left(); ++i) {
        inA[i] = static_cast<std::uint8_t>(tr.bit());
        sizeA += inA[i];
      }
      B.clear();
      for (std::uint64_t j = 0; j < g.n_right(); ++j)
        if (tr.bit()) B.push_back(static_cast<std::uint32_t>(j));
      std::uint64_t edges = 0;
      for (std::uint32_t j : B)
        for (std::uint32_t i : g.col(j)) edges += inA[i];
      detail::scan_fold(out,
                        detail::mixing_report_from_counts(s, sizeA, B.size(),
                                                          edges),
                        qualify_ab);
    }
  };

  if (workers <= 1) {
    run_range(0, trials, acc);
    return acc;
  }
  std::vector<MixingScanReport> parts(workers);
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (trials + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = std::min<std::uint64_t>(w * chunk, trials);
    const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, trials);
    pool.emplace_back(run_range, lo, hi, std::ref(parts[w]));
  }
  for (auto& th : pool) th.join();
  for (const auto& p : parts) detail::scan_merge(acc, p);
  return acc;
}

}  // namespace orthokey
