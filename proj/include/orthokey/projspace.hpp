#pragma once

// Directions (projective points) in F_q^dim with the standard dot form:
// canonicalization, a closed-form enumeration order, orthogonal complements,
// exact counting, and exact-uniform sampling of pairwise-orthogonal triples.
//
// A direction is the class of a nonzero vector under scaling; the canonical
// representative has its first nonzero coordinate equal to 1.  In
// characteristic 2 the form d·d = (sum of coords)^2 vanishes on a hyperplane,
// so self-orthogonal (isotropic) directions exist and are kept throughout:
// there are exactly N(q,dim-1) of them.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "field.hpp"
#include "rng.hpp"

namespace orthokey {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr unsigned kMaxDim = 8;
inline constexpr std::uint64_t kMaxEnumeration = 4'000'000;

namespace detail {

using RawVec = std::array<std::uint32_t, kMaxDim>;

inline std::uint32_t dot_raw(const FieldSpec& f, const RawVec& a,
                             const RawVec& b, unsigned dim) {
  std::uint32_t acc = 0;
  for (unsigned i = 0; i < dim; ++i) acc ^= f.mul_raw(a[i], b[i]);
  return acc;
}

// scale so the first nonzero coordinate becomes 1; false if v = 0
inline bool canonicalize_raw(const FieldSpec& f, RawVec& v, unsigned dim) {
  unsigned p = 0;
  while (p < dim && v[p] == 0) ++p;
  if (p == dim) return false;
  if (v[p] != 1) {
    const std::uint32_t s = f.inv_raw(v[p]);
    v[p] = 1;
    for (unsigned i = p + 1; i < dim; ++i) v[i] = f.mul_raw(s, v[i]);
  }
  return true;
}

inline bool raw_equal(const RawVec& a, const RawVec& b, unsigned dim) {
  for (unsigned i = 0; i < dim; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// reduced row echelon form over the field; returns rank, pivot columns in
// pivots[0..rank)
inline unsigned rref_raw(const FieldSpec& f, RawVec* rows, unsigned nrows,
                         unsigned dim, unsigned* pivots) {
  unsigned rank = 0;
  for (unsigned col = 0; col < dim && rank < nrows; ++col) {
    unsigned pr = rank;
    while (pr < nrows && rows[pr][col] == 0) ++pr;
    if (pr == nrows) continue;
    std::swap(rows[pr], rows[rank]);
    const std::uint32_t s = f.inv_raw(rows[rank][col]);
    for (unsigned j = col; j < dim; ++j)
      rows[rank][j] = f.mul_raw(s, rows[rank][j]);
    for (unsigned r = 0; r < nrows; ++r) {
      if (r == rank || rows[r][col] == 0) continue;
      const std::uint32_t c = rows[r][col];
      for (unsigned j = col; j < dim; ++j)
        rows[r][j] ^= f.mul_raw(c, rows[rank][j]);
    }
    pivots[rank++] = col;
  }
  return rank;
}

// basis of { v : rows·v = 0 }; returns the basis size dim - rank
inline unsigned nullspace_basis_raw(const FieldSpec& f, const RawVec* in_rows,
                                    unsigned nrows, unsigned dim,
                                    RawVec* basis, unsigned* rank_out) {
  std::array<RawVec, kMaxDim> rows{};
  for (unsigned r = 0; r < nrows; ++r) rows[r] = in_rows[r];
  std::array<unsigned, kMaxDim> pivots{};
  const unsigned rank = rref_raw(f, rows.data(), nrows, dim, pivots.data());
  if (rank_out) *rank_out = rank;
  std::array<bool, kMaxDim> is_pivot{};
  for (unsigned r = 0; r < rank; ++r) is_pivot[pivots[r]] = true;
  unsigned nb = 0;
  for (unsigned fc = 0; fc < dim; ++fc) {
    if (is_pivot[fc]) continue;
    RawVec v{};
    v[fc] = 1;
    for (unsigned r = 0; r < rank; ++r) v[pivots[r]] = rows[r][fc];
    basis[nb++] = v;
  }
  return nb;
}

// visit every direction of the span of `basis` exactly once: canonical
// coefficient patterns (leading coefficient 1) are a transversal of the
// projective classes of the coefficient space.  Fn may return void, or bool
// with false meaning stop early.
template <typename Fn>
inline void for_each_subspace_direction(const FieldSpec& f, const RawVec* basis,
                                        unsigned nb, unsigned dim, Fn&& fn) {
  const std::uint64_t q = f.order();
  RawVec coeff{};
  for (unsigned lead = 0; lead < nb; ++lead) {
    for (unsigned i = 0; i < nb; ++i) coeff[i] = 0;
    coeff[lead] = 1;
    const unsigned tail = nb - lead - 1;
    std::uint64_t combos = 1;
    for (unsigned i = 0; i < tail; ++i) combos *= q;
    for (std::uint64_t c = 0; c < combos; ++c) {
      std::uint64_t rem = c;
      for (unsigned i = nb; i-- > lead + 1;) {
        coeff[i] = static_cast<std::uint32_t>(rem % q);
        rem /= q;
      }
      RawVec v{};
      for (unsigned i = lead; i < nb; ++i) {
        if (coeff[i] == 0) continue;
        for (unsigned j = 0; j < dim; ++j)
          v[j] ^= f.mul_raw(coeff[i], basis[i][j]);
      }
      canonicalize_raw(f, v, dim);
      if constexpr (std::is_same_v<std::invoke_result_t<Fn&, const RawVec&>,
                                   bool>) {
        if (!fn(v)) return;
      } else {
        fn(v);
      }
    }
  }
}

inline RawVec uniform_in_subspace_raw(const FieldSpec& f, const RawVec* basis,
                                      unsigned nb, unsigned dim,
                                      RandomTape& tape) {
  const std::uint64_t q = f.order();
  for (;;) {
    RawVec v{};
    bool nonzero = false;
    for (unsigned i = 0; i < nb; ++i) {
      const std::uint32_t c = static_cast<std::uint32_t>(tape.below(q));
      if (c == 0) continue;
      nonzero = true;
      for (unsigned j = 0; j < dim; ++j) v[j] ^= f.mul_raw(c, basis[i][j]);
    }
    if (!nonzero) continue;
    canonicalize_raw(f, v, dim);
    return v;
  }
}

inline unsigned __int128 below128(RandomTape& tape, unsigned __int128 m) {
  if (m == 0) return 0;
  const unsigned __int128 full = ~static_cast<unsigned __int128>(0);
  const unsigned __int128 threshold = (full - m + 1) % m;  // 2^128 mod m
  for (;;) {
    unsigned __int128 r = (static_cast<unsigned __int128>(tape.next()) << 64) |
                          tape.next();
    if (r >= threshold) return r % m;
  }
}

}  // namespace detail

class Direction;
namespace detail {
inline Direction make_direction(const FieldSpec& f, const RawVec& v,
                                unsigned dim);
}

class Direction {
 public:
  const FieldSpec& field() const { return field_; }
  unsigned dim() const { return dim_; }
  std::uint32_t raw(unsigned i) const { return c_[i]; }
  std::span<const std::uint32_t> coords_raw() const { return {c_.data(), dim_}; }
  FieldElement coord(unsigned i) const {
    if (i >= dim_) throw std::out_of_range("direction coordinate index");
    return FieldElement{c_[i], &field_};
  }

  bool operator==(const Direction& o) const {
    return dim_ == o.dim_ && field_ == o.field_ &&
           detail::raw_equal(c_, o.c_, dim_);
  }
  bool operator!=(const Direction& o) const { return !(*this == o); }

 private:
  Direction(const FieldSpec& f, const detail::RawVec& v, unsigned dim)
      : field_(f), c_(v), dim_(dim) {}
  friend Direction detail::make_direction(const FieldSpec&,
                                          const detail::RawVec&, unsigned);

  FieldSpec field_;
  detail::RawVec c_;
  unsigned dim_;
};

namespace detail {
inline Direction make_direction(const FieldSpec& f, const RawVec& v,
                                unsigned dim) {
  return Direction(f, v, dim);
}
}  // namespace detail

inline Direction canonicalize(const FieldSpec& f,
                              std::span<const std::uint32_t> v) {
  if (v.empty() || v.size() > kMaxDim)
    throw std::invalid_argument("vector dimension must be in [1," +
                                std::to_string(kMaxDim) + "]");
  detail::RawVec raw{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= f.order())
      throw std::invalid_argument("coordinate out of field range");
    raw[i] = v[i];
  }
  if (!detail::canonicalize_raw(f, raw, static_cast<unsigned>(v.size())))
    throw std::invalid_argument("cannot canonicalize the zero vector");
  return detail::make_direction(f, raw, static_cast<unsigned>(v.size()));
}

inline Direction canonicalize(std::span<const FieldElement> v) {
  if (v.empty()) throw std::invalid_argument("cannot canonicalize empty vector");
  std::array<std::uint32_t, kMaxDim> raw{};
  if (v.size() > kMaxDim)
    throw std::invalid_argument("vector dimension exceeds supported maximum");
  for (std::size_t i = 0; i < v.size(); ++i) {
    detail::same_field(v[0], v[i]);
    raw[i] = v[i].value;
  }
  return canonicalize(*v[0].field,
                      std::span<const std::uint32_t>(raw.data(), v.size()));
}

inline void require_power_of_two(std::uint64_t q) {
  if (q < 2 || (q & (q - 1)) != 0)
    throw std::invalid_argument("q must be a power of 2, got " +
                                std::to_string(q));
}

// N(q,dim) = (q^dim - 1)/(q - 1), the number of directions in F_q^dim
inline BigInt count_directions(std::uint64_t q, unsigned dim) {
  require_power_of_two(q);
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  BigInt acc = 0, p = 1;
  for (unsigned i = 0; i < dim; ++i) {
    acc += p;
    p *= q;
  }
  return acc;
}

inline std::uint64_t count_directions_u64(std::uint64_t q, unsigned dim) {
  const BigInt n = count_directions(q, dim);
  if (n > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw std::length_error("direction count exceeds 64 bits");
  return n.convert_to<std::uint64_t>();
}

// ordered orthogonal pairs (y,z), z in y-perp; exact, degenerate (y,y)
// pairs at isotropic y included
inline BigInt count_orthogonal_pairs(std::uint64_t q, unsigned dim) {
  if (dim < 2) throw std::invalid_argument("pairs need dim >= 2");
  return count_directions(q, dim) * count_directions(q, dim - 1);
}

// ordered pairwise-orthogonal triples (x,y,z).  The naive per-stage product
// N(dim)·N(dim-1)·N(dim-2) undercounts: when x is isotropic the stage count
// for z given y = x is N(dim-1), not N(dim-2).  Adding the correction
// N_k·(N_k - N_{k-1}) for the N_k isotropic x collapses the total to N_k^3
// with k = dim-1 (since 1 + q·N_{k-1} = N_k).  Verified exhaustively in the
// test suite for q in {2,4,8}, dim in {3,4}.
inline BigInt count_triples(std::uint64_t q, unsigned dim) {
  if (dim < 3) throw std::invalid_argument("triples need dim >= 3");
  const BigInt nk = count_directions(q, dim - 1);
  return nk * nk * nk;
}

namespace detail {

// ordinal in the canonical enumeration: blocks by position of the leading 1,
// remaining coordinates read as base-q digits
inline std::uint64_t index_of_raw(const FieldSpec& f, const RawVec& v,
                                  unsigned dim) {
  const std::uint64_t q = f.order();
  unsigned p = 0;
  while (v[p] == 0) ++p;
  std::uint64_t s = 1;
  for (unsigned i = 0; i + 1 < dim; ++i) s *= q;  // q^(dim-1)
  std::uint64_t block = 0;
  for (unsigned j = 0; j < p; ++j) {
    block += s;
    s /= q;
  }
  std::uint64_t off = 0;
  for (unsigned i = p + 1; i < dim; ++i) off = off * q + v[i];
  return block + off;
}

}  // namespace detail

inline std::uint64_t index_of(const Direction& d) {
  detail::RawVec v{};
  for (unsigned i = 0; i < d.dim(); ++i) v[i] = d.raw(i);
  return detail::index_of_raw(d.field(), v, d.dim());
}

inline Direction direction_at(const FieldSpec& f, unsigned dim,
                              std::uint64_t ordinal) {
  const std::uint64_t q = f.order();
  std::uint64_t s = 1;
  for (unsigned i = 0; i + 1 < dim; ++i) s *= q;
  unsigned p = 0;
  while (p < dim && ordinal >= s) {
    ordinal -= s;
    s /= q;
    ++p;
  }
  if (p >= dim) throw std::out_of_range("direction ordinal out of range");
  detail::RawVec v{};
  v[p] = 1;
  for (unsigned i = dim; i-- > p + 1;) {
    v[i] = static_cast<std::uint32_t>(ordinal % q);
    ordinal /= q;
  }
  return detail::make_direction(f, v, dim);
}

inline std::vector<Direction> enumerate_directions(const FieldSpec& f,
                                                   unsigned dim) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("dim must be in [1," + std::to_string(kMaxDim) +
                                "]");
  const BigInt total = count_directions(f.order(), dim);
  if (total > kMaxEnumeration)
    throw std::length_error("direction enumeration capacity exceeded: " +
                            total.str());
  const std::uint64_t n = total.convert_to<std::uint64_t>();
  std::vector<Direction> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(direction_at(f, dim, i));
  return out;
}

inline bool is_orthogonal(const Direction& a, const Direction& b) {
  if (a.field() != b.field() || a.dim() != b.dim())
    throw std::invalid_argument("orthogonality needs matching field and dim");
  detail::RawVec u{}, v{};
  for (unsigned i = 0; i < a.dim(); ++i) {
    u[i] = a.raw(i);
    v[i] = b.raw(i);
  }
  return detail::dot_raw(a.field(), u, v, a.dim()) == 0;
}

inline bool is_isotropic(const Direction& d) { return is_orthogonal(d, d); }

// all directions orthogonal to every constraint; constraints must be
// linearly independent (a dependent list is an error, not deduplicated)
inline std::vector<Direction> orthogonal_to(
    std::span<const Direction> constraints) {
  if (constraints.empty())
    throw std::invalid_argument("orthogonal_to needs at least one constraint");
  const FieldSpec& f = constraints[0].field();
  const unsigned dim = constraints[0].dim();
  std::array<detail::RawVec, kMaxDim> rows{};
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (constraints[i].field() != f || constraints[i].dim() != dim)
      throw std::invalid_argument("constraint field/dim mismatch");
    for (unsigned j = 0; j < dim; ++j) rows[i][j] = constraints[i].raw(j);
  }
  std::array<detail::RawVec, kMaxDim> basis{};
  unsigned rank = 0;
  const unsigned nb = detail::nullspace_basis_raw(
      f, rows.data(), static_cast<unsigned>(constraints.size()), dim,
      basis.data(), &rank);
  if (rank < constraints.size())
    throw std::invalid_argument("dependent constraints in orthogonal_to");
  std::vector<Direction> out;
  detail::for_each_subspace_direction(
      f, basis.data(), nb, dim, [&](const detail::RawVec& v) {
        out.push_back(detail::make_direction(f, v, dim));
      });
  std::sort(out.begin(), out.end(),
            [](const Direction& a, const Direction& b) {
              return index_of(a) < index_of(b);
            });
  return out;
}

inline Direction uniform_direction(const FieldSpec& f, unsigned dim,
                                   RandomTape& tape) {
  const std::uint64_t q = f.order();
  for (;;) {
    detail::RawVec v{};
    for (unsigned i = 0; i < dim; ++i)
      v[i] = static_cast<std::uint32_t>(tape.below(q));
    if (detail::canonicalize_raw(f, v, dim))
      return detail::make_direction(f, v, dim);
  }
}

// exact-uniform sample from all ordered pairwise-orthogonal triples.
// Staged sampling with uniform stages is NOT uniform here: the stage counts
// depend on whether x is isotropic (y = x is then admissible and the z-stage
// count jumps from N_{k-1} to N_k).  The stages below carry the exact
// class weights, which makes P(x,y,z) = 1/N_k^3 for every admissible triple.
inline std::array<Direction, 3> sample_orthogonal_triple(const FieldSpec& f,
                                                         unsigned dim,
                                                         RandomTape& tape) {
  if (dim < 3 || dim > kMaxDim)
    throw std::invalid_argument("triples need dim in [3," +
                                std::to_string(kMaxDim) + "]");
  const std::uint64_t q = f.order();
  const BigInt nk_b = count_directions(q, dim - 1);
  if (nk_b > BigInt(std::uint64_t{1} << 42))
    throw std::length_error("triple sampling scale exceeds 2^42 directions");
  const std::uint64_t nk = nk_b.convert_to<std::uint64_t>();
  const std::uint64_t nk1 = count_directions_u64(q, dim - 2);
  const std::uint64_t nall = count_directions_u64(q, dim);
  const std::uint64_t deg_non = nk * nk1;            // triples with this x
  const std::uint64_t deg_iso = deg_non + nk - nk1;  // isotropic x has more
  const unsigned __int128 w_iso =
      static_cast<unsigned __int128>(nk) * deg_iso;
  const unsigned __int128 total =
      w_iso + static_cast<unsigned __int128>(nall - nk) * deg_non;

  // stage 1: x, weighted by its triple degree
  Direction x = [&] {
    if (detail::below128(tape, total) < w_iso) {
      // uniform isotropic direction: the isotropic set is the hyperplane
      // "sum of coordinates = 0" (Frobenius), spanned by e_i + e_{dim-1}
      std::array<detail::RawVec, kMaxDim> hb{};
      for (unsigned i = 0; i + 1 < dim; ++i) {
        hb[i][i] = 1;
        hb[i][dim - 1] = 1;
      }
      const detail::RawVec v =
          detail::uniform_in_subspace_raw(f, hb.data(), dim - 1, dim, tape);
      return detail::make_direction(f, v, dim);
    }
    for (;;) {
      Direction c = uniform_direction(f, dim, tape);
      if (!is_isotropic(c)) return c;
    }
  }();

  detail::RawVec xv{};
  for (unsigned i = 0; i < dim; ++i) xv[i] = x.raw(i);
  std::array<detail::RawVec, kMaxDim> xperp{};
  const unsigned nbx =
      detail::nullspace_basis_raw(f, &xv, 1, dim, xperp.data(), nullptr);

  // stage 2: y in x-perp; when x is isotropic, y = x carries weight N_k
  // and every other y carries N_{k-1}
  const bool x_iso = is_isotropic(x);
  Direction y = [&] {
    if (x_iso && tape.below(deg_iso) < nk) return x;
    for (;;) {
      const detail::RawVec v =
          detail::uniform_in_subspace_raw(f, xperp.data(), nbx, dim, tape);
      Direction c = detail::make_direction(f, v, dim);
      if (!x_iso || c != x) return c;
    }
  }();

  // stage 3: z uniform on the orthogonal complement of {x} or {x,y}
  Direction z = [&] {
    if (y == x) {
      const detail::RawVec v =
          detail::uniform_in_subspace_raw(f, xperp.data(), nbx, dim, tape);
      return detail::make_direction(f, v, dim);
    }
    std::array<detail::RawVec, 2> rows{};
    rows[0] = xv;
    for (unsigned i = 0; i < dim; ++i) rows[1][i] = y.raw(i);
    std::array<detail::RawVec, kMaxDim> basis{};
    const unsigned nb = detail::nullspace_basis_raw(f, rows.data(), 2, dim,
                                                    basis.data(), nullptr);
    const detail::RawVec v =
        detail::uniform_in_subspace_raw(f, basis.data(), nb, dim, tape);
    return detail::make_direction(f, v, dim);
  }();

  return {x, y, z};
}

}  // namespace orthokey
