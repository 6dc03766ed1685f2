#pragma once

// Fixed-width encodings of directions and GF(2)-linear universal hashing.
// A hash is a random binary matrix applied to an encoded input; matrices are
// drawn from labeled tape streams so that independently labeled hashes are
// independent and equal labels reproduce the same matrix.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "projspace.hpp"
#include "rng.hpp"

namespace orthokey {

// packed bit string, bit i = (words[i/64] >> (i%64)) & 1
struct BitStr {
  std::vector<std::uint64_t> words;
  unsigned bits = 0;

  bool bit(unsigned i) const { return (words[i >> 6] >> (i & 63)) & 1; }
  void set(unsigned i, bool b) {
    if (b)
      words[i >> 6] |= std::uint64_t{1} << (i & 63);
    else
      words[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }
  static BitStr zeros(unsigned n) {
    return BitStr{std::vector<std::uint64_t>((n + 63) / 64, 0), n};
  }
  std::uint64_t low64() const { return words.empty() ? 0 : words[0]; }
  bool operator==(const BitStr& o) const {
    return bits == o.bits && words == o.words;
  }
};

// fixed-width big-endian concatenation of the canonical coordinates: each of
// the dim coordinates contributes exactly n bits, most significant first, so
// distinct directions encode to distinct strings of the same length
inline BitStr encode(const Direction& d) {
  const unsigned n = d.field().degree();
  BitStr s = BitStr::zeros(d.dim() * n);
  unsigned pos = 0;
  for (unsigned i = 0; i < d.dim(); ++i) {
    const std::uint32_t c = d.raw(i);
    for (unsigned b = n; b-- > 0;) s.set(pos++, (c >> b) & 1);
  }
  return s;
}

inline BitStr encode(const Direction& a, const Direction& b) {
  BitStr ea = encode(a), eb = encode(b);
  BitStr s = BitStr::zeros(ea.bits + eb.bits);
  for (unsigned i = 0; i < ea.bits; ++i) s.set(i, ea.bit(i));
  for (unsigned i = 0; i < eb.bits; ++i) s.set(ea.bits + i, eb.bit(i));
  return s;
}

inline BitStr encode(const Direction& a, const Direction& b,
                     const Direction& c) {
  BitStr e = encode(a, b), ec = encode(c);
  BitStr s = BitStr::zeros(e.bits + ec.bits);
  for (unsigned i = 0; i < e.bits; ++i) s.set(i, e.bit(i));
  for (unsigned i = 0; i < ec.bits; ++i) s.set(e.bits + i, ec.bit(i));
  return s;
}

// random GF(2) matrix, out_bits x in_bits, rows drawn in order from the
// stream `tape.sub(label)`.  Row i depends only on the label and on i, so a
// matrix with fewer output bits is a prefix of one with more: hashes with
// nested output lengths are consistent truncations of each other.
class BinaryMatrix {
 public:
  BinaryMatrix(unsigned out_bits, unsigned in_bits, RandomTape& tape,
               const std::string& label)
      : out_(out_bits), in_(in_bits), stride_((in_bits + 63) / 64) {
    if (in_bits == 0) throw std::invalid_argument("hash input width is zero");
    rows_.resize(std::size_t{out_} * stride_);
    RandomTape s = tape.sub(label);
    seed_ = s.root();
    label_ = s.label();
    const unsigned tail = in_ & 63;
    const std::uint64_t mask =
        tail ? ((std::uint64_t{1} << tail) - 1) : ~std::uint64_t{0};
    for (std::size_t w = 0; w < rows_.size(); ++w) {
      rows_[w] = s.next();
      if ((w + 1) % stride_ == 0) rows_[w] &= mask;
    }
  }

  // deterministic matrix copying the first out_bits input bits; the lossless
  // degenerate hash used by diagnostics and tests
  static BinaryMatrix identity_prefix(unsigned out_bits, unsigned in_bits) {
    if (in_bits == 0 || out_bits > in_bits)
      throw std::invalid_argument("identity prefix needs out_bits <= in_bits");
    BinaryMatrix m;
    m.out_ = out_bits;
    m.in_ = in_bits;
    m.stride_ = (in_bits + 63) / 64;
    m.label_ = "identity";
    m.rows_.assign(std::size_t{out_bits} * m.stride_, 0);
    for (unsigned i = 0; i < out_bits; ++i)
      m.rows_[std::size_t{i} * m.stride_ + (i >> 6)] = std::uint64_t{1}
                                                       << (i & 63);
    return m;
  }

  unsigned out_bits() const { return out_; }
  unsigned in_bits() const { return in_; }

  // y_i = <row_i, x> over GF(2)
  BitStr apply(const BitStr& x) const {
    if (x.bits != in_)
      throw std::invalid_argument("hash input width mismatch: " +
                                  std::to_string(x.bits) + " vs " +
                                  std::to_string(in_));
    BitStr y = BitStr::zeros(out_);
    for (unsigned i = 0; i < out_; ++i) {
      unsigned par = 0;
      const std::uint64_t* row = rows_.data() + std::size_t{i} * stride_;
      for (unsigned w = 0; w < stride_; ++w)
        par ^= __builtin_popcountll(row[w] & x.words[w]);
      if (par & 1) y.set(i, true);
    }
    return y;
  }

  std::uint64_t apply64(const BitStr& x) const {
    if (out_ > 64) throw std::logic_error("apply64 needs out_bits <= 64");
    return apply(x).low64();
  }

  // fast path for inputs that fit one word; bit i of the result is the
  // parity of row_i AND x
  std::uint64_t apply_word(std::uint64_t x) const {
    if (in_ > 64 || out_ > 64)
      throw std::logic_error("apply_word needs in_bits, out_bits <= 64");
    std::uint64_t y = 0;
    for (unsigned i = 0; i < out_; ++i)
      y |= static_cast<std::uint64_t>(__builtin_popcountll(rows_[i] & x) & 1)
           << i;
    return y;
  }

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  // header (rows, cols, seed, label) + packed row bits, for debugging
  std::string hex_dump() const {
    char head[96];
    std::snprintf(head, sizeof head, "%u x %u seed=%016llx label=", out_, in_,
                  static_cast<unsigned long long>(seed_));
    std::string s = head;
    s += label_;
    for (unsigned i = 0; i < out_; ++i) {
      s += i ? "," : " rows=";
      for (unsigned w = 0; w < stride_; ++w) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(
                          rows_[std::size_t{i} * stride_ + w]));
        s += buf;
      }
    }
    return s;
  }

 private:
  BinaryMatrix() = default;

  unsigned out_ = 0, in_ = 0, stride_ = 0;
  std::uint64_t seed_ = 0;
  std::string label_;
  std::vector<std::uint64_t> rows_;  // row-major, stride_ words per row
};

namespace detail {

inline std::uint16_t bit_reverse16(std::uint16_t v) {
  static const std::vector<std::uint16_t> tab = [] {
    std::vector<std::uint16_t> t(65536);
    for (std::uint32_t i = 0; i < 65536; ++i) {
      std::uint16_t r = 0;
      for (unsigned b = 0; b < 16; ++b)
        r = static_cast<std::uint16_t>(r | (((i >> b) & 1u) << (15 - b)));
      t[i] = r;
    }
    return t;
  }();
  return tab[v];
}

// value of an n-bit chunk with its bits reversed (MSB of c lands in bit 0)
inline std::uint64_t reverse_low_bits(std::uint32_t c, unsigned n) {
  const std::uint32_t r32 =
      (static_cast<std::uint32_t>(bit_reverse16(
           static_cast<std::uint16_t>(c & 0xFFFF)))
       << 16) |
      bit_reverse16(static_cast<std::uint16_t>(c >> 16));
  return r32 >> (32 - n);
}

// single-word encoding with the same bit layout as encode(Direction):
// coordinate i contributes its n bits MSB-first at positions [i*n, (i+1)*n);
// requires dim * degree <= 64
inline std::uint64_t encode_word(const FieldSpec& f, const RawVec& v,
                                 unsigned dim) {
  const unsigned n = f.degree();
  std::uint64_t w = 0;
  for (unsigned i = 0; i < dim; ++i)
    w |= reverse_low_bits(v[i], n) << (i * n);
  return w;
}

}  // namespace detail

inline BinaryMatrix sample_matrix(RandomTape& tape, const std::string& label,
                                  unsigned out_bits, unsigned in_bits) {
  return BinaryMatrix(out_bits, in_bits, tape, label);
}

inline BitStr apply_hash(const BinaryMatrix& m, const BitStr& x) {
  return m.apply(x);
}

struct CollisionStats {
  unsigned out_bits = 0;
  std::uint64_t pairs = 0;
  std::uint64_t collisions = 0;
  double rate = 0.0;
  double expected = 0.0;  // 2^-out_bits
  double sigma = 0.0;     // binomial std dev of the rate estimate
};

// empirical collision rate of fresh matrices on random distinct inputs.
// Each pair draws its own matrix, so the collision indicator is exactly
// Bernoulli(2^-out_bits) by pairwise universality.
inline CollisionStats collision_stats(unsigned out_bits, unsigned in_bits,
                                      std::uint64_t pairs, RandomTape& tape) {
  if (out_bits == 0 || out_bits > 24)
    throw std::invalid_argument("collision_stats wants out_bits in [1,24]");
  CollisionStats st;
  st.out_bits = out_bits;
  st.pairs = pairs;
  st.expected = std::pow(2.0, -static_cast<double>(out_bits));
  RandomTape inputs = tape.sub("inputs");
  for (std::uint64_t p = 0; p < pairs; ++p) {
    BitStr a = BitStr::zeros(in_bits), b = BitStr::zeros(in_bits);
    do {
      for (auto& w : a.words) w = inputs.next();
      for (auto& w : b.words) w = inputs.next();
      const unsigned tail = in_bits & 63;
      if (tail) {
        const std::uint64_t mask = (std::uint64_t{1} << tail) - 1;
        a.words.back() &= mask;
        b.words.back() &= mask;
      }
    } while (a == b);
    BinaryMatrix m(out_bits, in_bits, tape,
                   "pair/" + std::to_string(p));
    if (m.apply(a) == m.apply(b)) ++st.collisions;
  }
  st.rate = pairs ? static_cast<double>(st.collisions) / pairs : 0.0;
  st.sigma = pairs ? std::sqrt(st.expected * (1.0 - st.expected) /
                               static_cast<double>(pairs))
                   : 0.0;
  return st;
}

}  // namespace orthokey
