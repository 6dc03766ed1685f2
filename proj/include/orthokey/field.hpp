#pragma once

// Arithmetic in F_{2^n}, 1 <= n <= 32.  Elements are bit-packed polynomials
// over F_2 reduced modulo a fixed published irreducible (see docs/modulus_table.md).
// The modulus is pinned per degree so that every downstream artifact
// (enumerations, graphs, hashes, transcripts) is reproducible bit-for-bit.

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace orthokey {

// Low bits of the degree-n modulus; the leading x^n term is implicit.
// Low-weight irreducible polynomials, verified by trial division at
// construction time (and again in the test suite).
inline constexpr std::array<std::uint32_t, 33> kFieldModulusLow = {
    0x0,                                     // degree 0: unused
    0x1,  0x3,  0x3,  0x3,  0x5,  0x3,  0x3, // 1..7
    0x1B,                                    // 8:  x^8+x^4+x^3+x+1
    0x3,  0x9,  0x5,  0x9,  0x1B, 0x21, 0x3, // 9..15
    0x2B,                                    // 16: x^16+x^5+x^3+x+1
    0x9,  0x9,  0x27, 0x9,  0x5,  0x3,  0x21, // 17..23
    0x1B, 0x9,  0x1B, 0x27, 0x3,  0x5,  0x3, // 24..30
    0x9,                                     // 31
    0x8D,                                    // 32: x^32+x^7+x^3+x^2+1
};

namespace detail {

// product of two F_2[x] polynomials, no reduction (inputs < 2^32)
inline std::uint64_t clmul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    a <<= 1;
    b >>= 1;
  }
  return r;
}

// remainder of a modulo m (m with its leading term present)
inline std::uint64_t clmod(std::uint64_t a, std::uint64_t m) {
  const int dm = 63 - __builtin_clzll(m);
  while (a >> dm) {
    const int da = 63 - __builtin_clzll(a);
    a ^= m << (da - dm);
  }
  return a;
}

inline bool poly_irreducible(std::uint64_t m) {
  const int n = 63 - __builtin_clzll(m);
  if (n < 1) return false;
  for (int deg = 1; deg <= n / 2; ++deg)
    for (std::uint64_t low = 0; low < (std::uint64_t{1} << deg); ++low)
      if (clmod(m, (std::uint64_t{1} << deg) | low) == 0) return false;
  return true;
}

struct FieldTables {
  std::vector<std::uint32_t> exp;  // size 2(q-1), doubled to skip a mod
  std::vector<std::uint32_t> log;  // size q, log[0] unused
};

}  // namespace detail

class FieldSpec;
struct FieldElement {
  std::uint32_t value = 0;
  FieldSpec const* field = nullptr;  // non-owning; the spec outlives elements
};

class FieldSpec {
 public:
  explicit FieldSpec(unsigned degree) : deg_(degree) {
    if (degree < 1 || degree > 32)
      throw std::invalid_argument("field degree must be in [1,32], got " +
                                  std::to_string(degree));
    mod_low_ = kFieldModulusLow[degree];
    verify_modulus(degree, full_modulus());
    if (degree <= kTableDegreeCap) tables_ = build_tables();
  }

  unsigned degree() const { return deg_; }
  std::uint32_t modulus() const { return mod_low_; }  // low bits only
  std::uint64_t full_modulus() const {
    return (std::uint64_t{1} << deg_) | mod_low_;
  }
  std::uint64_t order() const { return std::uint64_t{1} << deg_; }

  bool operator==(const FieldSpec& o) const {
    return deg_ == o.deg_ && mod_low_ == o.mod_low_;
  }
  bool operator!=(const FieldSpec& o) const { return !(*this == o); }

  FieldElement element(std::uint64_t value) const {
    if (value >= order())
      throw std::invalid_argument("element value " + std::to_string(value) +
                                  " out of range for degree " +
                                  std::to_string(deg_));
    return FieldElement{static_cast<std::uint32_t>(value), this};
  }

  // raw-value kernels: no range or field checks, used by inner loops
  std::uint32_t mul_raw(std::uint32_t a, std::uint32_t b) const {
    if (tables_) {
      if (a == 0 || b == 0) return 0;
      return tables_->exp[tables_->log[a] + tables_->log[b]];
    }
    return static_cast<std::uint32_t>(
        detail::clmod(detail::clmul(a, b), full_modulus()));
  }

  std::uint32_t inv_raw(std::uint32_t a) const {
    if (a == 0) throw std::domain_error("inverse of zero field element");
    if (tables_) {
      const std::uint32_t qm1 = static_cast<std::uint32_t>(order() - 1);
      return tables_->exp[qm1 - tables_->log[a]];
    }
    // a^(q-2) by square and multiply
    std::uint32_t r = 1, base = a;
    std::uint64_t e = order() - 2;
    while (e) {
      if (e & 1) r = mul_raw(r, base);
      base = mul_raw(base, base);
      e >>= 1;
    }
    return r;
  }

 private:
  static constexpr unsigned kTableDegreeCap = 16;

  static void verify_modulus(unsigned degree, std::uint64_t m) {
    // trial division against every polynomial of degree <= n/2, memoized
    static std::array<std::once_flag, 33> flags;
    std::call_once(flags[degree], [&] {
      if (!detail::poly_irreducible(m))
        throw std::logic_error("modulus table entry for degree " +
                               std::to_string(degree) + " is reducible");
    });
  }

  std::shared_ptr<const detail::FieldTables> build_tables() const {
    const std::uint64_t q = order();
    const std::uint64_t qm1 = q - 1;
    // find a generator: order of g is q-1 iff g^((q-1)/p) != 1 for primes p|q-1
    std::vector<std::uint64_t> primes;
    std::uint64_t t = qm1;
    for (std::uint64_t p = 2; p * p <= t; ++p)
      if (t % p == 0) {
        primes.push_back(p);
        while (t % p == 0) t /= p;
      }
    if (t > 1) primes.push_back(t);
    auto pow_nt = [&](std::uint32_t a, std::uint64_t e) {
      std::uint32_t r = 1;
      while (e) {
        if (e & 1)
          r = static_cast<std::uint32_t>(
              detail::clmod(detail::clmul(r, a), full_modulus()));
        a = static_cast<std::uint32_t>(
            detail::clmod(detail::clmul(a, a), full_modulus()));
        e >>= 1;
      }
      return r;
    };
    std::uint32_t g = 2;
    if (deg_ == 1) g = 1;
    while (deg_ > 1) {
      bool primitive = true;
      for (std::uint64_t p : primes)
        if (pow_nt(g, qm1 / p) == 1) {
          primitive = false;
          break;
        }
      if (primitive) break;
      ++g;
    }
    auto tab = std::make_shared<detail::FieldTables>();
    tab->exp.resize(2 * qm1);
    tab->log.resize(q);
    std::uint32_t v = 1;
    for (std::uint64_t i = 0; i < qm1; ++i) {
      tab->exp[i] = v;
      tab->exp[i + qm1] = v;
      tab->log[v] = static_cast<std::uint32_t>(i);
      v = static_cast<std::uint32_t>(
          detail::clmod(detail::clmul(v, g), full_modulus()));
    }
    return tab;
  }

  unsigned deg_;
  std::uint32_t mod_low_;
  std::shared_ptr<const detail::FieldTables> tables_;
};

inline FieldSpec make_field(unsigned n) { return FieldSpec(n); }

namespace detail {
inline const FieldSpec& same_field(const FieldElement& a,
                                   const FieldElement& b) {
  if (!a.field || !b.field)
    throw std::invalid_argument("field element without a field");
  if (*a.field != *b.field)
    throw std::invalid_argument("field mismatch between operands");
  return *a.field;
}
}  // namespace detail

inline FieldElement add(const FieldElement& a, const FieldElement& b) {
  detail::same_field(a, b);
  return FieldElement{a.value ^ b.value, a.field};
}

inline FieldElement mul(const FieldElement& a, const FieldElement& b) {
  const FieldSpec& f = detail::same_field(a, b);
  return FieldElement{f.mul_raw(a.value, b.value), a.field};
}

inline FieldElement inv(const FieldElement& a) {
  if (!a.field) throw std::invalid_argument("field element without a field");
  return FieldElement{a.field->inv_raw(a.value), a.field};
}

inline FieldElement dot(std::span<const FieldElement> u,
                        std::span<const FieldElement> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("dot: length mismatch");
  if (u.empty()) throw std::invalid_argument("dot: empty vectors");
  const FieldSpec& f = detail::same_field(u[0], v[0]);
  std::uint32_t acc = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    detail::same_field(u[i], v[i]);
    acc ^= f.mul_raw(u[i].value, v[i].value);
  }
  return FieldElement{acc, u[0].field};
}

}  // namespace orthokey
