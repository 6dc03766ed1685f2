#pragma once

// Exact Shannon entropy over finitely supported joint distributions, the
// standard identity catalog for triples, inequality checkers used by the
// secrecy analysis, and the closed-form profile of uniform orthogonal
// triples.
//
// Probabilities are exact rationals while the support stays small (merging
// marginal cells is then exact; only the final log2 is floating point) and
// plain doubles above the cutoff.  Identity checks use 1e-9, loose enough
// for the double path and far below any real violation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "projspace.hpp"
#include "rng.hpp"

namespace orthokey {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr std::size_t kExactSupportCap = 100'000;

class JointDistribution {
 public:
  // exact-rational entries; switches itself to double mode above the cap
  JointDistribution(std::vector<std::string> names,
                    std::vector<std::vector<std::uint32_t>> tuples,
                    std::vector<Rational> probs)
      : names_(std::move(names)) {
    init_tuples(tuples);
    if (probs.size() != count_)
      throw std::invalid_argument("probability count mismatch");
    exact_ = count_ <= kExactSupportCap;
    Rational sum = 0;
    for (const Rational& p : probs) {
      if (p < 0) throw std::invalid_argument("negative probability");
      sum += p;
    }
    const double off = boost::multiprecision::abs(Rational(sum - 1))
                           .convert_to<double>();
    if (off > 1e-12)
      throw std::invalid_argument("probabilities sum to " +
                                  std::to_string(sum.convert_to<double>()));
    if (exact_)
      pr_ = std::move(probs);
    else {
      pd_.reserve(count_);
      for (const Rational& p : probs) pd_.push_back(p.convert_to<double>());
    }
  }

  JointDistribution(std::vector<std::string> names,
                    std::vector<std::vector<std::uint32_t>> tuples,
                    std::vector<double> probs)
      : names_(std::move(names)), exact_(false), pd_(std::move(probs)) {
    init_tuples(tuples);
    if (pd_.size() != count_)
      throw std::invalid_argument("probability count mismatch");
    double sum = 0;
    for (double p : pd_) {
      if (p < 0) throw std::invalid_argument("negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("probabilities sum to " +
                                  std::to_string(sum));
  }

  static JointDistribution from_counts(
      std::vector<std::string> names,
      std::vector<std::vector<std::uint32_t>> tuples,
      const std::vector<std::uint64_t>& counts) {
    BigInt total = 0;
    for (std::uint64_t c : counts) total += c;
    if (total == 0) throw std::invalid_argument("empty count table");
    std::vector<Rational> probs;
    probs.reserve(counts.size());
    for (std::uint64_t c : counts) probs.emplace_back(BigInt(c), total);
    return JointDistribution(std::move(names), std::move(tuples),
                             std::move(probs));
  }

  unsigned nvars() const { return static_cast<unsigned>(names_.size()); }
  std::size_t size() const { return count_; }
  bool exact() const { return exact_; }
  const std::vector<std::string>& names() const { return names_; }
  std::uint32_t value(std::size_t entry, unsigned var) const {
    return values_[entry * names_.size() + var];
  }
  double prob(std::size_t entry) const {
    return exact_ ? pr_[entry].convert_to<double>() : pd_[entry];
  }
  const Rational& prob_exact(std::size_t entry) const {
    if (!exact_) throw std::logic_error("distribution is in double mode");
    return pr_[entry];
  }

  std::vector<unsigned> resolve(const std::vector<std::string>& vars) const {
    std::vector<unsigned> idx;
    idx.reserve(vars.size());
    for (const std::string& v : vars) {
      const auto it = std::find(names_.begin(), names_.end(), v);
      if (it == names_.end())
        throw std::invalid_argument("unknown variable: " + v);
      idx.push_back(static_cast<unsigned>(it - names_.begin()));
    }
    return idx;
  }

 private:
  void init_tuples(const std::vector<std::vector<std::uint32_t>>& tuples) {
    if (names_.empty()) throw std::invalid_argument("no variables");
    count_ = tuples.size();
    if (count_ == 0) throw std::invalid_argument("empty support");
    values_.reserve(count_ * names_.size());
    for (const auto& t : tuples) {
      if (t.size() != names_.size())
        throw std::invalid_argument("tuple arity mismatch");
      values_.insert(values_.end(), t.begin(), t.end());
    }
    auto sorted = tuples;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("duplicate support tuples");
  }

  std::vector<std::string> names_;
  std::size_t count_ = 0;
  std::vector<std::uint32_t> values_;  // flat, nvars per entry
  bool exact_ = true;
  std::vector<Rational> pr_;
  std::vector<double> pd_;
};

namespace detail {

// entropy of the marginal on the given variable indexes: merge projected
// tuples exactly (or in doubles), then -sum p log2 p
inline double entropy_on(const JointDistribution& d,
                         const std::vector<unsigned>& idx) {
  struct Row {
    std::vector<std::uint32_t> key;
    std::size_t entry;
  };
  std::vector<Row> rows;
  rows.reserve(d.size());
  for (std::size_t e = 0; e < d.size(); ++e) {
    Row r;
    r.key.reserve(idx.size());
    for (unsigned v : idx) r.key.push_back(d.value(e, v));
    r.entry = e;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.key < b.key; });
  double h = 0;
  if (d.exact()) {
    std::size_t i = 0;
    while (i < rows.size()) {
      Rational cell = d.prob_exact(rows[i].entry);
      std::size_t j = i + 1;
      while (j < rows.size() && rows[j].key == rows[i].key)
        cell += d.prob_exact(rows[j++].entry);
      const double p = cell.convert_to<double>();
      if (p > 0) h -= p * std::log2(p);
      i = j;
    }
  } else {
    std::size_t i = 0;
    while (i < rows.size()) {
      double cell = d.prob(rows[i].entry);
      std::size_t j = i + 1;
      while (j < rows.size() && rows[j].key == rows[i].key)
        cell += d.prob(rows[j++].entry);
      if (cell > 0) h -= cell * std::log2(cell);
      i = j;
    }
  }
  return h;
}

inline std::vector<unsigned> concat_disjoint(
    const JointDistribution& d, std::initializer_list<const std::vector<std::string>*> groups) {
  std::vector<std::string> all;
  for (const auto* g : groups) all.insert(all.end(), g->begin(), g->end());
  std::vector<std::string> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("variable groups overlap");
  return d.resolve(all);
}

}  // namespace detail

inline double entropy(const JointDistribution& d,
                      const std::vector<std::string>& vars) {
  if (vars.empty()) throw std::invalid_argument("entropy of empty set");
  return detail::entropy_on(d, d.resolve(vars));
}

// I(X:Y) or I(X:Y|Z): H(XZ) + H(YZ) - H(XYZ) - H(Z)
inline double mutual_info(const JointDistribution& d,
                          const std::vector<std::string>& X,
                          const std::vector<std::string>& Y,
                          const std::vector<std::string>& Z = {}) {
  if (X.empty() || Y.empty())
    throw std::invalid_argument("mutual_info needs nonempty groups");
  const auto xyz = detail::concat_disjoint(d, {&X, &Y, &Z});
  const auto xz = detail::concat_disjoint(d, {&X, &Z});
  const auto yz = detail::concat_disjoint(d, {&Y, &Z});
  double h = detail::entropy_on(d, xz) + detail::entropy_on(d, yz) -
             detail::entropy_on(d, xyz);
  if (!Z.empty()) h -= detail::entropy_on(d, d.resolve(Z));
  return h;
}

// I(X:Y:Z) by inclusion-exclusion; may be negative (XOR of two bits)
inline double triple_info(const JointDistribution& d,
                          const std::vector<std::string>& X,
                          const std::vector<std::string>& Y,
                          const std::vector<std::string>& Z) {
  const auto all = detail::concat_disjoint(d, {&X, &Y, &Z});
  const auto xy = detail::concat_disjoint(d, {&X, &Y});
  const auto xz = detail::concat_disjoint(d, {&X, &Z});
  const auto yz = detail::concat_disjoint(d, {&Y, &Z});
  return detail::entropy_on(d, d.resolve(X)) +
         detail::entropy_on(d, d.resolve(Y)) +
         detail::entropy_on(d, d.resolve(Z)) - detail::entropy_on(d, xy) -
         detail::entropy_on(d, xz) - detail::entropy_on(d, yz) +
         detail::entropy_on(d, all);
}

// the seven joint entropies of a triple plus every derived region quantity
struct ProfileReport {
  double hx = 0, hy = 0, hz = 0;
  double hxy = 0, hxz = 0, hyz = 0, hxyz = 0;
  double hx_yz = 0, hy_xz = 0, hz_xy = 0;        // H(x|yz) etc.
  double ixy = 0, ixz = 0, iyz = 0;              // pairwise I
  double ixy_z = 0, ixz_y = 0, iyz_x = 0;        // conditional I
  double ixyz = 0;                               // triple I
  double ix_yz = 0, iy_xz = 0, iz_xy = 0;        // I(x:yz) etc.
  double max_identity_residual = 0;
};

namespace detail {

inline ProfileReport profile_from_entropies(double hx, double hy, double hz,
                                            double hxy, double hxz, double hyz,
                                            double hxyz) {
  ProfileReport r;
  r.hx = hx;
  r.hy = hy;
  r.hz = hz;
  r.hxy = hxy;
  r.hxz = hxz;
  r.hyz = hyz;
  r.hxyz = hxyz;
  r.hx_yz = hxyz - hyz;
  r.hy_xz = hxyz - hxz;
  r.hz_xy = hxyz - hxy;
  r.ixy = hx + hy - hxy;
  r.ixz = hx + hz - hxz;
  r.iyz = hy + hz - hyz;
  r.ixy_z = hxz + hyz - hz - hxyz;
  r.ixz_y = hxy + hyz - hy - hxyz;
  r.iyz_x = hxy + hxz - hx - hxyz;
  r.ixyz = hx + hy + hz - hxy - hxz - hyz + hxyz;
  r.ix_yz = hx + hyz - hxyz;
  r.iy_xz = hy + hxz - hxyz;
  r.iz_xy = hz + hxy - hxyz;

  // region-arithmetic identities; violations mean the engine is broken
  const double checks[] = {
      r.hx - (r.hx_yz + r.ixy_z + r.ixz_y + r.ixyz),
      r.hy - (r.hy_xz + r.ixy_z + r.iyz_x + r.ixyz),
      r.hz - (r.hz_xy + r.ixz_y + r.iyz_x + r.ixyz),
      r.hxy - (r.hx_yz + r.hy_xz + r.ixy_z + r.ixz_y + r.iyz_x + r.ixyz),
      (r.hxy - r.hy) - (r.hx_yz + r.ixz_y),
      r.ixy - (r.ixy_z + r.ixyz),
      r.ixz - (r.ixz_y + r.ixyz),
      r.iyz - (r.iyz_x + r.ixyz),
      r.ix_yz - (r.ixy_z + r.ixz_y + r.ixyz),
      r.iy_xz - (r.ixy_z + r.iyz_x + r.ixyz),
      r.iz_xy - (r.ixz_y + r.iyz_x + r.ixyz),
      r.ixyz - (r.ixy - r.ixy_z),
  };
  for (double c : checks)
    r.max_identity_residual = std::max(r.max_identity_residual, std::abs(c));
  if (r.max_identity_residual > 1e-9)
    throw std::logic_error("profile identity residual " +
                           std::to_string(r.max_identity_residual));
  return r;
}

}  // namespace detail

inline ProfileReport profile(const JointDistribution& d,
                             const std::vector<std::string>& X,
                             const std::vector<std::string>& Y,
                             const std::vector<std::string>& Z) {
  const auto all = detail::concat_disjoint(d, {&X, &Y, &Z});
  (void)all;
  const double hx = entropy(d, X), hy = entropy(d, Y), hz = entropy(d, Z);
  const auto xy = detail::concat_disjoint(d, {&X, &Y});
  const auto xz = detail::concat_disjoint(d, {&X, &Z});
  const auto yz = detail::concat_disjoint(d, {&Y, &Z});
  const auto xyz = detail::concat_disjoint(d, {&X, &Y, &Z});
  return detail::profile_from_entropies(
      hx, hy, hz, detail::entropy_on(d, xy), detail::entropy_on(d, xz),
      detail::entropy_on(d, yz), detail::entropy_on(d, xyz));
}

// closed-form profile of an idealized uniform orthogonal triple, built from
// the direction-count ladder: H(x) = log2 N_{k+1}, H(x|y) = log2 N_k,
// H(x|yz) = log2 N_{k-1}, all symmetric.  With n = log2 q this sits within
// one bit of the (kn, n, 2n, 0) targets.
inline ProfileReport geometric_profile(std::uint64_t q, unsigned k) {
  require_power_of_two(q);
  if (k < 2) throw std::invalid_argument("geometric profile needs k >= 2");
  const auto lg = [](const BigInt& v) {
    return std::log2(v.convert_to<double>());
  };
  const double a = lg(count_directions(q, k + 1));
  const double b = lg(count_directions(q, k));
  const double c = lg(count_directions(q, k - 1));  // log2 1 = 0 at k = 2
  ProfileReport r = detail::profile_from_entropies(a, a, a, a + b, a + b,
                                                   a + b, a + b + c);
  const double n = std::log2(static_cast<double>(q));
  const double kn = static_cast<double>(k) * n;
  if (std::abs(r.hx - kn) > 1.0 || std::abs(r.ixy - n) > 1.0 ||
      std::abs(r.ix_yz - 2.0 * n) > 1.0 || std::abs(r.ixyz) > 1.0)
    throw std::logic_error("geometric profile outside the 1-bit window");
  return r;
}

struct InequalityReport {
  double lhs = 0, rhs = 0;
  double slack = 0;  // rhs - lhs
  bool holds = false;
};

// I(x:y|s) <= I(x:y) + I(s:xy); exact in Shannon form
inline InequalityReport check_lemma_b1(const JointDistribution& d,
                                       const std::vector<std::string>& X,
                                       const std::vector<std::string>& Y,
                                       const std::vector<std::string>& S) {
  InequalityReport r;
  r.lhs = mutual_info(d, X, Y, S);
  std::vector<std::string> xy = X;
  xy.insert(xy.end(), Y.begin(), Y.end());
  r.rhs = mutual_info(d, X, Y) + mutual_info(d, S, xy);
  r.slack = r.rhs - r.lhs;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

struct PairInequalityReport {
  InequalityReport part1;  // I(x':y |z) <= I(x:y|z) + H(x'|x)
  InequalityReport part2;  // I(x':y'|z) <= I(x:y|z) + H(x'|x) + H(y'|y)
  bool holds = false;
};

inline PairInequalityReport check_lemma_b2(const JointDistribution& d,
                                           const std::vector<std::string>& X,
                                           const std::vector<std::string>& Xp,
                                           const std::vector<std::string>& Y,
                                           const std::vector<std::string>& Yp,
                                           const std::vector<std::string>& Z) {
  const double base = mutual_info(d, X, Y, Z);
  std::vector<std::string> xxp = X;
  xxp.insert(xxp.end(), Xp.begin(), Xp.end());
  std::vector<std::string> yyp = Y;
  yyp.insert(yyp.end(), Yp.begin(), Yp.end());
  const double hxp_x = detail::entropy_on(d, d.resolve(xxp)) -
                       detail::entropy_on(d, d.resolve(X));
  const double hyp_y = detail::entropy_on(d, d.resolve(yyp)) -
                       detail::entropy_on(d, d.resolve(Y));
  PairInequalityReport r;
  r.part1.lhs = mutual_info(d, Xp, Y, Z);
  r.part1.rhs = base + hxp_x;
  r.part1.slack = r.part1.rhs - r.part1.lhs;
  r.part1.holds = r.part1.lhs <= r.part1.rhs + 1e-9;
  r.part2.lhs = mutual_info(d, Xp, Yp, Z);
  r.part2.rhs = base + hxp_x + hyp_y;
  r.part2.slack = r.part2.rhs - r.part2.lhs;
  r.part2.holds = r.part2.lhs <= r.part2.rhs + 1e-9;
  r.holds = r.part1.holds && r.part2.holds;
  return r;
}

struct KeyboundReport {
  double h_w = 0;
  double i_wt = 0;          // leakage of the key into the transcript
  double i_xy_given_mc = 0;  // what the proof budgets for the key
  double lhs = 0;            // H(w) - I(w:t)
  double rhs = 0;            // I(x:y|mC) + 1.0
  bool holds = false;
};

// effective key content vs the conditional-information budget; the +1.0
// absorbs the floor/ceiling losses of finite hashing
inline KeyboundReport keybound_audit(const JointDistribution& d) {
  for (const char* v : {"x", "y", "mC", "t", "w"}) d.resolve({v});
  KeyboundReport r;
  r.h_w = entropy(d, {"w"});
  r.i_wt = mutual_info(d, {"w"}, {"t"});
  r.i_xy_given_mc = mutual_info(d, {"x"}, {"y"}, {"mC"});
  r.lhs = r.h_w - r.i_wt;
  r.rhs = r.i_xy_given_mc + 1.0;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

// random exact-rational distribution: integer weights on a full product
// support; exercises the checkers across degenerate and generic shapes
inline JointDistribution random_distribution(RandomTape& tape, unsigned nvars,
                                             unsigned max_alphabet) {
  if (nvars == 0 || nvars > 8)
    throw std::invalid_argument("random_distribution wants 1..8 variables");
  if (max_alphabet < 2) throw std::invalid_argument("alphabet too small");
  std::vector<unsigned> sizes(nvars);
  std::size_t support = 1;
  for (auto& s : sizes) {
    s = 2 + static_cast<unsigned>(tape.below(max_alphabet - 1));
    support *= s;
  }
  std::vector<std::string> names;
  for (unsigned v = 0; v < nvars; ++v) names.push_back("v" + std::to_string(v));
  std::vector<std::vector<std::uint32_t>> tuples;
  std::vector<std::uint64_t> weights;
  tuples.reserve(support);
  for (std::size_t e = 0; e < support; ++e) {
    std::vector<std::uint32_t> t(nvars);
    std::size_t rem = e;
    for (unsigned v = nvars; v-- > 0;) {
      t[v] = static_cast<std::uint32_t>(rem % sizes[v]);
      rem /= sizes[v];
    }
    tuples.push_back(std::move(t));
    weights.push_back(tape.below(1000));
  }
  if (std::accumulate(weights.begin(), weights.end(), std::uint64_t{0}) == 0)
    weights[0] = 1;
  // drop zero-weight tuples so the support is the positive part
  std::vector<std::vector<std::uint32_t>> tk;
  std::vector<std::uint64_t> wk;
  for (std::size_t e = 0; e < tuples.size(); ++e)
    if (weights[e] > 0) {
      tk.push_back(std::move(tuples[e]));
      wk.push_back(weights[e]);
    }
  return JointDistribution::from_counts(std::move(names), std::move(tk), wk);
}

}  // namespace orthokey
