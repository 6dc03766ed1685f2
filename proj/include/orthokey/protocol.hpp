#pragma once

// Key agreement on pairwise-orthogonal direction triples (x, y, z) over
// GF(2^n)^{k+1}, two flavors:
//
//   MultiRound   round 1: Alice and Bob broadcast hashes of x and y sized so
//                Charlie can reconstruct the pair from z; round 2: Charlie
//                broadcasts a shorter hash of the reconstructed pair so
//                Alice and Bob can reconstruct each other's input.  The key
//                is a hash of (x, y).
//   Omniscience  every party simultaneously broadcasts a hash of its own
//                input sized so the other two can reconstruct it; the key is
//                a hash of the full triple.
//
// Decoding is exhaustive over the closed-form candidate sets (directions
// orthogonal to what the decoder knows), a unique joint hash match counting
// as success and zero or multiple matches as failure.  An exact secrecy
// audit enumerates every admissible input weighted uniformly and measures
// key entropy, leakage into the transcript, and distance from uniform.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "field.hpp"
#include "hashing.hpp"
#include "infolab.hpp"
#include "projspace.hpp"
#include "rng.hpp"

namespace orthokey {

enum class ProtocolKind { Omniscience, MultiRound };

inline const char* kind_name(ProtocolKind k) {
  return k == ProtocolKind::MultiRound ? "multiround" : "omniscience";
}

struct ProtocolParams {
  ProtocolKind kind = ProtocolKind::MultiRound;
  unsigned n = 0;   // field degree, q = 2^n
  unsigned k = 0;   // directions live in F_q^{k+1}
  unsigned s = 0;   // per-message slack bits (decode failure knob)
  unsigned s_k = 0; // key slack bits (secrecy knob)
  unsigned lA = 0, lB = 0, lC = 0, lw = 0;
  std::uint64_t seed = 0;

  unsigned dim() const { return k + 1; }
  std::uint64_t q() const { return std::uint64_t{1} << n; }
  unsigned total_bits() const { return lA + lB + lC; }
  unsigned enc_bits() const { return (k + 1) * n; }
};

// message lengths: reconstruction messages carry ceil((k-1.5)n) + s bits
// (Charlie's pair message in the multi-round flavor only needs
// ceil(0.5n) + s); the key takes whatever entropy is left after paying for
// the transcript and the key slack, measured against the exact source count
inline ProtocolParams make_params(ProtocolKind kind, unsigned n, unsigned k,
                                  unsigned s, unsigned s_k,
                                  std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("protocols need k >= 2");
  if (n < 2 || n > 32) throw std::invalid_argument("field degree out of range");
  ProtocolParams p;
  p.kind = kind;
  p.n = n;
  p.k = k;
  p.s = s;
  p.s_k = s_k;
  p.seed = seed;
  const unsigned lead = ((2 * k - 3) * n + 1) / 2;  // ceil((k - 1.5) n)
  BigInt source;
  if (kind == ProtocolKind::MultiRound) {
    p.lA = p.lB = lead + s;
    p.lC = (n + 1) / 2 + s;
    source = count_directions(p.q(), k + 1) * count_directions(p.q(), k);
  } else {
    p.lA = p.lB = p.lC = lead + s;
    source = count_triples(p.q(), k + 1);
  }
  const auto fl = static_cast<long long>(boost::multiprecision::msb(source));
  const long long key =
      fl - static_cast<long long>(p.total_bits()) - static_cast<long long>(s_k);
  if (key < 1)
    throw std::invalid_argument(
        "key vanishes at these parameters: floor(log2 " + source.str() +
        ") = " + std::to_string(fl) + ", messages " +
        std::to_string(p.total_bits()) + ", key slack " + std::to_string(s_k) +
        ", " + std::to_string(fl) + " - " + std::to_string(p.total_bits()) +
        " - " + std::to_string(s_k) + " = " + std::to_string(key) + " < 1");
  p.lw = static_cast<unsigned>(key);
  // single-word fast paths used throughout the runners
  if (p.enc_bits() > 64)
    throw std::length_error("encoded direction exceeds 64 bits: (k+1)*n = " +
                            std::to_string(p.enc_bits()));
  if (p.lA > 64 || p.lC > 64 || p.lw > 64)
    throw std::length_error("message or key length exceeds 64 bits");
  return p;
}

struct Transcript {
  BitStr mA, mB, mC;
  unsigned total_bits = 0;

  // nibble i covers bits [4i, 4i+4) of mA || mB || mC, low bit first
  std::string hex() const {
    std::string all;
    auto emit = [&](const BitStr& m) {
      for (unsigned i = 0; i < m.bits; ++i) all.push_back(m.bit(i) ? '1' : '0');
    };
    emit(mA);
    emit(mB);
    emit(mC);
    std::string out;
    for (std::size_t i = 0; i < all.size(); i += 4) {
      unsigned v = 0;
      for (std::size_t j = 0; j < 4 && i + j < all.size(); ++j)
        v |= (all[i + j] == '1' ? 1u : 0u) << j;
      out.push_back("0123456789abcdef"[v]);
    }
    return out;
  }
};

enum class DecodeFail { None, NoMatch, Ambiguous };

struct PartyResult {
  bool ok = false;
  DecodeFail fail = DecodeFail::None;
  bool sound = true;              // false only on a successful wrong decode
  std::uint64_t candidates = 0;   // closed-form size of the search space
  BitStr key;
};

struct Outcome {
  Transcript transcript;
  PartyResult alice, bob, charlie;
  bool agreed = false;
};

namespace detail {

struct HashSet {
  BinaryMatrix A, B, C, W;
};

inline HashSet make_hashes(const ProtocolParams& p, RandomTape& tape) {
  const unsigned e = p.enc_bits();
  if (p.kind == ProtocolKind::MultiRound)
    return HashSet{BinaryMatrix(p.lA, e, tape, "round1/alice"),
                   BinaryMatrix(p.lB, e, tape, "round1/bob"),
                   BinaryMatrix(p.lC, 2 * e, tape, "round2/charlie"),
                   BinaryMatrix(p.lw, 2 * e, tape, "key")};
  return HashSet{BinaryMatrix(p.lA, e, tape, "round1/alice"),
                 BinaryMatrix(p.lB, e, tape, "round1/bob"),
                 BinaryMatrix(p.lC, e, tape, "round1/charlie"),
                 BinaryMatrix(p.lw, 3 * e, tape, "key")};
}

// write `width` bits of w at bit position pos (target bits must be zero)
inline void put_bits(BitStr& s, unsigned pos, std::uint64_t w, unsigned width) {
  const unsigned wi = pos >> 6, off = pos & 63;
  s.words[wi] |= w << off;
  if (off + width > 64) s.words[wi + 1] |= w >> (64 - off);
}

inline void fill_concat(BitStr& buf, std::initializer_list<std::uint64_t> encs,
                        unsigned encw) {
  for (auto& w : buf.words) w = 0;
  unsigned pos = 0;
  for (std::uint64_t e : encs) {
    put_bits(buf, pos, e, encw);
    pos += encw;
  }
}

inline RawVec raw_of(const Direction& d) {
  RawVec v{};
  for (unsigned i = 0; i < d.dim(); ++i) v[i] = d.raw(i);
  return v;
}

// closed-form size of the pair search space { (u, v) : u,v,w pairwise
// orthogonal } for a known w — the brute-force count a decoder faces
inline std::uint64_t pair_candidate_count(std::uint64_t q, unsigned dim,
                                          bool w_isotropic) {
  const std::uint64_t nk = count_directions_u64(q, dim - 1);
  const std::uint64_t nk1 = count_directions_u64(q, dim - 2);
  return w_isotropic ? nk + (nk - 1) * nk1 : nk * nk1;
}

// decode the unknown pair (u, v) given known direction w, matching
// hU(enc u) = mU and hV(enc v) = mV over all pairwise-orthogonal
// completions; filter on v first — hV(v) is independent of u, so the
// two-stage filter scans the same candidate set as the full product
struct PairDecodeResult {
  bool ok = false;
  DecodeFail fail = DecodeFail::NoMatch;
  RawVec u{}, v{};
};

inline PairDecodeResult decode_pair(const FieldSpec& f, unsigned dim,
                                    const RawVec& w, const BinaryMatrix& hU,
                                    std::uint64_t mU, const BinaryMatrix& hV,
                                    std::uint64_t mV) {
  std::array<RawVec, kMaxDim> wperp{};
  const unsigned nbw =
      nullspace_basis_raw(f, &w, 1, dim, wperp.data(), nullptr);
  PairDecodeResult res;
  unsigned matches = 0;
  for_each_subspace_direction(
      f, wperp.data(), nbw, dim, [&](const RawVec& v) -> bool {
        if (hV.apply_word(encode_word(f, v, dim)) != mV) return true;
        // u must be orthogonal to both w and v; v == w collapses the
        // constraint set to w alone (isotropic w)
        std::array<RawVec, kMaxDim> basis{};
        unsigned nb;
        if (raw_equal(v, w, dim)) {
          nb = nbw;
          basis = wperp;
        } else {
          std::array<RawVec, 2> rows{w, v};
          nb = nullspace_basis_raw(f, rows.data(), 2, dim, basis.data(),
                                   nullptr);
        }
        bool keep = true;
        for_each_subspace_direction(
            f, basis.data(), nb, dim, [&](const RawVec& u) -> bool {
              if (hU.apply_word(encode_word(f, u, dim)) != mU) return true;
              if (++matches >= 2) {
                keep = false;
                return false;
              }
              res.u = u;
              res.v = v;
              return true;
            });
        return keep;
      });
  if (matches == 1) {
    res.ok = true;
    res.fail = DecodeFail::None;
  } else {
    res.fail = matches ? DecodeFail::Ambiguous : DecodeFail::NoMatch;
  }
  return res;
}

// decode a single unknown v given known w: v ⊥ w, matching hV and a
// pair-level hash hP(enc(known-side pair with v substituted)) = mP
struct SingleDecodeResult {
  bool ok = false;
  DecodeFail fail = DecodeFail::NoMatch;
  RawVec v{};
};

inline SingleDecodeResult decode_single(
    const FieldSpec& f, unsigned dim, const RawVec& w, const BinaryMatrix& hV,
    std::uint64_t mV, const BinaryMatrix& hP, const BitStr& mP,
    std::uint64_t enc_known, bool known_first, unsigned encw, BitStr& buf) {
  std::array<RawVec, kMaxDim> wperp{};
  const unsigned nbw =
      nullspace_basis_raw(f, &w, 1, dim, wperp.data(), nullptr);
  SingleDecodeResult res;
  unsigned matches = 0;
  for_each_subspace_direction(
      f, wperp.data(), nbw, dim, [&](const RawVec& v) -> bool {
        const std::uint64_t ev = encode_word(f, v, dim);
        if (hV.apply_word(ev) != mV) return true;
        if (known_first)
          fill_concat(buf, {enc_known, ev}, encw);
        else
          fill_concat(buf, {ev, enc_known}, encw);
        if (!(hP.apply(buf) == mP)) return true;
        if (++matches >= 2) return false;
        res.v = v;
        return true;
      });
  if (matches == 1) {
    res.ok = true;
    res.fail = DecodeFail::None;
  } else {
    res.fail = matches ? DecodeFail::Ambiguous : DecodeFail::NoMatch;
  }
  return res;
}

inline void require_triple(const Direction& x, const Direction& y,
                           const Direction& z) {
  if (!is_orthogonal(x, y) || !is_orthogonal(x, z) || !is_orthogonal(y, z))
    throw std::invalid_argument("protocol inputs must be pairwise orthogonal");
}

inline Outcome run_multiround_with(const ProtocolParams& p, const Direction& x,
                                   const Direction& y, const Direction& z,
                                   const HashSet& h) {
  require_triple(x, y, z);
  const FieldSpec& f = x.field();
  const unsigned dim = p.dim(), encw = p.enc_bits(), n2 = 2 * encw;
  const RawVec xr = raw_of(x), yr = raw_of(y), zr = raw_of(z);
  const std::uint64_t ex = encode_word(f, xr, dim);
  const std::uint64_t ey = encode_word(f, yr, dim);

  Outcome out;
  // round 1: hashes of the parties' own inputs
  const std::uint64_t mA = h.A.apply_word(ex);
  const std::uint64_t mB = h.B.apply_word(ey);

  // round 2: Charlie reconstructs (x, y) from z and the round-1 messages,
  // then broadcasts a hash of the reconstructed pair; on failure the slot
  // carries zeros
  const std::uint64_t nk = count_directions_u64(p.q(), dim - 1);
  const bool z_iso = dot_raw(f, zr, zr, dim) == 0;
  out.charlie.candidates = pair_candidate_count(p.q(), dim, z_iso);
  const PairDecodeResult cd = decode_pair(f, dim, zr, h.A, mA, h.B, mB);
  out.charlie.fail = cd.fail;
  BitStr pairbuf = BitStr::zeros(n2);
  BitStr mC = BitStr::zeros(p.lC);
  if (cd.ok) {
    out.charlie.ok = true;
    out.charlie.sound = raw_equal(cd.u, xr, dim) && raw_equal(cd.v, yr, dim);
    fill_concat(pairbuf, {encode_word(f, cd.u, dim), encode_word(f, cd.v, dim)},
                encw);
    mC = h.C.apply(pairbuf);
    out.charlie.key = h.W.apply(pairbuf);
  } else {
    out.charlie.key = BitStr::zeros(p.lw);
  }

  // Alice recovers y from (x, mB, mC); Bob recovers x from (y, mA, mC)
  out.alice.candidates = nk;
  BitStr buf = BitStr::zeros(n2);
  const SingleDecodeResult ad =
      decode_single(f, dim, xr, h.B, mB, h.C, mC, ex, true, encw, buf);
  out.alice.fail = ad.fail;
  if (ad.ok) {
    out.alice.ok = true;
    out.alice.sound = raw_equal(ad.v, yr, dim);
    fill_concat(buf, {ex, encode_word(f, ad.v, dim)}, encw);
    out.alice.key = h.W.apply(buf);
  } else {
    out.alice.key = BitStr::zeros(p.lw);
  }

  out.bob.candidates = nk;
  const SingleDecodeResult bd =
      decode_single(f, dim, yr, h.A, mA, h.C, mC, ey, false, encw, buf);
  out.bob.fail = bd.fail;
  if (bd.ok) {
    out.bob.ok = true;
    out.bob.sound = raw_equal(bd.v, xr, dim);
    fill_concat(buf, {encode_word(f, bd.v, dim), ey}, encw);
    out.bob.key = h.W.apply(buf);
  } else {
    out.bob.key = BitStr::zeros(p.lw);
  }

  out.transcript.mA = BitStr::zeros(p.lA);
  out.transcript.mA.words[0] = mA;
  out.transcript.mB = BitStr::zeros(p.lB);
  out.transcript.mB.words[0] = mB;
  out.transcript.mC = mC;
  out.transcript.total_bits = p.total_bits();
  out.agreed = out.alice.ok && out.bob.ok && out.charlie.ok &&
               out.alice.key == out.bob.key && out.bob.key == out.charlie.key;
  return out;
}

inline Outcome run_omniscience_with(const ProtocolParams& p, const Direction& x,
                                    const Direction& y, const Direction& z,
                                    const HashSet& h) {
  require_triple(x, y, z);
  const FieldSpec& f = x.field();
  const unsigned dim = p.dim(), encw = p.enc_bits();
  const RawVec xr = raw_of(x), yr = raw_of(y), zr = raw_of(z);
  const std::uint64_t ex = encode_word(f, xr, dim);
  const std::uint64_t ey = encode_word(f, yr, dim);
  const std::uint64_t ez = encode_word(f, zr, dim);

  Outcome out;
  // one simultaneous round: every party hashes its own input
  const std::uint64_t mA = h.A.apply_word(ex);
  const std::uint64_t mB = h.B.apply_word(ey);
  const std::uint64_t mC = h.C.apply_word(ez);

  BitStr buf = BitStr::zeros(3 * encw);
  const auto finish = [&](PartyResult& pr, const PairDecodeResult& d,
                          const RawVec& true_u, const RawVec& true_v,
                          std::uint64_t enc_known, int known_pos) {
    pr.fail = d.fail;
    if (!d.ok) {
      pr.key = BitStr::zeros(p.lw);
      return;
    }
    pr.ok = true;
    pr.sound = raw_equal(d.u, true_u, dim) && raw_equal(d.v, true_v, dim);
    const std::uint64_t eu = encode_word(f, d.u, dim);
    const std::uint64_t ev = encode_word(f, d.v, dim);
    // triple encoding keeps (x, y, z) order regardless of who decodes
    if (known_pos == 0)
      fill_concat(buf, {enc_known, ev, eu}, encw);
    else if (known_pos == 1)
      fill_concat(buf, {ev, enc_known, eu}, encw);
    else
      fill_concat(buf, {eu, ev, enc_known}, encw);
    pr.key = h.W.apply(buf);
  };

  // Alice seeks (z', y') with y' hash-matching mB and z' matching mC —
  // decode_pair(u = z', v = y') against her own x
  const bool x_iso = dot_raw(f, xr, xr, dim) == 0;
  const bool y_iso = dot_raw(f, yr, yr, dim) == 0;
  const bool z_iso = dot_raw(f, zr, zr, dim) == 0;
  out.alice.candidates = pair_candidate_count(p.q(), dim, x_iso);
  finish(out.alice, decode_pair(f, dim, xr, h.C, mC, h.B, mB), zr, yr, ex, 0);
  out.bob.candidates = pair_candidate_count(p.q(), dim, y_iso);
  finish(out.bob, decode_pair(f, dim, yr, h.C, mC, h.A, mA), zr, xr, ey, 1);
  out.charlie.candidates = pair_candidate_count(p.q(), dim, z_iso);
  finish(out.charlie, decode_pair(f, dim, zr, h.A, mA, h.B, mB), xr, yr, ez,
         2);

  out.transcript.mA = BitStr::zeros(p.lA);
  out.transcript.mA.words[0] = mA;
  out.transcript.mB = BitStr::zeros(p.lB);
  out.transcript.mB.words[0] = mB;
  out.transcript.mC = BitStr::zeros(p.lC);
  out.transcript.mC.words[0] = mC;
  out.transcript.total_bits = p.total_bits();
  out.agreed = out.alice.ok && out.bob.ok && out.charlie.ok &&
               out.alice.key == out.bob.key && out.bob.key == out.charlie.key;
  return out;
}

}  // namespace detail

inline Outcome run_multiround(const ProtocolParams& p, const Direction& x,
                              const Direction& y, const Direction& z,
                              RandomTape& tape) {
  if (p.kind != ProtocolKind::MultiRound)
    throw std::invalid_argument("params built for a different protocol");
  const detail::HashSet h = detail::make_hashes(p, tape);
  return detail::run_multiround_with(p, x, y, z, h);
}

inline Outcome run_omniscience(const ProtocolParams& p, const Direction& x,
                               const Direction& y, const Direction& z,
                               RandomTape& tape) {
  if (p.kind != ProtocolKind::Omniscience)
    throw std::invalid_argument("params built for a different protocol");
  const detail::HashSet h = detail::make_hashes(p, tape);
  return detail::run_omniscience_with(p, x, y, z, h);
}

struct BatchReport {
  ProtocolParams params;
  std::uint64_t trials = 0;
  std::uint64_t agreed = 0;
  double success_rate = 0;
  std::uint64_t alice_ok = 0, bob_ok = 0, charlie_ok = 0;
  std::uint64_t fail_nomatch = 0, fail_ambiguous = 0;  // per-party events
  std::uint64_t soundness_failures = 0;
  std::uint64_t key_mismatches = 0;  // all-ok trials with unequal keys
  unsigned comm_bits = 0;
  double wall_seconds = 0;
};

// one line per trial, for CSV export and failure forensics
struct TrialRow {
  std::uint64_t trial = 0;
  bool agreed = false;
  PartyResult alice, bob, charlie;
};

// independent trials; trial t draws its inputs and public randomness from
// sub-tapes of RandomTape(seed).sub("trial", t), so reports do not depend
// on the worker partition.  When rows != nullptr it receives one TrialRow
// per trial, indexed by trial number.
inline BatchReport batch(const ProtocolParams& p, std::uint64_t trials,
                         unsigned workers = 1,
                         std::vector<TrialRow>* rows = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  BatchReport rep;
  rep.params = p;
  rep.trials = trials;
  rep.comm_bits = p.total_bits();
  const FieldSpec f = make_field(p.n);
  const RandomTape base(p.seed);
  if (rows) rows->assign(trials, TrialRow{});

  auto run_range = [&](std::uint64_t lo, std::uint64_t hi, BatchReport& out) {
    for (std::uint64_t t = lo; t < hi; ++t) {
      RandomTape trial = base.sub("trial", t);
      RandomTape inputs = trial.sub("inputs");
      const auto [x, y, z] = sample_orthogonal_triple(f, p.dim(), inputs);
      RandomTape pub = trial.sub("public");
      const Outcome o = p.kind == ProtocolKind::MultiRound
                            ? run_multiround(p, x, y, z, pub)
                            : run_omniscience(p, x, y, z, pub);
      if (rows)
        (*rows)[t] = TrialRow{t, o.agreed, o.alice, o.bob, o.charlie};
      out.agreed += o.agreed;
      for (const PartyResult* pr : {&o.alice, &o.bob, &o.charlie}) {
        if (pr->ok) {
          if (!pr->sound) ++out.soundness_failures;
        } else if (pr->fail == DecodeFail::Ambiguous) {
          ++out.fail_ambiguous;
        } else {
          ++out.fail_nomatch;
        }
      }
      out.alice_ok += o.alice.ok;
      out.bob_ok += o.bob.ok;
      out.charlie_ok += o.charlie.ok;
      if (o.alice.ok && o.bob.ok && o.charlie.ok && !o.agreed)
        ++out.key_mismatches;
    }
  };

  if (workers <= 1) {
    run_range(0, trials, rep);
  } else {
    std::vector<BatchReport> parts(workers);
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t lo = std::min<std::uint64_t>(w * chunk, trials);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, trials);
      pool.emplace_back(run_range, lo, hi, std::ref(parts[w]));
    }
    for (auto& th : pool) th.join();
    for (const BatchReport& part : parts) {
      rep.agreed += part.agreed;
      rep.alice_ok += part.alice_ok;
      rep.bob_ok += part.bob_ok;
      rep.charlie_ok += part.charlie_ok;
      rep.fail_nomatch += part.fail_nomatch;
      rep.fail_ambiguous += part.fail_ambiguous;
      rep.soundness_failures += part.soundness_failures;
      rep.key_mismatches += part.key_mismatches;
    }
  }
  rep.success_rate =
      trials ? static_cast<double>(rep.agreed) / static_cast<double>(trials)
             : 0.0;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

struct AuditSeedReport {
  unsigned seed_index = 0;
  double h_w = 0, h_t = 0, i_wt = 0;
  double sd_uniform = 0;  // statistical distance of (w,t) from U(w) x P(t)
  double h_mc = 0, h_xy = 0;
  double i_xy_given_mc = 0;
  KeyboundReport keybound;
  double i_wt_drop1 = 0, i_wt_drop2 = 0;  // leakage at lw-1 and lw-2
  bool monotone = true;
};

struct AuditReport {
  ProtocolParams params;
  std::uint64_t pairs_enumerated = 0;
  std::uint64_t total_weight = 0;  // = count_triples(q, k+1)
  std::vector<AuditSeedReport> seeds;
  double worst_i_wt = 0, worst_sd = 0;
  double worst_keybound_slack = 0;  // min over seeds of rhs - lhs
  bool keybound_all = true, monotone_all = true;
  double wall_seconds = 0;
};

namespace detail {

inline double entropy_of_counts(const std::vector<std::uint32_t>& c,
                                double total) {
  double s = 0;
  for (std::uint32_t v : c)
    if (v) s += static_cast<double>(v) * std::log2(static_cast<double>(v));
  return std::log2(total) - s / total;
}

}  // namespace detail

// exact secrecy audit of the multi-round protocol: fix the public
// randomness, enumerate every ordered pairwise-orthogonal triple with
// uniform weight, and take the transcript/key of the ideal run (decoding
// skipped: a sound decode makes the transcript a function of (x, y) and the
// tape, and z enters only through the multiplicity of admissible triples per
// pair — N_{k-1} per generic pair, N_k for the degenerate pair (x, x) at
// isotropic x).  Repeats over five derived tapes; reports worst case.
inline AuditReport exact_audit(const ProtocolParams& p, unsigned workers = 1,
                               unsigned seeds = 5) {
  using namespace detail;
  if (p.kind != ProtocolKind::MultiRound)
    throw std::invalid_argument(
        "the exact audit covers the multi-round protocol; run it with kind "
        "multiround");
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t q = p.q();
  const unsigned dim = p.dim();
  const BigInt weight_big = count_triples(q, dim);
  if (weight_big > 20'000'000)
    throw std::length_error("audit capacity exceeded: " + weight_big.str() +
                            " triples");
  if (p.lw + p.total_bits() > 26)
    throw std::length_error("audit table capacity exceeded: 2^" +
                            std::to_string(p.lw + p.total_bits()) + " cells");
  if (2 * p.enc_bits() > 64)
    throw std::length_error("audit fast path needs pair encodings <= 64 bits");

  const FieldSpec f = make_field(p.n);
  const std::uint64_t nd = count_directions_u64(q, dim);
  const std::uint64_t nk = count_directions_u64(q, dim - 1);
  const std::uint64_t nk1 = count_directions_u64(q, dim - 2);
  const unsigned encw = p.enc_bits();
  const unsigned lt = p.total_bits();

  AuditReport rep;
  rep.params = p;
  rep.total_weight = weight_big.convert_to<std::uint64_t>();
  rep.pairs_enumerated = nd * nk;

  // canonical raw coordinates and single-direction hash values per ordinal
  std::vector<RawVec> raws(nd);
  std::vector<std::uint64_t> encs(nd);
  {
    const std::vector<Direction> dirs = enumerate_directions(f, dim);
    for (std::uint64_t i = 0; i < nd; ++i) {
      raws[i] = raw_of(dirs[i]);
      encs[i] = encode_word(f, raws[i], dim);
    }
  }

  const double total = static_cast<double>(rep.total_weight);
  const RandomTape base(p.seed);

  for (unsigned seed_idx = 0; seed_idx < seeds; ++seed_idx) {
    RandomTape tape = base.sub("audit", seed_idx);
    const HashSet h = detail::make_hashes(p, tape);

    std::vector<std::uint64_t> mA_of(nd), mB_of(nd);
    for (std::uint64_t i = 0; i < nd; ++i) {
      mA_of[i] = h.A.apply_word(encs[i]);
      mB_of[i] = h.B.apply_word(encs[i]);
    }

    const std::size_t wt_cells = std::size_t{1} << (p.lw + lt);
    const std::size_t xm_cells = std::size_t(nd) << p.lC;

    struct Local {
      std::vector<std::uint32_t> wt, xm, ym;
      std::uint64_t weight = 0, degenerate = 0;
    };
    auto run_range = [&](std::uint64_t lo, std::uint64_t hi, Local& L) {
      L.wt.assign(wt_cells, 0);
      L.xm.assign(xm_cells, 0);
      L.ym.assign(xm_cells, 0);
      for (std::uint64_t xi = lo; xi < hi; ++xi) {
        const RawVec& xr = raws[xi];
        std::array<RawVec, kMaxDim> xperp{};
        const unsigned nb =
            nullspace_basis_raw(f, &xr, 1, dim, xperp.data(), nullptr);
        for_each_subspace_direction(
            f, xperp.data(), nb, dim, [&](const RawVec& yr) {
              const std::uint64_t yi = index_of_raw(f, yr, dim);
              const bool degen = raw_equal(yr, xr, dim);
              const std::uint32_t weight =
                  static_cast<std::uint32_t>(degen ? nk : nk1);
              const std::uint64_t pairw =
                  encs[xi] | (encs[yi] << encw);
              const std::uint64_t mC = h.C.apply_word(pairw);
              const std::uint64_t w = h.W.apply_word(pairw);
              const std::uint64_t t =
                  mA_of[xi] | (mB_of[yi] << p.lA) | (mC << (p.lA + p.lB));
              L.wt[(t << p.lw) | w] += weight;
              L.xm[(xi << p.lC) | mC] += weight;
              L.ym[(yi << p.lC) | mC] += weight;
              L.weight += weight;
              L.degenerate += degen;
            });
      }
    };

    Local merged;
    if (workers <= 1) {
      run_range(0, nd, merged);
    } else {
      std::vector<Local> parts(workers);
      std::vector<std::thread> pool;
      const std::uint64_t chunk = (nd + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t lo = std::min<std::uint64_t>(w * chunk, nd);
        const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, nd);
        pool.emplace_back(run_range, lo, hi, std::ref(parts[w]));
      }
      for (auto& th : pool) th.join();
      merged.wt.assign(wt_cells, 0);
      merged.xm.assign(xm_cells, 0);
      merged.ym.assign(xm_cells, 0);
      for (const Local& part : parts) {
        for (std::size_t i = 0; i < wt_cells; ++i) merged.wt[i] += part.wt[i];
        for (std::size_t i = 0; i < xm_cells; ++i) {
          merged.xm[i] += part.xm[i];
          merged.ym[i] += part.ym[i];
        }
        merged.weight += part.weight;
        merged.degenerate += part.degenerate;
      }
    }
    if (merged.weight != rep.total_weight)
      throw std::logic_error("audit weight mismatch vs closed form");
    if (merged.degenerate != nk)
      throw std::logic_error("audit degenerate-pair count mismatch");

    AuditSeedReport sr;
    sr.seed_index = seed_idx;

    // H(w,t), H(t), H(w) from the joint table; w occupies the low lw bits
    const std::size_t nw = std::size_t{1} << p.lw;
    const std::size_t nt = std::size_t{1} << lt;
    std::vector<std::uint32_t> t_marg(nt, 0);
    std::vector<std::uint32_t> w_marg(nw, 0);
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t w = 0; w < nw; ++w) {
        const std::uint32_t c = merged.wt[(t << p.lw) | w];
        t_marg[t] += c;
        w_marg[w] += c;
      }
    const double hwt = detail::entropy_of_counts(merged.wt, total);
    sr.h_t = detail::entropy_of_counts(t_marg, total);
    sr.h_w = detail::entropy_of_counts(w_marg, total);
    sr.i_wt = sr.h_w + sr.h_t - hwt;

    double sd = 0;
    const double inv_nw = 1.0 / static_cast<double>(nw);
    for (std::size_t t = 0; t < nt; ++t) {
      const double pt = static_cast<double>(t_marg[t]) / total;
      for (std::size_t w = 0; w < nw; ++w)
        sd += std::abs(static_cast<double>(merged.wt[(t << p.lw) | w]) / total -
                       inv_nw * pt);
    }
    sr.sd_uniform = 0.5 * sd;

    // I(x:y | mC) = H(x,mC) + H(y,mC) - H(mC) - H(x,y); the last term uses
    // H(x,y,mC) = H(x,y) since mC is a function of the pair at fixed tape
    const std::size_t nmc = std::size_t{1} << p.lC;
    std::vector<std::uint32_t> mc_marg(nmc, 0);
    for (std::uint64_t xi = 0; xi < nd; ++xi)
      for (std::size_t m = 0; m < nmc; ++m)
        mc_marg[m] += merged.xm[(xi << p.lC) | m];
    sr.h_mc = detail::entropy_of_counts(mc_marg, total);
    const double hxm = detail::entropy_of_counts(merged.xm, total);
    const double hym = detail::entropy_of_counts(merged.ym, total);
    const double wlogw =
        static_cast<double>(nk) * static_cast<double>(nk) *
            std::log2(static_cast<double>(nk)) +
        (static_cast<double>(rep.pairs_enumerated) - static_cast<double>(nk)) *
            static_cast<double>(nk1) * std::log2(static_cast<double>(nk1));
    sr.h_xy = std::log2(total) - wlogw / total;
    sr.i_xy_given_mc = hxm + hym - sr.h_mc - sr.h_xy;

    sr.keybound.h_w = sr.h_w;
    sr.keybound.i_wt = sr.i_wt;
    sr.keybound.i_xy_given_mc = sr.i_xy_given_mc;
    sr.keybound.lhs = sr.h_w - sr.i_wt;
    sr.keybound.rhs = sr.i_xy_given_mc + 1.0;
    sr.keybound.holds = sr.keybound.lhs <= sr.keybound.rhs + 1e-9;

    // key rows are a prefix-stable stream, so the (lw - d)-bit key equals
    // the low lw - d bits of w; collapsing the table reproduces exactly the
    // audit of the shorter key on the same tape
    auto collapsed_iwt = [&](unsigned drop) {
      const unsigned lw2 = p.lw - drop;
      const std::size_t nw2 = std::size_t{1} << lw2;
      std::vector<std::uint32_t> wt2(nt << lw2, 0);
      std::vector<std::uint32_t> w2(nw2, 0);
      for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t w = 0; w < nw; ++w) {
          const std::uint32_t c = merged.wt[(t << p.lw) | w];
          wt2[(t << lw2) | (w & (nw2 - 1))] += c;
          w2[w & (nw2 - 1)] += c;
        }
      return detail::entropy_of_counts(w2, total) + sr.h_t -
             detail::entropy_of_counts(wt2, total);
    };
    sr.i_wt_drop1 = p.lw >= 1 ? collapsed_iwt(1) : 0.0;
    sr.i_wt_drop2 = p.lw >= 2 ? collapsed_iwt(2) : 0.0;
    sr.monotone = sr.i_wt_drop1 <= sr.i_wt + 1e-9 &&
                  sr.i_wt_drop2 <= sr.i_wt_drop1 + 1e-9;

    rep.worst_i_wt = std::max(rep.worst_i_wt, sr.i_wt);
    rep.worst_sd = std::max(rep.worst_sd, sr.sd_uniform);
    const double slack = sr.keybound.rhs - sr.keybound.lhs;
    if (rep.seeds.empty() || slack < rep.worst_keybound_slack)
      rep.worst_keybound_slack = slack;
    rep.keybound_all = rep.keybound_all && sr.keybound.holds;
    rep.monotone_all = rep.monotone_all && sr.monotone;
    rep.seeds.push_back(std::move(sr));
  }

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

}  // namespace orthokey
