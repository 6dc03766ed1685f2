#pragma once

// command-line experiment runner.  Each subcommand binds one library
// operation to a JSON report (stdout, or --out PATH) plus an aligned text
// summary on stderr, so a claims checklist runs as a shell script and the
// reports diff byte-for-byte under --deterministic.
//
// exit codes: 0 all checks passed, 1 a checked property failed (mixing
// violation, gram mismatch, inequality breach, audit bound, ...),
// 2 usage/parameter/capacity error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "orthokey.hpp"

namespace orthokey::cli {

inline constexpr char kVersion[] = "0.1.0";

using json = nlohmann::ordered_json;

// counts can exceed the 2^53 window where doubles stay exact; JSON readers
// routinely parse numbers as doubles, so big values travel as strings
inline json json_count(std::uint64_t v) {
  if (v < (std::uint64_t{1} << 53)) return v;
  return std::to_string(v);
}

inline json json_count(const BigInt& v) {
  if (v >= 0 && v < BigInt(std::uint64_t{1} << 53))
    return v.convert_to<std::uint64_t>();
  return v.str();
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

class Summary {
 public:
  void add(const std::string& name, const std::string& value) {
    rows_.emplace_back(name, value);
  }
  void add(const std::string& name, const char* value) {
    rows_.emplace_back(name, value);
  }
  void add(const std::string& name, double v) { add(name, fmt(v)); }
  void add(const std::string& name, bool v) {
    add(name, v ? std::string("yes") : std::string("no"));
  }
  template <typename T>
    requires std::is_integral_v<T>
  void add(const std::string& name, T v) {
    add(name, std::to_string(v));
  }
  void add(const std::string& name, const BigInt& v) { add(name, v.str()); }

  void print(std::FILE* to = stderr) const {
    std::size_t w = 0;
    for (const auto& r : rows_) w = std::max(w, r.first.size());
    for (const auto& r : rows_)
      std::fprintf(to, "  %-*s  %s\n", static_cast<int>(w), r.first.c_str(),
                   r.second.c_str());
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

inline std::string json_scalar_to_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// JSON config files: one flat object, keys = long option names of the
// invoked subcommand.  Merged before parsing — a key already present on the
// command line is skipped, so explicit flags win.  Boolean true turns the
// flag on; false is the same as omitting it.  Unknown keys surface as the
// usual unexpected-argument usage error.
inline void apply_config_file(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return;
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config file " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config file is not JSON: ") +
                                e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("config file must hold one JSON object");

  auto given = [&args](const std::string& key) {
    const std::string flag = "--" + key;
    for (const std::string& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "config" || given(it.key())) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back("--" + it.key());
    } else {
      args.push_back("--" + it.key());
      args.push_back(json_scalar_to_arg(v));
    }
  }
}

struct Common {
  std::string out;     // JSON report path; empty = stdout
  std::string csv;     // per-row CSV path; empty = none
  std::string config;  // JSON config file merged into the flags
  bool deterministic = false;
  unsigned workers = 1;
};

inline void attach_common(CLI::App* sc, Common& c, bool with_csv) {
  sc->add_option("--out", c.out,
                 "write the JSON report here instead of stdout");
  sc->add_flag("--deterministic", c.deterministic,
               "omit wall-clock fields: same argv, same bytes");
  sc->add_option("--workers", c.workers, "worker threads for heavy loops")
      ->check(CLI::Range(1u, 64u));
  if (with_csv)
    sc->add_option("--csv", c.csv, "also write per-row CSV to this path");
  sc->add_option("--config", c.config,
                 "JSON file of option values; explicit flags win");
}

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// report envelope shared by every subcommand
struct Sink {
  const Common* common = nullptr;
  std::string command;
  json config = json::object();
  json report = json::object();
  Summary summary;
  double wall = 0;

  int emit(bool ok) {
    // common flags echo uniformly, whatever the per-command block listed
    config["workers"] = common->workers;
    config["deterministic"] = common->deterministic;
    config["out"] = common->out;
    config["config"] = common->config;
    json top = json::object();
    top["tool"] = "orthokey";
    top["version"] = kVersion;
    top["command"] = command;
    top["ok"] = ok;
    top["config"] = config;
    top["report"] = report;
    if (!common->deterministic) top["wall_seconds"] = wall;
    const std::string text = top.dump(2) + "\n";
    if (common->out.empty()) {
      std::fwrite(text.data(), 1, text.size(), stdout);
      std::fflush(stdout);
    } else {
      std::ofstream f(common->out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + common->out);
      f << text;
    }
    summary.add("ok", ok);
    summary.print();
    return ok ? 0 : 1;
  }
};

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::string>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << header << '\n';
  for (const std::string& r : rows) f << r << '\n';
}

inline GraphKind parse_graph_kind(const std::string& s) {
  if (s == "dirdir") return GraphKind::DirDir;
  if (s == "dirpair") return GraphKind::DirPair;
  throw std::invalid_argument("unknown graph kind: " + s);
}

inline ProtocolKind parse_protocol_kind(const std::string& s) {
  if (s == "multiround") return ProtocolKind::MultiRound;
  if (s == "omniscience") return ProtocolKind::Omniscience;
  throw std::invalid_argument("unknown protocol: " + s);
}

inline const char* fail_name(DecodeFail f) {
  switch (f) {
    case DecodeFail::None: return "none";
    case DecodeFail::NoMatch: return "nomatch";
    case DecodeFail::Ambiguous: return "ambiguous";
  }
  return "?";
}

// ---------------------------------------------------------------- counts --

struct CountsArgs {
  std::uint64_t q = 2;
  unsigned k = 2;
};

inline int cmd_counts(const CountsArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  require_power_of_two(a.q);
  if (a.k < 2 || a.k + 1 > kMaxDim)
    throw std::invalid_argument("counts wants 2 <= k <= " +
                                std::to_string(kMaxDim - 1));
  const unsigned dim = a.k + 1;
  const BigInt n_kp1 = count_directions(a.q, dim);
  const BigInt n_k = count_directions(a.q, dim - 1);
  const BigInt n_km1 = count_directions(a.q, dim - 2);
  const BigInt pairs = count_orthogonal_pairs(a.q, dim);
  const BigInt triples = count_triples(a.q, dim);

  Sink s;
  s.common = &c;
  s.command = "counts";
  s.config = {{"q", a.q},
              {"k", a.k},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["q"] = a.q;
  s.report["k"] = a.k;
  s.report["directions"] = {{"dim_kp1", json_count(n_kp1)},
                            {"dim_k", json_count(n_k)},
                            {"dim_km1", json_count(n_km1)}};
  s.report["isotropic_directions"] = json_count(n_k);
  s.report["ordered_orthogonal_pairs"] = json_count(pairs);
  s.report["ordered_orthogonal_triples"] = json_count(triples);

  bool ok = true;
  json verified = json::object();

  // cross-check the closed forms by brute enumeration where feasible
  const bool check_dirs = n_kp1 <= BigInt(kMaxEnumeration);
  const bool check_pairs = pairs <= BigInt(2'000'000);
  if (check_dirs) {
    unsigned n = 0;
    while ((std::uint64_t{1} << n) < a.q) ++n;
    const FieldSpec f = make_field(n);
    const std::vector<Direction> dirs = enumerate_directions(f, dim);
    std::uint64_t iso = 0;
    for (const Direction& d : dirs) iso += is_isotropic(d);
    const bool m1 = BigInt(dirs.size()) == n_kp1;
    const bool m2 = BigInt(iso) == n_k;
    verified["directions"] = m1;
    verified["isotropic"] = m2;
    ok = ok && m1 && m2;
    if (check_pairs) {
      BigInt pair_sum = 0, triple_sum = 0;
      for (const Direction& x : dirs) {
        const std::vector<Direction> orth_x =
            orthogonal_to(std::span<const Direction>(&x, 1));
        pair_sum += orth_x.size();
        for (const Direction& y : orth_x) {
          if (y == x) {
            triple_sum += orth_x.size();
          } else {
            const Direction cons[2] = {x, y};
            triple_sum += orthogonal_to(std::span<const Direction>(cons, 2))
                              .size();
          }
        }
      }
      const bool m3 = pair_sum == pairs;
      const bool m4 = triple_sum == triples;
      verified["pairs"] = m3;
      verified["triples"] = m4;
      ok = ok && m3 && m4;
    } else {
      verified["pairs"] = "skipped";
      verified["triples"] = "skipped";
    }
  } else {
    verified["directions"] = "skipped";
    verified["isotropic"] = "skipped";
    verified["pairs"] = "skipped";
    verified["triples"] = "skipped";
  }
  s.report["verified"] = verified;
  s.wall = elapsed(t0);

  s.summary.add("directions (dim k+1)", n_kp1);
  s.summary.add("directions (dim k)", n_k);
  s.summary.add("isotropic", n_k);
  s.summary.add("orthogonal pairs", pairs);
  s.summary.add("orthogonal triples", triples);
  s.summary.add("verified", check_dirs ? (check_pairs ? "full" : "directions")
                                       : "skipped (too large)");
  return s.emit(ok);
}

// -------------------------------------------------------------- spectrum --

struct GraphArgs {
  std::string kind = "dirdir";
  std::uint64_t q = 2;
  unsigned k = 2;
};

inline json graph_spec_json(const BipartiteGraphSpec& sp) {
  return {{"kind", kind_name(sp.kind)}, {"q", sp.q},    {"k", sp.k},
          {"n_left", json_count(sp.nL)}, {"n_right", json_count(sp.nR)},
          {"d_left", json_count(sp.dL)}, {"d_right", json_count(sp.dR)}};
}

inline int cmd_spectrum(const GraphArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const GraphKind kind = parse_graph_kind(a.kind);
  const BipartiteGraphSpec sp = graph_params(kind, a.q, a.k);
  const SpectralReport r = spectrum(sp);

  // DirDir matches the closed form to solver precision; DirPair is held to
  // the nominal-degree bound lambda2 <= sqrt(dL), which the built graph can
  // (and at these sizes does) exceed
  bool ok;
  if (kind == GraphKind::DirDir) {
    ok = r.residual1 <= 1e-6 && r.residual2 <= 1e-6;
  } else {
    const double cap = std::sqrt(sp.dL.convert_to<double>()) + 1e-6;
    ok = r.residual1 <= 1e-6 && r.lambda2_numeric <= cap;
  }

  Sink s;
  s.common = &c;
  s.command = "spectrum";
  s.config = {{"kind", a.kind},
              {"q", a.q},
              {"k", a.k},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["graph"] = graph_spec_json(sp);
  s.report["lambda1_numeric"] = r.lambda1_numeric;
  s.report["lambda2_numeric"] = r.lambda2_numeric;
  s.report["lambda1_theory"] = r.lambda1_theory;
  s.report["lambda2_theory"] = r.lambda2_theory;
  s.report["residual1"] = r.residual1;
  s.report["residual2"] = r.residual2;
  s.wall = elapsed(t0);

  s.summary.add("lambda1", r.lambda1_numeric);
  s.summary.add("lambda1 theory", r.lambda1_theory);
  s.summary.add("lambda2", r.lambda2_numeric);
  s.summary.add("lambda2 theory", r.lambda2_theory);
  s.summary.add("residual1", r.residual1);
  s.summary.add("residual2", r.residual2);
  return s.emit(ok);
}

// ------------------------------------------------------------------ gram --

inline int cmd_gram(const GraphArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const GraphKind kind = parse_graph_kind(a.kind);
  const BipartiteGraphSpec sp = graph_params(kind, a.q, a.k);
  const GramForm gf = gram_closed_form(sp);
  const BipartiteGraph g(sp);
  const std::vector<std::int64_t> gram = g.gram_int();
  const std::uint64_t nl = g.n_left();
  const std::int64_t diag = gf.diag.convert_to<std::int64_t>();
  const std::int64_t off = gf.offdiag.convert_to<std::int64_t>();

  std::uint64_t mismatches = 0;
  json first = nullptr;
  for (std::uint64_t i = 0; i < nl; ++i) {
    for (std::uint64_t j = 0; j < nl; ++j) {
      const std::int64_t want = i == j ? diag : off;
      const std::int64_t got = gram[i * nl + j];
      if (got != want) {
        if (mismatches == 0)
          first = {{"row", i}, {"col", j}, {"got", got}, {"want", want}};
        ++mismatches;
      }
    }
  }
  const bool ok = mismatches == 0;

  Sink s;
  s.common = &c;
  s.command = "gram";
  s.config = {{"kind", a.kind},
              {"q", a.q},
              {"k", a.k},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["graph"] = graph_spec_json(sp);
  s.report["diag_closed_form"] = json_count(gf.diag);
  s.report["offdiag_closed_form"] = json_count(gf.offdiag);
  s.report["entries"] = json_count(nl * nl);
  s.report["mismatches"] = json_count(mismatches);
  s.report["first_mismatch"] = first;
  s.wall = elapsed(t0);

  s.summary.add("gram entries", nl * nl);
  s.summary.add("closed form diag", gf.diag);
  s.summary.add("closed form offdiag", gf.offdiag);
  s.summary.add("mismatches", mismatches);
  return s.emit(ok);
}

// ---------------------------------------------------------------- mixing --

struct MixingArgs {
  GraphArgs graph;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
};

inline json mixing_report_json(const MixingReport& m) {
  return {{"size_a", json_count(m.sizeA)},
          {"size_b", json_count(m.sizeB)},
          {"edges", json_count(m.edges)},
          {"main_term", m.main_term},
          {"bound", m.bound},
          {"deviation", m.deviation},
          {"ratio", m.ratio},
          {"satisfied", m.satisfied}};
}

inline int cmd_mixing(const MixingArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const GraphKind kind = parse_graph_kind(a.graph.kind);
  const BipartiteGraphSpec sp = graph_params(kind, a.graph.q, a.graph.k);
  const BipartiteGraph g(sp);
  RandomTape tape(a.seed);
  const MixingScanReport r = mixing_scan(g, a.trials, tape, c.workers);
  const bool ok = r.violations == 0 && r.corollary_violations == 0;

  Sink s;
  s.common = &c;
  s.command = "mixing";
  s.config = {{"kind", a.graph.kind},
              {"q", a.graph.q},
              {"k", a.graph.k},
              {"trials", a.trials},
              {"seed", a.seed},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["graph"] = graph_spec_json(sp);
  s.report["pairs_checked"] = json_count(r.pairs_checked);
  s.report["exhaustive"] = r.exhaustive;
  s.report["violations"] = json_count(r.violations);
  s.report["worst"] = mixing_report_json(r.worst);
  s.report["corollary_checked"] = json_count(r.corollary_checked);
  s.report["corollary_violations"] = json_count(r.corollary_violations);
  s.report["corollary_worst_ratio"] = r.corollary_worst_ratio;
  s.wall = elapsed(t0);

  s.summary.add("pairs checked", r.pairs_checked);
  s.summary.add("exhaustive", r.exhaustive);
  s.summary.add("violations", r.violations);
  s.summary.add("worst ratio", r.worst.ratio);
  s.summary.add("corollary checked", r.corollary_checked);
  s.summary.add("corollary violations", r.corollary_violations);
  return s.emit(ok);
}

// --------------------------------------------------------------- profile --

struct ProfileArgs {
  std::uint64_t q = 4;
  unsigned k = 2;
};

inline json profile_json(const ProfileReport& p) {
  return {{"h_x", p.hx},         {"h_y", p.hy},
          {"h_z", p.hz},         {"h_xy", p.hxy},
          {"h_xz", p.hxz},       {"h_yz", p.hyz},
          {"h_xyz", p.hxyz},     {"h_x_given_yz", p.hx_yz},
          {"h_y_given_xz", p.hy_xz}, {"h_z_given_xy", p.hz_xy},
          {"i_xy", p.ixy},       {"i_xz", p.ixz},
          {"i_yz", p.iyz},       {"i_xy_given_z", p.ixy_z},
          {"i_xz_given_y", p.ixz_y}, {"i_yz_given_x", p.iyz_x},
          {"i_xyz", p.ixyz},     {"i_x_yz", p.ix_yz},
          {"i_y_xz", p.iy_xz},   {"i_z_xy", p.iz_xy},
          {"max_identity_residual", p.max_identity_residual}};
}

inline int cmd_profile(const ProfileArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProfileReport p = geometric_profile(a.q, a.k);
  unsigned n = 0;
  while ((std::uint64_t{1} << n) < a.q) ++n;
  const double dn = n;

  struct Window {
    const char* name;
    double value, target, limit;
  };
  const Window windows[] = {
      {"h_x", p.hx, static_cast<double>(a.k) * dn, 1.0},
      {"i_xy", p.ixy, dn, 1.0},
      {"i_x_yz", p.ix_yz, 2.0 * dn, 1.0},
      {"i_xyz", p.ixyz, 0.0, 1.0},
      {"h_xyz", p.hxyz, (3.0 * a.k - 3.0) * dn, 2.0},
  };
  bool ok = true;
  json wj = json::array();
  for (const Window& w : windows) {
    const double delta = std::abs(w.value - w.target);
    const bool in = delta <= w.limit;
    ok = ok && in;
    wj.push_back({{"name", w.name},
                  {"value", w.value},
                  {"target", w.target},
                  {"limit", w.limit},
                  {"delta", delta},
                  {"ok", in}});
  }

  Sink s;
  s.common = &c;
  s.command = "profile";
  s.config = {{"q", a.q},
              {"k", a.k},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["q"] = a.q;
  s.report["k"] = a.k;
  s.report["profile"] = profile_json(p);
  s.report["windows"] = wj;
  s.wall = elapsed(t0);

  s.summary.add("H(x)", p.hx);
  s.summary.add("I(x:y)", p.ixy);
  s.summary.add("I(x:yz)", p.ix_yz);
  s.summary.add("I(x:y:z)", p.ixyz);
  s.summary.add("H(xyz)", p.hxyz);
  s.summary.add("identity residual", p.max_identity_residual);
  return s.emit(ok);
}

// ------------------------------------------------------------------ ineq --

struct IneqArgs {
  std::uint64_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned max_vars = 5;
  unsigned max_alphabet = 4;
};

inline int cmd_ineq(const IneqArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  if (a.max_vars < 3 || a.max_vars > 8)
    throw std::invalid_argument("ineq wants 3 <= max-vars <= 8");
  const RandomTape base(a.seed);

  std::uint64_t b1_checked = 0, b1_violations = 0;
  std::uint64_t b2_checked = 0, b2_violations = 0;
  std::uint64_t identity_failures = 0;
  double b1_min_slack = std::numeric_limits<double>::infinity();
  double b2_min_slack = std::numeric_limits<double>::infinity();
  double worst_residual = 0;

  for (std::uint64_t t = 0; t < a.trials; ++t) {
    RandomTape tr = base.sub("trial", t);
    const unsigned nvars =
        3 + static_cast<unsigned>(tr.below(a.max_vars - 2));
    const JointDistribution d = random_distribution(tr, nvars, a.max_alphabet);
    auto v = [](unsigned i) { return "v" + std::to_string(i); };

    try {
      const ProfileReport p = profile(d, {v(0)}, {v(1)}, {v(2)});
      worst_residual = std::max(worst_residual, p.max_identity_residual);
    } catch (const std::logic_error&) {
      ++identity_failures;
    }

    std::vector<std::string> rest;
    for (unsigned i = 2; i < nvars; ++i) rest.push_back(v(i));
    const InequalityReport b1 = check_lemma_b1(d, {v(0)}, {v(1)}, rest);
    ++b1_checked;
    b1_min_slack = std::min(b1_min_slack, b1.slack);
    if (!b1.holds) ++b1_violations;

    if (nvars >= 5) {
      const PairInequalityReport b2 =
          check_lemma_b2(d, {v(0)}, {v(1)}, {v(2)}, {v(3)}, {v(4)});
      ++b2_checked;
      b2_min_slack = std::min(b2_min_slack,
                              std::min(b2.part1.slack, b2.part2.slack));
      if (!b2.holds) ++b2_violations;
    }
  }
  const bool ok =
      b1_violations == 0 && b2_violations == 0 && identity_failures == 0;

  Sink s;
  s.common = &c;
  s.command = "ineq";
  s.config = {{"trials", a.trials},
              {"seed", a.seed},
              {"max-vars", a.max_vars},
              {"max-alphabet", a.max_alphabet},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["trials"] = json_count(a.trials);
  s.report["identity_failures"] = json_count(identity_failures);
  s.report["identity_worst_residual"] = worst_residual;
  s.report["lemma_b1"] = {{"checked", json_count(b1_checked)},
                          {"violations", json_count(b1_violations)},
                          {"min_slack", b1_min_slack}};
  s.report["lemma_b2"] = {{"checked", json_count(b2_checked)},
                          {"violations", json_count(b2_violations)},
                          {"min_slack", b2_checked ? json(b2_min_slack)
                                                   : json(nullptr)}};
  s.wall = elapsed(t0);

  s.summary.add("trials", a.trials);
  s.summary.add("identity worst residual", worst_residual);
  s.summary.add("B.1 checked", b1_checked);
  s.summary.add("B.1 violations", b1_violations);
  s.summary.add("B.2 checked", b2_checked);
  s.summary.add("B.2 violations", b2_violations);
  return s.emit(ok);
}

// -------------------------------------------------------------- simulate --

struct SimArgs {
  std::string protocol = "multiround";
  unsigned n = 16, k = 2, s = 4, s_k = 4;
  std::uint64_t trials = 1000;
  std::uint64_t seed = 7;
  double min_success = 0.0;
};

inline json params_json(const ProtocolParams& p) {
  return {{"protocol", kind_name(p.kind)},
          {"n", p.n},
          {"k", p.k},
          {"s", p.s},
          {"s_k", p.s_k},
          {"seed", json_count(p.seed)},
          {"l_a", p.lA},
          {"l_b", p.lB},
          {"l_c", p.lC},
          {"l_w", p.lw},
          {"comm_bits", p.total_bits()},
          {"key_bits", p.lw},
          {"enc_bits", p.enc_bits()}};
}

inline int cmd_simulate(const SimArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProtocolKind kind = parse_protocol_kind(a.protocol);
  const ProtocolParams p = make_params(kind, a.n, a.k, a.s, a.s_k, a.seed);

  std::vector<TrialRow> rows;
  const BatchReport r =
      batch(p, a.trials, c.workers, c.csv.empty() ? nullptr : &rows);
  const bool ok = r.soundness_failures == 0 && r.key_mismatches == 0 &&
                  r.success_rate >= a.min_success;

  if (!c.csv.empty()) {
    std::vector<std::string> lines;
    lines.reserve(rows.size());
    for (const TrialRow& tr : rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "%llu,%d,%d,%d,%d,%s,%s,%s,%llu,%llu,%llu",
                    static_cast<unsigned long long>(tr.trial),
                    static_cast<int>(tr.agreed),
                    static_cast<int>(tr.alice.ok),
                    static_cast<int>(tr.bob.ok),
                    static_cast<int>(tr.charlie.ok), fail_name(tr.alice.fail),
                    fail_name(tr.bob.fail), fail_name(tr.charlie.fail),
                    static_cast<unsigned long long>(tr.alice.candidates),
                    static_cast<unsigned long long>(tr.bob.candidates),
                    static_cast<unsigned long long>(tr.charlie.candidates));
      lines.emplace_back(buf);
    }
    write_csv(c.csv,
              "trial,agreed,alice_ok,bob_ok,charlie_ok,alice_fail,bob_fail,"
              "charlie_fail,alice_candidates,bob_candidates,"
              "charlie_candidates",
              lines);
  }

  Sink s;
  s.common = &c;
  s.command = "simulate";
  s.config = {{"protocol", a.protocol},
              {"n", a.n},
              {"k", a.k},
              {"s", a.s},
              {"s-k", a.s_k},
              {"trials", a.trials},
              {"seed", a.seed},
              {"min-success", a.min_success},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out},
              {"csv", c.csv}};
  s.report["params"] = params_json(p);
  s.report["trials"] = json_count(r.trials);
  s.report["agreed"] = json_count(r.agreed);
  s.report["success_rate"] = r.success_rate;
  s.report["alice_ok"] = json_count(r.alice_ok);
  s.report["bob_ok"] = json_count(r.bob_ok);
  s.report["charlie_ok"] = json_count(r.charlie_ok);
  s.report["fail_nomatch"] = json_count(r.fail_nomatch);
  s.report["fail_ambiguous"] = json_count(r.fail_ambiguous);
  s.report["soundness_failures"] = json_count(r.soundness_failures);
  s.report["key_mismatches"] = json_count(r.key_mismatches);
  s.wall = elapsed(t0);

  s.summary.add("communication bits", p.total_bits());
  s.summary.add("key bits", p.lw);
  s.summary.add("trials", r.trials);
  s.summary.add("success rate", r.success_rate);
  s.summary.add("soundness failures", r.soundness_failures);
  s.summary.add("key mismatches", r.key_mismatches);
  return s.emit(ok);
}

// ----------------------------------------------------------------- audit --

struct AuditArgs {
  unsigned n = 8, k = 2, s = 2, s_k = 4;
  std::uint64_t seed = 7;
  unsigned seeds = 5;
  double max_iwt = std::numeric_limits<double>::infinity();
  double max_sd = std::numeric_limits<double>::infinity();
};

inline int cmd_audit(const AuditArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProtocolParams p =
      make_params(ProtocolKind::MultiRound, a.n, a.k, a.s, a.s_k, a.seed);
  const AuditReport r = exact_audit(p, c.workers, a.seeds);
  const bool ok = r.keybound_all && r.monotone_all &&
                  r.worst_i_wt <= a.max_iwt && r.worst_sd <= a.max_sd;

  json seeds = json::array();
  std::vector<std::string> lines;
  for (const AuditSeedReport& sr : r.seeds) {
    seeds.push_back({{"seed_index", sr.seed_index},
                     {"h_w", sr.h_w},
                     {"h_t", sr.h_t},
                     {"i_wt", sr.i_wt},
                     {"sd_uniform", sr.sd_uniform},
                     {"h_mc", sr.h_mc},
                     {"h_xy", sr.h_xy},
                     {"i_xy_given_mc", sr.i_xy_given_mc},
                     {"keybound",
                      {{"lhs", sr.keybound.lhs},
                       {"rhs", sr.keybound.rhs},
                       {"holds", sr.keybound.holds}}},
                     {"i_wt_drop1", sr.i_wt_drop1},
                     {"i_wt_drop2", sr.i_wt_drop2},
                     {"monotone", sr.monotone}});
    if (!c.csv.empty()) {
      char buf[320];
      std::snprintf(buf, sizeof buf,
                    "%u,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,"
                    "%.12g,%.12g,%d",
                    sr.seed_index, sr.h_w, sr.h_t, sr.i_wt, sr.sd_uniform,
                    sr.h_mc, sr.i_xy_given_mc, sr.keybound.lhs,
                    sr.keybound.rhs, static_cast<int>(sr.keybound.holds),
                    sr.i_wt_drop1, sr.i_wt_drop2,
                    static_cast<int>(sr.monotone));
      lines.emplace_back(buf);
    }
  }
  if (!c.csv.empty())
    write_csv(c.csv,
              "seed_index,h_w,h_t,i_wt,sd_uniform,h_mc,i_xy_given_mc,"
              "keybound_lhs,keybound_rhs,keybound_holds,i_wt_drop1,"
              "i_wt_drop2,monotone",
              lines);

  Sink s;
  s.common = &c;
  s.command = "audit";
  s.config = {{"n", a.n},
              {"k", a.k},
              {"s", a.s},
              {"s-k", a.s_k},
              {"seed", a.seed},
              {"seeds", a.seeds},
              {"max-iwt", a.max_iwt},
              {"max-sd", a.max_sd},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out},
              {"csv", c.csv}};
  s.report["params"] = params_json(p);
  s.report["pairs_enumerated"] = json_count(r.pairs_enumerated);
  s.report["total_weight"] = json_count(r.total_weight);
  s.report["seeds"] = seeds;
  s.report["worst_i_wt"] = r.worst_i_wt;
  s.report["worst_sd"] = r.worst_sd;
  s.report["worst_keybound_slack"] = r.worst_keybound_slack;
  s.report["keybound_all"] = r.keybound_all;
  s.report["monotone_all"] = r.monotone_all;
  s.wall = elapsed(t0);

  s.summary.add("pairs per seed", r.pairs_enumerated);
  s.summary.add("triple weight", r.total_weight);
  s.summary.add("seeds", a.seeds);
  s.summary.add("worst I(w:t)", r.worst_i_wt);
  s.summary.add("worst SD", r.worst_sd);
  s.summary.add("keybound holds", r.keybound_all);
  s.summary.add("monotone", r.monotone_all);
  return s.emit(ok);
}

// ------------------------------------------------------------- hashstats --

struct HashArgs {
  unsigned bits = 8;
  unsigned in_bits = 48;
  std::uint64_t pairs = 100'000;
  std::uint64_t seed = 1;
  double sigma_limit = 3.0;
};

inline int cmd_hashstats(const HashArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RandomTape tape(a.seed);
  const CollisionStats st = collision_stats(a.bits, a.in_bits, a.pairs, tape);
  const double z = st.sigma > 0 ? (st.rate - st.expected) / st.sigma : 0.0;
  const bool ok = std::abs(z) <= a.sigma_limit;

  Sink s;
  s.common = &c;
  s.command = "hashstats";
  s.config = {{"bits", a.bits},
              {"in-bits", a.in_bits},
              {"pairs", a.pairs},
              {"seed", a.seed},
              {"sigma-limit", a.sigma_limit},
              {"workers", c.workers},
              {"deterministic", c.deterministic},
              {"out", c.out}};
  s.report["out_bits"] = a.bits;
  s.report["in_bits"] = a.in_bits;
  s.report["pairs"] = json_count(st.pairs);
  s.report["collisions"] = json_count(st.collisions);
  s.report["rate"] = st.rate;
  s.report["expected"] = st.expected;
  s.report["sigma"] = st.sigma;
  s.report["z"] = z;
  s.wall = elapsed(t0);

  s.summary.add("pairs", st.pairs);
  s.summary.add("collisions", st.collisions);
  s.summary.add("rate", st.rate);
  s.summary.add("expected", st.expected);
  s.summary.add("z-score", z);
  return s.emit(ok);
}

// ------------------------------------------------------------------- run --

inline int run(int argc, const char* const* argv) {
  CLI::App app{"orthogonality-graph key agreement: experiments and audits",
               "orthokey"};
  app.set_version_flag("--version", std::string("orthokey ") + kVersion);
  app.require_subcommand(1);

  int code = 0;

  CountsArgs counts_args;
  Common counts_common;
  {
    CLI::App* sc = app.add_subcommand(
        "counts", "direction/pair/triple counts vs enumeration");
    sc->add_option("--q", counts_args.q, "field size, a power of two")
        ->capture_default_str();
    sc->add_option("--k", counts_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    attach_common(sc, counts_common, false);
    sc->callback([&] { code = cmd_counts(counts_args, counts_common); });
  }

  GraphArgs spectrum_args;
  Common spectrum_common;
  {
    CLI::App* sc = app.add_subcommand(
        "spectrum", "top two singular values of an orthogonality graph");
    sc->add_option("--kind", spectrum_args.kind, "dirdir or dirpair")
        ->check(CLI::IsMember({"dirdir", "dirpair"}))
        ->capture_default_str();
    sc->add_option("--q", spectrum_args.q, "field size, a power of two")
        ->capture_default_str();
    sc->add_option("--k", spectrum_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    attach_common(sc, spectrum_common, false);
    sc->callback([&] { code = cmd_spectrum(spectrum_args, spectrum_common); });
  }

  GraphArgs gram_args;
  Common gram_common;
  {
    CLI::App* sc = app.add_subcommand(
        "gram", "brute-force J*J^T vs the two-value closed form");
    sc->add_option("--kind", gram_args.kind, "dirdir or dirpair")
        ->check(CLI::IsMember({"dirdir", "dirpair"}))
        ->capture_default_str();
    sc->add_option("--q", gram_args.q, "field size, a power of two")
        ->capture_default_str();
    sc->add_option("--k", gram_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    attach_common(sc, gram_common, false);
    sc->callback([&] { code = cmd_gram(gram_args, gram_common); });
  }

  MixingArgs mixing_args;
  Common mixing_common;
  {
    CLI::App* sc = app.add_subcommand(
        "mixing", "edge-count deviation vs the spectral bound over subset "
                  "pairs");
    sc->add_option("--kind", mixing_args.graph.kind, "dirdir or dirpair")
        ->check(CLI::IsMember({"dirdir", "dirpair"}))
        ->capture_default_str();
    sc->add_option("--q", mixing_args.graph.q, "field size, a power of two")
        ->capture_default_str();
    sc->add_option("--k", mixing_args.graph.k,
                   "directions live in F_q^(k+1)")
        ->capture_default_str();
    sc->add_option("--trials", mixing_args.trials,
                   "random subset pairs when the graph is too big to sweep")
        ->capture_default_str();
    sc->add_option("--seed", mixing_args.seed, "tape seed for random subsets")
        ->capture_default_str();
    attach_common(sc, mixing_common, false);
    sc->callback([&] { code = cmd_mixing(mixing_args, mixing_common); });
  }

  ProfileArgs profile_args;
  Common profile_common;
  {
    CLI::App* sc = app.add_subcommand(
        "profile", "exact entropy profile of a uniform orthogonal triple");
    sc->add_option("--q", profile_args.q, "field size, a power of two")
        ->capture_default_str();
    sc->add_option("--k", profile_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    attach_common(sc, profile_common, false);
    sc->callback([&] { code = cmd_profile(profile_args, profile_common); });
  }

  IneqArgs ineq_args;
  Common ineq_common;
  {
    CLI::App* sc = app.add_subcommand(
        "ineq", "information identities and inequalities on random "
                "distributions");
    sc->add_option("--trials", ineq_args.trials, "random distributions")
        ->capture_default_str();
    sc->add_option("--seed", ineq_args.seed, "tape seed")
        ->capture_default_str();
    sc->add_option("--max-vars", ineq_args.max_vars, "variables per trial, 3..8")
        ->capture_default_str();
    sc->add_option("--max-alphabet", ineq_args.max_alphabet,
                   "alphabet size per variable")
        ->capture_default_str();
    attach_common(sc, ineq_common, false);
    sc->callback([&] { code = cmd_ineq(ineq_args, ineq_common); });
  }

  SimArgs sim_args;
  Common sim_common;
  {
    CLI::App* sc = app.add_subcommand(
        "simulate", "Monte Carlo protocol runs with decode taxonomy");
    sc->add_option("--protocol", sim_args.protocol,
                   "multiround or omniscience")
        ->check(CLI::IsMember({"multiround", "omniscience"}))
        ->capture_default_str();
    sc->add_option("--n", sim_args.n, "field degree, q = 2^n")
        ->capture_default_str();
    sc->add_option("--k", sim_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    sc->add_option("--s", sim_args.s, "per-message slack bits")
        ->capture_default_str();
    sc->add_option("--s-k", sim_args.s_k, "key slack bits")
        ->capture_default_str();
    sc->add_option("--trials", sim_args.trials, "independent trials")
        ->capture_default_str();
    sc->add_option("--seed", sim_args.seed, "tape seed")
        ->capture_default_str();
    sc->add_option("--min-success", sim_args.min_success,
                   "fail (exit 1) below this success rate")
        ->capture_default_str();
    attach_common(sc, sim_common, true);
    sc->callback([&] { code = cmd_simulate(sim_args, sim_common); });
  }

  AuditArgs audit_args;
  Common audit_common;
  {
    CLI::App* sc = app.add_subcommand(
        "audit", "exact secrecy audit of the multi-round protocol");
    sc->add_option("--n", audit_args.n, "field degree, q = 2^n")
        ->capture_default_str();
    sc->add_option("--k", audit_args.k, "directions live in F_q^(k+1)")
        ->capture_default_str();
    sc->add_option("--s", audit_args.s, "per-message slack bits")
        ->capture_default_str();
    sc->add_option("--s-k", audit_args.s_k, "key slack bits")
        ->capture_default_str();
    sc->add_option("--seed", audit_args.seed, "base tape seed")
        ->capture_default_str();
    sc->add_option("--seeds", audit_args.seeds, "derived tapes to audit")
        ->check(CLI::Range(1u, 64u))
        ->capture_default_str();
    sc->add_option("--max-iwt", audit_args.max_iwt,
                   "fail (exit 1) above this worst-case I(w:t)");
    sc->add_option("--max-sd", audit_args.max_sd,
                   "fail (exit 1) above this worst-case SD");
    attach_common(sc, audit_common, true);
    sc->callback([&] { code = cmd_audit(audit_args, audit_common); });
  }

  HashArgs hash_args;
  Common hash_common;
  {
    CLI::App* sc = app.add_subcommand(
        "hashstats", "empirical collision rate of the linear hash family");
    sc->add_option("--bits", hash_args.bits, "output bits, 1..24")
        ->capture_default_str();
    sc->add_option("--in-bits", hash_args.in_bits, "input bits")
        ->capture_default_str();
    sc->add_option("--pairs", hash_args.pairs, "random input pairs")
        ->capture_default_str();
    sc->add_option("--seed", hash_args.seed, "tape seed")
        ->capture_default_str();
    sc->add_option("--sigma-limit", hash_args.sigma_limit,
                   "fail (exit 1) beyond this many sigmas")
        ->capture_default_str();
    attach_common(sc, hash_common, false);
    sc->callback([&] { code = cmd_hashstats(hash_args, hash_common); });
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    apply_config_file(args);
    std::reverse(args.begin(), args.end());  // CLI11 eats the vector backwards
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "parameter error: %s\n", e.what());
    return 2;
  } catch (const std::length_error& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return 1;
  }
  return code;
}

}  // namespace orthokey::cli
