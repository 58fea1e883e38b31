#ifndef TENREC_CLI_SUPPORT_HPP
#define TENREC_CLI_SUPPORT_HPP

// Config tables, validation, and report rendering for the command-line
// driver.  Everything that produces output lives here so that tests and the
// acceptance suite can call the exact code path the binary runs; all floats
// go through one %.17g formatter, which is what makes equal seeds give equal
// bytes.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tenrec/calculus.hpp"
#include "tenrec/field.hpp"
#include "tenrec/recovery.hpp"
#include "tenrec/semiclassical.hpp"
#include "tenrec/structure.hpp"
#include "tenrec/symtensor.hpp"

namespace tenrec {
namespace cli {

using Json = nlohmann::ordered_json;

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json tensor_to_json(const SymTensor& A) {
  Json j;
  j["d"] = A.d;
  j["k"] = A.k;
  Json comps = Json::array();
  for (const auto& c : A.comp) comps.push_back({c.real(), c.imag()});
  j["components"] = comps;
  return j;
}

inline SymTensor tensor_from_json(const Json& j) {
  if (!j.contains("d") || !j.contains("k") || !j.contains("components"))
    throw std::invalid_argument("tensor json: need d, k, components");
  const int d = j["d"].get<int>(), k = j["k"].get<int>();
  if (d < 1 || k < 0) throw std::invalid_argument("tensor json: bad shape");
  SymTensor A(d, k);
  const auto& comps = j["components"];
  if (static_cast<int>(comps.size()) != sym_dim(d, k))
    throw std::invalid_argument("tensor json: component count mismatch");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].size() != 2) throw std::invalid_argument("tensor json: component not [re, im]");
    A.comp[i] = Complex(comps[i][0].get<double>(), comps[i][1].get<double>());
  }
  return A;
}

inline Eigen::VectorXd parse_vector(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw std::invalid_argument("vector literal: trailing junk in " + item);
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("vector literal: empty");
  Eigen::VectorXd x(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) x(static_cast<int>(i)) = vals[i];
  return x;
}

// ---------------------------------------------------------------------------
// Config tables, one per subcommand.

struct DimCheckConfig {
  int d = 3;
  int kmax = 5;
};

struct TensorVerifyConfig {
  std::uint64_t seed = 7;
  int draws = 10;
  double tolerance = 1e-12;
};

struct DecomposeConfig {
  std::string input;
  std::string xi_csv;
  double tolerance = 1e-8;
};

struct RecoverConfig {
  int d = 3;
  int R = 1;
  std::string xi_csv = "0,0,1";
  std::string omega_mode = "free";
  int n_samples = 40;
  double tol = 1e-9;
  double angle_tol = 1e-8;
  std::uint64_t seed = 1;
};

struct CgoConfig {
  int d = 3;
  int m = 2;
  int N = 48;
  double L = 2.0 * M_PI;
  std::vector<double> h_list = {0.0625};
  double amplitude = 0.1;
  double width = 0.5;
  std::string center_csv;  // empty: box center
  std::uint64_t seed = 1;
  int max_iter = 30;
  double tol = 1e-12;
  double residual_tol = 1e-8;
  std::string preset;  // "", "a", or "b"
  int k0 = 0;
  double s = 0;      // 0: derive from preset
  double sigma = 0;  // 0: derive from preset
};

struct AvgConfig {
  int d = 3;
  int N = 24;
  int band = 3;
  int count = 1;
  double lambda = 1.0;
  double k = 0.0;
  double s = 0.0;
  double sigma = 0.0;
  std::vector<double> h_list = {0.125};
  int n_mc = 10000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  std::string subcommand;
  std::string emit;  // "", "json", or "csv"
  DimCheckConfig dim_check;
  TensorVerifyConfig tensor_verify;
  DecomposeConfig decompose;
  RecoverConfig recover;
  CgoConfig cgo;
  AvgConfig avg;
};

// Parameter presets of the two admissible-window cases: (a) k0 = floor(m/2)-1
// with m/2 + 1/2 < s < m/2 + 1, (b) m odd, k0 = (m-1)/2, s = m/2 + 1/2.  In
// both, sigma obeys 0 <= sigma < 1 and the support condition s - k0 - 2 sigma
// >= 0; unset values take the midpoint (a) or the stated point (b) and the
// largest admissible sigma capped below 1.
inline void apply_preset(CgoConfig& c) {
  if (c.preset.empty()) {
    if (c.s != 0 || c.sigma != 0) {
      if (!(c.sigma >= 0 && c.sigma < 1)) throw std::invalid_argument("cgo: sigma outside [0, 1)");
      if (!(c.s - c.k0 - 2 * c.sigma >= 0))
        throw std::invalid_argument("cgo: support condition s - k0 - 2 sigma >= 0 violated");
    }
    return;
  }
  if (c.preset == "a") {
    c.k0 = c.m / 2 - 1;
    if (c.k0 < 0) throw std::invalid_argument("cgo preset a: needs m >= 2");
    if (c.s == 0) c.s = c.m / 2.0 + 0.75;
    if (!(c.s > c.m / 2.0 + 0.5 && c.s < c.m / 2.0 + 1.0))
      throw std::invalid_argument("cgo preset a: s outside (m/2 + 1/2, m/2 + 1)");
  } else if (c.preset == "b") {
    if (c.m % 2 == 0) throw std::invalid_argument("cgo preset b: needs m odd");
    c.k0 = (c.m - 1) / 2;
    if (c.s == 0) c.s = c.m / 2.0 + 0.5;
    if (c.s != c.m / 2.0 + 0.5) throw std::invalid_argument("cgo preset b: s must equal m/2 + 1/2");
  } else {
    throw std::invalid_argument("cgo: unknown preset " + c.preset);
  }
  if (c.sigma == 0) c.sigma = std::min((c.s - c.k0) / 2.0, 0.95);
  if (!(c.sigma >= 0 && c.sigma < 1)) throw std::invalid_argument("cgo: sigma outside [0, 1)");
  if (!(c.s - c.k0 - 2 * c.sigma >= 0))
    throw std::invalid_argument("cgo: support condition s - k0 - 2 sigma >= 0 violated");
}

inline void validate(RunConfig& rc) {
  if (rc.subcommand == "dim-check") {
    if (rc.dim_check.d < 2 || rc.dim_check.d > 8) throw std::invalid_argument("dim-check: d outside 2..8");
    if (rc.dim_check.kmax < 0 || rc.dim_check.kmax > 16)
      throw std::invalid_argument("dim-check: kmax outside 0..16");
  } else if (rc.subcommand == "tensor-verify") {
    if (rc.tensor_verify.draws < 1) throw std::invalid_argument("tensor-verify: draws must be positive");
  } else if (rc.subcommand == "decompose") {
    if (rc.decompose.input.empty()) throw std::invalid_argument("decompose: input file required");
    parse_vector(rc.decompose.xi_csv);
  } else if (rc.subcommand == "recover") {
    auto& c = rc.recover;
    if (c.d != 3) throw std::invalid_argument("recover: only d = 3 is wired up");
    if (c.R < 0 || c.R > 3) throw std::invalid_argument("recover: R outside 0..3");
    if (c.n_samples < 1) throw std::invalid_argument("recover: n_samples must be positive");
    if (c.omega_mode != "free" && c.omega_mode != "tied")
      throw std::invalid_argument("recover: omega_mode must be free or tied");
    if (static_cast<int>(parse_vector(c.xi_csv).size()) != c.d)
      throw std::invalid_argument("recover: xi dimension mismatch");
  } else if (rc.subcommand == "cgo") {
    auto& c = rc.cgo;
    if (c.d != 3) throw std::invalid_argument("cgo: only d = 3 is wired up");
    if (c.m < 1 || c.m > 4) throw std::invalid_argument("cgo: m outside 1..4");
    if (c.N < 8 || c.N > 128) throw std::invalid_argument("cgo: N outside 8..128");
    if (c.h_list.empty()) throw std::invalid_argument("cgo: h list empty");
    for (double h : c.h_list)
      if (!(h > 0 && h <= 1)) throw std::invalid_argument("cgo: h outside (0, 1]");
    if (!c.center_csv.empty() && static_cast<int>(parse_vector(c.center_csv).size()) != c.d)
      throw std::invalid_argument("cgo: center dimension mismatch");
    apply_preset(c);
  } else if (rc.subcommand == "avg") {
    auto& c = rc.avg;
    if (c.d < 2 || c.d > 3) throw std::invalid_argument("avg: d outside 2..3");
    if (c.N < 8 || c.N > 128) throw std::invalid_argument("avg: N outside 8..128");
    if (c.band < 1 || 2 * c.band >= c.N) throw std::invalid_argument("avg: band outside the grid");
    if (c.count < 1) throw std::invalid_argument("avg: count must be positive");
    if (c.n_mc < 2) throw std::invalid_argument("avg: n_mc must be at least 2");
    if (c.h_list.empty()) throw std::invalid_argument("avg: h list empty");
    for (double h : c.h_list)
      if (!(h > 0 && h <= 1)) throw std::invalid_argument("avg: h outside (0, 1]");
    if (!(c.sigma >= 0 && c.sigma < 1)) throw std::invalid_argument("avg: sigma outside [0, 1)");
    if (!(c.s - c.k - 2 * c.sigma >= -1e-12))
      throw std::invalid_argument("avg: window s - k - 2 sigma >= 0 violated");
    if (!(2 * c.lambda - 2 * c.sigma >= c.s - c.k - 2 * c.sigma - 1e-12))
      throw std::invalid_argument("avg: window 2 lambda - 2 sigma too small");
  } else {
    throw std::invalid_argument("no subcommand selected");
  }
}

// ---------------------------------------------------------------------------
// Option wiring shared by the binary and the config tests.

inline void attach_options(CLI::App& app, RunConfig& rc) {
  // The config file is owned by the root app: config processing runs in the
  // root parse pass only, and subcommand options are reached through
  // [subcommand] sections.  fallthrough() lets "--config" appear after the
  // subcommand name; it must be set before the subcommands are added because
  // they inherit the flag at creation.
  app.fallthrough();
  app.set_config("--config", "", "TOML config file with a [subcommand] section");
  app.allow_config_extras(CLI::config_extras_mode::error);

  const auto hook = [&rc](CLI::App* sub) {
    sub->add_option("--emit", rc.emit)->check(CLI::IsMember({"json", "csv"}));
    return sub;
  };

  auto* dim = hook(app.add_subcommand("dim-check", "exact counting identities"));
  dim->add_option("--d", rc.dim_check.d);
  dim->add_option("--kmax", rc.dim_check.kmax);

  auto* tv = hook(app.add_subcommand("tensor-verify", "identity suite against the ordered-index expansion"));
  tv->add_option("--seed", rc.tensor_verify.seed);
  tv->add_option("--draws", rc.tensor_verify.draws);
  tv->add_option("--tolerance", rc.tensor_verify.tolerance);

  auto* dec = hook(app.add_subcommand("decompose", "tensor-structure splitting"));
  dec->add_option("--input", rc.decompose.input);
  dec->add_option("--xi", rc.decompose.xi_csv);
  dec->add_option("--tolerance", rc.decompose.tolerance);

  auto* rec = hook(app.add_subcommand("recover", "jet nullspace survey and induction certificates"));
  rec->add_option("--d", rc.recover.d);
  rec->add_option("--R", rc.recover.R);
  rec->add_option("--xi", rc.recover.xi_csv);
  rec->add_option("--omega-mode", rc.recover.omega_mode);
  rec->add_option("--n-samples", rc.recover.n_samples);
  rec->add_option("--tol", rc.recover.tol);
  rec->add_option("--angle-tol", rc.recover.angle_tol);
  rec->add_option("--seed", rc.recover.seed);

  auto* cg = hook(app.add_subcommand("cgo", "corrector fixed point sweep"));
  cg->add_option("--d", rc.cgo.d);
  cg->add_option("--m", rc.cgo.m);
  cg->add_option("--N", rc.cgo.N);
  cg->add_option("--L", rc.cgo.L);
  cg->add_option("--h-list", rc.cgo.h_list);
  cg->add_option("--amplitude", rc.cgo.amplitude);
  cg->add_option("--width", rc.cgo.width);
  cg->add_option("--center", rc.cgo.center_csv);
  cg->add_option("--seed", rc.cgo.seed);
  cg->add_option("--max-iter", rc.cgo.max_iter);
  cg->add_option("--tol", rc.cgo.tol);
  cg->add_option("--residual-tol", rc.cgo.residual_tol);
  cg->add_option("--preset", rc.cgo.preset);
  cg->add_option("--k0", rc.cgo.k0);
  cg->add_option("--s", rc.cgo.s);
  cg->add_option("--sigma", rc.cgo.sigma);

  auto* av = hook(app.add_subcommand("avg", "frequency-averaged norm ratio sweep"));
  av->add_option("--d", rc.avg.d);
  av->add_option("--N", rc.avg.N);
  av->add_option("--band", rc.avg.band);
  av->add_option("--count", rc.avg.count);
  av->add_option("--lambda", rc.avg.lambda);
  av->add_option("--k", rc.avg.k);
  av->add_option("--s", rc.avg.s);
  av->add_option("--sigma", rc.avg.sigma);
  av->add_option("--h-list", rc.avg.h_list);
  av->add_option("--n-mc", rc.avg.n_mc);
  av->add_option("--seed", rc.avg.seed);

  app.require_subcommand(0, 1);
}

inline std::string selected_subcommand(const CLI::App& app) {
  const auto subs = app.get_subcommands();
  return subs.empty() ? std::string{} : subs.front()->get_name();
}

// ---------------------------------------------------------------------------
// Ordered-index expansion used by tensor-verify.  This is a from-scratch
// route: tensors are blown up to dense d^k arrays and the operations are
// literal sums over ordered tuples, so agreement with the counted-index
// implementation is informative.

namespace verify_detail {

inline std::vector<Complex> expand(const SymTensor& A) {
  std::size_t n = 1;
  for (int i = 0; i < A.k; ++i) n *= static_cast<std::size_t>(A.d);
  std::vector<Complex> dense(n);
  for (std::size_t f = 0; f < n; ++f) {
    CountedIndex c(A.d, 0);
    std::size_t rest = f;
    for (int i = 0; i < A.k; ++i) {
      c[rest % A.d] += 1;
      rest /= A.d;
    }
    dense[f] = A.comp[counted_rank(c)];
  }
  return dense;
}

inline double rel_err(const std::vector<Complex>& got, const std::vector<Complex>& want) {
  double diff = 0, scale = 1e-300;
  for (std::size_t i = 0; i < got.size(); ++i) {
    diff = std::max(diff, std::abs(got[i] - want[i]));
    scale = std::max(scale, std::abs(want[i]));
  }
  return diff / std::max(scale, 1.0);
}

inline SymTensor random_tensor(int d, int k, Rng& rng) {
  SymTensor A(d, k);
  for (auto& c : A.comp) c = rng.cnormal();
  return A;
}

inline Eigen::VectorXcd random_cvec(int d, Rng& rng) {
  Eigen::VectorXcd z(d);
  for (int i = 0; i < d; ++i) z(i) = rng.cnormal();
  return z;
}

inline Eigen::VectorXcd random_isotropic(int d, Rng& rng) {
  return sample_V(d, rng.raw() | 1).value;
}

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Reports.

struct RunReport {
  std::string body;
  std::string ext = "json";  // json or csv
  bool pass = true;
  std::string first_failure;
};

inline void note_failure(RunReport& rep, const std::string& what) {
  rep.pass = false;
  if (rep.first_failure.empty()) rep.first_failure = what;
}

inline Json dim_check_report_json(const DimCheckConfig& c) {
  Json rows = Json::array();
  bool all = true;
  for (int k = 0; k <= c.kmax; ++k) {
    Json row;
    row["k"] = k;
    row["sym_dim"] = sym_dim(c.d, k);
    row["poly_dim_le"] = poly_dim_le(c.d, k);
    bool ok = true;
    if (c.d > 1 && k > 0)
      ok = ok && sym_dim(c.d, k) == sym_dim(c.d - 1, k) + sym_dim(c.d, k - 1);
    long long sum = 0;
    for (int j = 0; j <= k; ++j) sum += sym_dim(c.d, j);
    ok = ok && sum == poly_dim_le(c.d, k);
    const long long lhs = binom(k + c.d - 1, c.d - 1) - binom(k + c.d - 3, c.d - 1);
    const long long rhs = binom(k + c.d - 2, c.d - 2) + binom(k + c.d - 3, c.d - 2);
    row["codim_direct"] = lhs;
    row["codim_split"] = rhs;
    ok = ok && lhs == rhs;
    row["ok"] = ok;
    all = all && ok;
    rows.push_back(row);
  }
  Json j;
  j["subcommand"] = "dim-check";
  j["d"] = c.d;
  j["kmax"] = c.kmax;
  j["rows"] = rows;
  j["pass"] = all;
  return j;
}

inline RunReport run_dim_check(const DimCheckConfig& c) {
  const Json j = dim_check_report_json(c);
  RunReport rep;
  rep.body = j.dump(1);
  rep.body += "\n";
  if (!j["pass"].get<bool>()) note_failure(rep, "counting identity mismatch");
  return rep;
}

inline Json tensor_verify_report_json(const TensorVerifyConfig& c) {
  using namespace verify_detail;
  Rng rng(c.seed);
  Json j;
  j["subcommand"] = "tensor-verify";
  j["seed"] = c.seed;
  j["draws"] = c.draws;
  Json ids = Json::array();
  bool all = true;

  const auto push = [&](const std::string& name, double err) {
    Json row;
    row["identity"] = name;
    row["max_rel_err"] = err;
    const bool ok = err < c.tolerance;
    row["ok"] = ok;
    all = all && ok;
    ids.push_back(row);
  };

  // Contraction against the literal ordered sum.
  double err = 0;
  for (int d = 2; d <= 4; ++d)
    for (int k = 1; k <= 4; ++k)
      for (int jj = 1; jj <= k; ++jj) {
        if (k + jj > 6) continue;
        for (int t = 0; t < c.draws; ++t) {
          const SymTensor A = random_tensor(d, k, rng), B = random_tensor(d, jj, rng);
          const auto da = expand(A), db = expand(B);
          SymTensor want(d, k - jj);
          std::size_t nb = db.size();
          for (const auto& alpha : counted_range(d, k - jj)) {
            Complex acc = 0;
            for (std::size_t fb = 0; fb < nb; ++fb) {
              CountedIndex idx = alpha;
              std::size_t rest = fb;
              for (int i = 0; i < jj; ++i) {
                idx[rest % d] += 1;
                rest /= d;
              }
              acc += A.comp[counted_rank(idx)] * db[fb];
            }
            want.comp[counted_rank(alpha)] = acc;
          }
          err = std::max(err, rel_err(expand(contract(A, B)), expand(want)));
        }
      }
  push("contraction_vs_ordered_expansion", err);

  // Symmetrized product against subset enumeration.
  err = 0;
  for (int d = 2; d <= 4; ++d)
    for (int k = 0; k <= 3; ++k)
      for (int jj = 0; jj <= 3; ++jj) {
        if (k + jj > 5 || k + jj == 0) continue;
        for (int t = 0; t < c.draws; ++t) {
          const SymTensor A = random_tensor(d, k, rng), B = random_tensor(d, jj, rng);
          const int total = k + jj;
          std::size_t n = 1;
          for (int i = 0; i < total; ++i) n *= static_cast<std::size_t>(d);
          std::vector<Complex> want(n, 0.0);
          const double denom = static_cast<double>(binom(total, k));
          for (std::size_t f = 0; f < n; ++f) {
            std::vector<int> digits(total);
            std::size_t rest = f;
            for (int i = 0; i < total; ++i) {
              digits[i] = static_cast<int>(rest % d);
              rest /= d;
            }
            Complex acc = 0;
            for (unsigned mask = 0; mask < (1u << total); ++mask) {
              if (__builtin_popcount(mask) != k) continue;
              CountedIndex ca(d, 0), cb(d, 0);
              for (int i = 0; i < total; ++i)
                (mask >> i & 1u ? ca : cb)[digits[i]] += 1;
              acc += A.comp[counted_rank(ca)] * B.comp[counted_rank(cb)];
            }
            want[f] = acc / denom;
          }
          err = std::max(err, rel_err(expand(tensor_product(A, B)), want));
        }
      }
  push("product_vs_subset_enumeration", err);

  // Pairing with a full vector power factors through the pieces.
  err = 0;
  for (int t = 0; t < c.draws; ++t)
    for (int d = 2; d <= 4; ++d)
      for (int k = 1; k <= 3; ++k)
        for (int jj = 1; jj <= 2; ++jj) {
          const SymTensor A = random_tensor(d, k, rng), B = random_tensor(d, jj, rng);
          const Eigen::VectorXcd z = random_cvec(d, rng);
          const Complex lhs = dot(tensor_product(A, B), tensor_power(z, k + jj));
          const Complex rhs = dot(A, tensor_power(z, k)) * dot(B, tensor_power(z, jj));
          err = std::max(err, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
        }
  push("power_pairing_factorization", err);

  // Isotropic pairings with too few generic slots vanish.
  err = 0;
  for (int t = 0; t < c.draws; ++t)
    for (auto [d, k, n, jj] : {std::tuple{3, 1, 1, 0}, {3, 0, 2, 1}, {4, 2, 2, 0}}) {
      const SymTensor A = random_tensor(d, k, rng);
      const Eigen::VectorXcd zeta = random_isotropic(d, rng), omega = random_cvec(d, rng);
      const SymTensor padded = tensor_product(A, tensor_power(identity2(d), n));
      const SymTensor probe =
          tensor_product(tensor_power(zeta, k + 2 * n - jj), tensor_power(omega, jj));
      double scale = max_abs(padded) * std::pow(static_cast<double>(omega.norm() + zeta.norm()), k + 2 * n);
      err = std::max(err, std::abs(dot(padded, probe)) / std::max(1.0, scale));
    }
  push("slot_deficit_vanishing", err);

  // Balanced identity absorption with the tabulated constant.
  err = 0;
  for (int t = 0; t < c.draws; ++t)
    for (auto [d, k, n] : {std::tuple{3, 0, 1}, {3, 1, 1}, {3, 2, 1}, {3, 0, 2}, {4, 1, 2}}) {
      const SymTensor A = random_tensor(d, k, rng);
      const Eigen::VectorXcd zeta = random_isotropic(d, rng), omega = random_cvec(d, rng);
      const SymTensor padded = tensor_product(A, tensor_power(identity2(d), n));
      const SymTensor probe = tensor_product(tensor_power(zeta, k + n), tensor_power(omega, n));
      const Complex oz = zeta.transpose() * omega;
      const Complex rhs = id3_constant(k, n, d) * std::pow(oz, n) * dot(A, tensor_power(zeta, k));
      err = std::max(err, std::abs(dot(padded, probe) - rhs) / std::max(1.0, std::abs(rhs)));
    }
  push("identity_absorption", err);

  // The absorption constant table against the closed-form candidates.
  const auto fact = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  Json table = Json::array();
  double terr = 0;
  bool matches_full = true;
  for (int n = 1; 2 * n <= 6; ++n)
    for (int k = 0; k + 2 * n <= 6; ++k) {
      const double value = id3_constant(k, n, 3);
      const double closed = std::pow(2.0, n) * fact(n) * fact(k + n) / fact(k + 2 * n);
      Json row;
      row["k"] = k;
      row["n"] = n;
      row["value"] = value;
      row["closed_form"] = closed;
      table.push_back(row);
      terr = std::max(terr, std::abs(value - closed));
      matches_full = matches_full && std::abs(value - closed) < 1e-12;
    }
  push("absorption_constant_table", terr);
  j["identities"] = ids;
  j["absorption_table"] = table;
  j["matched_closed_form"] = matches_full ? "2^n n! (k+n)! / (k+2n)!" : "none";
  j["pass"] = all && matches_full;
  return j;
}

inline RunReport run_tensor_verify(const TensorVerifyConfig& c) {
  const Json j = tensor_verify_report_json(c);
  RunReport rep;
  rep.body = j.dump(1);
  rep.body += "\n";
  if (!j["pass"].get<bool>()) {
    for (const auto& row : j["identities"])
      if (!row["ok"].get<bool>()) {
        note_failure(rep, row["identity"].get<std::string>() + " exceeded tolerance");
        break;
      }
    if (rep.pass) note_failure(rep, "absorption table mismatch");
  }
  return rep;
}

inline RunReport run_decompose(const DecomposeConfig& c) {
  std::ifstream in(c.input);
  if (!in) throw std::invalid_argument("decompose: cannot open " + c.input);
  Json parsed;
  in >> parsed;
  const SymTensor A = tensor_from_json(parsed);
  const Eigen::VectorXd xi = parse_vector(c.xi_csv);
  if (static_cast<int>(xi.size()) != A.d)
    throw std::invalid_argument("decompose: xi dimension mismatch");
  const Decomposition dec = decompose_V_xi(A, xi);
  Json j;
  j["subcommand"] = "decompose";
  if (dec.B)
    j["B"] = tensor_to_json(*dec.B);
  else
    j["B"] = nullptr;
  if (dec.C)
    j["C"] = tensor_to_json(*dec.C);
  else
    j["C"] = nullptr;
  j["residual"] = dec.residual;
  j["pass"] = dec.residual <= c.tolerance;
  RunReport rep;
  rep.body = j.dump(1);
  rep.body += "\n";
  if (!j["pass"].get<bool>()) note_failure(rep, "reconstruction residual above tolerance");
  return rep;
}

inline Json recover_report_json(const RecoverConfig& c) {
  const Eigen::VectorXd xi = parse_vector(c.xi_csv);
  const OmegaMode mode =
      c.omega_mode == "tied" ? OmegaMode::tied_to_zeta : OmegaMode::free_direction;
  Json j;
  j["subcommand"] = "recover";
  j["R"] = c.R;
  j["omega_mode"] = c.omega_mode;
  Json rows = Json::array();
  Json certs = Json::array();
  bool all = true;
  for (int k = 0; k <= 2 * c.R + 1; ++k) {
    const NullspaceReport rep =
        jet_nullspace(c.d, k, c.R, xi, c.n_samples, c.tol, mode, c.seed + 10 * k);
    Json row;
    row["k"] = k;
    row["value_dim"] = rep.value_dim;
    const int s = 2 * c.R + 1 - k;
    const int predicted = k <= c.R ? 0 : sym_dim(c.d, 2 * k - 2 * c.R - 2);
    row["predicted_dim"] = predicted;
    row["rank"] = rep.rank;
    row["samples_used"] = rep.samples_used;
    Json angles = Json::array();
    if (k > c.R && rep.value_dim > 0) {
      const Eigen::MatrixXcd range = power_range_basis(c.d, k, s + 1, xi);
      const Eigen::VectorXd theta = principal_angles(range, rep.value_basis);
      double worst = 0;
      for (int i = 0; i < theta.size(); ++i) {
        angles.push_back(theta(i));
        worst = std::max(worst, theta(i));
      }
      if (worst > c.angle_tol) {
        all = false;
        row["containment_ok"] = false;
      } else {
        row["containment_ok"] = true;
      }
    }
    row["principal_angles"] = angles;
    rows.push_back(row);

    // Certificate on a synthetic field of this order: zero field below the
    // threshold, a structured power field above it.  One order past the
    // threshold the power kills every sampled condition, so the certificate
    // must conclude; further up a generic structured field genuinely fails
    // the jet hypothesis (the predicted table is not sharp there), so those
    // rows are recorded and only checked for internal consistency.
    CoefficientField F(c.d, k);
    if (k > c.R) {
      Rng rng(c.seed + 977 * (k + 1));
      SymTensor B(c.d, 2 * k - 2 * c.R - 2);
      for (auto& cc : B.comp) cc = rng.cnormal();
      F = power_field(s + 1, B, xi, 1.0);
    }
    const Certificate cert = certify_by_induction(F, xi, c.R, c.tol * 10, c.seed + 13 * k);
    Json cj;
    cj["k"] = k;
    cj["hypothesis_ok"] = cert.hypothesis_ok;
    cj["concluded"] = cert.concluded;
    cj["max_condition"] = cert.max_condition;
    cj["residual"] = cert.residual;
    cj["chain_mismatch"] = cert.chain_mismatch;
    certs.push_back(cj);
    if (k <= c.R + 1)
      all = all && cert.hypothesis_ok && cert.concluded;
    else
      all = all && (!cert.hypothesis_ok || cert.concluded);
  }
  j["rows"] = rows;
  j["certificates"] = certs;
  j["pass"] = all;
  return j;
}

inline std::string recover_report_csv(const Json& j) {
  std::string out = "k,value_dim,predicted_dim,max_condition,residual,chain_mismatch\n";
  for (std::size_t i = 0; i < j["rows"].size(); ++i) {
    const auto& row = j["rows"][i];
    const auto& cert = j["certificates"][i];
    out += std::to_string(row["k"].get<int>()) + ",";
    out += std::to_string(row["value_dim"].get<int>()) + ",";
    out += std::to_string(row["predicted_dim"].get<int>()) + ",";
    out += fmt(cert["max_condition"].get<double>()) + ",";
    out += fmt(cert["residual"].get<double>()) + ",";
    out += fmt(cert["chain_mismatch"].get<double>()) + "\n";
  }
  return out;
}

inline RunReport run_recover(const RecoverConfig& c, const std::string& emit) {
  const Json j = recover_report_json(c);
  RunReport rep;
  if (emit == "csv") {
    rep.body = recover_report_csv(j);
    rep.ext = "csv";
  } else {
    rep.body = j.dump(1);
    rep.body += "\n";
  }
  if (!j["pass"].get<bool>()) note_failure(rep, "containment or certificate failure");
  return rep;
}

struct CgoRow {
  double h = 0;
  CgoResult result;
};

inline std::vector<CgoRow> cgo_sweep(const CgoConfig& c) {
  const Eigen::VectorXd center =
      c.center_csv.empty() ? Eigen::VectorXd::Constant(c.d, c.L / 2.0) : parse_vector(c.center_csv);
  GridTensorField A0;
  A0.d = c.d;
  A0.k = 0;
  A0.comp.push_back(gaussian_bump(c.d, c.L, c.N, center, c.width, c.amplitude));
  PolyPlaneWave a(Eigen::VectorXd::Zero(c.d));
  a.add_term(CountedIndex(c.d, 0), 1.0);
  std::vector<CgoRow> rows;
  for (double h : c.h_list) {
    SemiclassicalWeight w;
    w.h = h;
    w.zeta = sample_V(c.d, c.seed);
    CgoRow row;
    row.h = h;
    row.result = cgo_solve({A0}, a, w, c.m, c.max_iter, c.tol);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string cgo_csv(const std::vector<CgoRow>& rows) {
  std::string out = "h,x_norm_psi,residual,contraction_factor\n";
  for (const auto& r : rows)
    out += fmt(r.h) + "," + fmt(r.result.x_norm_psi) + "," + fmt(r.result.equation_residual) +
           "," + fmt(r.result.contraction) + "\n";
  return out;
}

inline Json cgo_report_json(const CgoConfig& c, const std::vector<CgoRow>& rows) {
  Json j;
  j["subcommand"] = "cgo";
  j["m"] = c.m;
  j["N"] = c.N;
  j["k0"] = c.k0;
  j["s"] = c.s;
  j["sigma"] = c.sigma;
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json row;
    row["h"] = r.h;
    row["x_norm_psi"] = r.result.x_norm_psi;
    row["iterations"] = r.result.iterations;
    row["converged"] = r.result.converged;
    row["contraction"] = r.result.contraction;
    row["equation_residual"] = r.result.equation_residual;
    row["floor_mass"] = r.result.floor_mass;
    row["alias_tail"] = r.result.alias_tail;
    arr.push_back(row);
  }
  j["rows"] = arr;
  return j;
}

inline RunReport run_cgo(const CgoConfig& c, const std::string& emit) {
  const auto rows = cgo_sweep(c);
  RunReport rep;
  if (emit == "json") {
    rep.body = cgo_report_json(c, rows).dump(1);
    rep.body += "\n";
  } else {
    rep.body = cgo_csv(rows);
    rep.ext = "csv";
  }
  for (const auto& r : rows) {
    if (!r.result.converged) note_failure(rep, "fixed point did not converge at h=" + fmt(r.h));
    if (r.result.equation_residual > c.residual_tol)
      note_failure(rep, "equation residual above tolerance at h=" + fmt(r.h));
  }
  return rep;
}

inline GridField band_limited_field(int d, int N, int band, Rng& rng, double L = 2.0 * M_PI) {
  GridField probe;
  probe.d = d;
  probe.L = L;
  probe.N = N;
  std::vector<Complex> cc(probe.size(), 0.0);
  std::vector<int> n(d, -band);
  while (true) {
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) flat = flat * N + static_cast<std::size_t>((n[a] + N) % N);
    cc[flat] = rng.cnormal();
    int a = d - 1;
    while (a >= 0 && ++n[a] > band) n[a--] = -band;
    if (a < 0) break;
  }
  return grid_from_coeffs(d, L, N, std::move(cc));
}

struct AvgRow {
  int field_index = 0;
  double h = 0;
  AvgReport report;
};

inline std::vector<AvgRow> avg_sweep(const AvgConfig& c) {
  const IsotropicVector zeta = sample_V(c.d, c.seed);
  std::vector<AvgRow> rows;
  for (int i = 0; i < c.count; ++i) {
    Rng rng(c.seed + 1000 * (i + 1));
    const GridField f = band_limited_field(c.d, c.N, c.band, rng);
    for (double h : c.h_list) {
      AvgRow row;
      row.field_index = i;
      row.h = h;
      row.report = avg_estimate_mc(f, c.lambda, c.s, c.k, c.sigma, h, zeta, c.n_mc,
                                   c.seed + 7919 * (i + 1));
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string avg_csv(const std::vector<AvgRow>& rows) {
  std::string out = "h,mc_ratio,mc_stderr\n";
  for (const auto& r : rows)
    out += fmt(r.h) + "," + fmt(r.report.ratio) + "," + fmt(r.report.stderr_ratio) + "\n";
  return out;
}

inline RunReport run_avg(const AvgConfig& c, const std::string& emit) {
  const auto rows = avg_sweep(c);
  RunReport rep;
  if (emit == "json") {
    Json j;
    j["subcommand"] = "avg";
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json row;
      row["field"] = r.field_index;
      row["h"] = r.h;
      row["mc_ratio"] = r.report.ratio;
      row["mc_stderr"] = r.report.stderr_ratio;
      arr.push_back(row);
    }
    j["rows"] = arr;
    rep.body = j.dump(1);
    rep.body += "\n";
  } else {
    rep.body = avg_csv(rows);
    rep.ext = "csv";
  }
  for (const auto& r : rows)
    if (!(r.report.ratio > 0) || !std::isfinite(r.report.ratio))
      note_failure(rep, "degenerate ratio at h=" + fmt(r.h));
  return rep;
}

inline RunReport run(const RunConfig& rc) {
  if (rc.subcommand == "dim-check") return run_dim_check(rc.dim_check);
  if (rc.subcommand == "tensor-verify") return run_tensor_verify(rc.tensor_verify);
  if (rc.subcommand == "decompose") return run_decompose(rc.decompose);
  if (rc.subcommand == "recover") return run_recover(rc.recover, rc.emit);
  if (rc.subcommand == "cgo") return run_cgo(rc.cgo, rc.emit.empty() ? "csv" : rc.emit);
  if (rc.subcommand == "avg") return run_avg(rc.avg, rc.emit.empty() ? "csv" : rc.emit);
  throw std::invalid_argument("no subcommand selected");
}

}  // namespace cli
}  // namespace tenrec

#endif
