#ifndef TENREC_RECOVERY_HPP
#define TENREC_RECOVERY_HPP

// The inverse-problem engine: Fourier-side main-equation pairings on
// closed-form coefficient fields, the triangular reduction to pieces, the
// sampled jet-constraint nullspace with its value-part projection, and the
// certificate chain that runs the structure decompositions on concrete
// tensors.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tenrec/field.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/structure.hpp"
#include "tenrec/symtensor.hpp"

namespace tenrec {

inline void require_in_V_xi(const Eigen::VectorXcd& zeta, const Eigen::VectorXd& xi,
                            double tol = 1e-10) {
  const Complex zz = (zeta.array() * zeta.array()).sum();
  const double n2 = zeta.squaredNorm();
  double dev = std::abs(zz) / 2.0 + std::abs(n2 - 2.0) / 2.0;
  if (xi.size() > 0 && xi.norm() > 0) {
    const Complex zx = (zeta.array() * xi.cast<Complex>().array()).sum();
    dev = std::max(dev, std::abs(zx) / xi.norm());
  }
  if (dev > tol) throw std::invalid_argument("direction is not in the admissible isotropic set");
}

inline double falling(int n, int k) {
  double p = 1;
  for (int i = 0; i < k; ++i) p *= static_cast<double>(n - i);
  return p;
}

// <A^{(k+j)}.(zeta^j x D^k)(omega.x)^{r1}, (omega.x)^{r2} e^{-ix.xi}> summed
// over k = 0..k0-j with weight binom(k+j,j), evaluated on the Fourier side:
// each x-power becomes i (omega.grad_xi), each derivative D on the amplitude
// becomes a falling factorial and an omega contraction.
inline Complex main_equation_value(const std::vector<CoefficientField>& coeffs, int j,
                                   const Eigen::VectorXd& xi, const Eigen::VectorXcd& zeta,
                                   const Eigen::VectorXcd& omega, int r1, int r2, int k0) {
  if (j < 0 || j > k0) throw std::invalid_argument("main_equation_value: j out of range");
  require_in_V_xi(zeta, xi);
  const Complex inv_i(0, -1);
  const Complex unit_i(0, 1);
  Complex total = 0;
  for (int k = 0; k <= std::min(k0 - j, r1); ++k) {
    const int order = k + j;
    if (order >= static_cast<int>(coeffs.size())) break;
    const CoefficientField& F = coeffs[order];
    if (F.terms.empty()) continue;
    if (F.k != order) throw std::invalid_argument("main_equation_value: coefficient order mismatch");
    const int derivs = r1 - k + r2;
    const SymTensor jet = eval_field(F, xi, omega, derivs);
    const SymTensor probe = tensor_product(tensor_power(zeta, j), tensor_power(omega, k));
    total += static_cast<double>(binom(order, j)) * std::pow(inv_i, k) * falling(r1, k) *
             std::pow(unit_i, derivs) * dot(jet, probe);
  }
  return total;
}

struct Piece {
  int order = 0;  // coefficient order l
  int j = 0;      // zeta-power in the probe; omega-power is l - j
  int r = 0;      // x-power of the pairing amplitude
  Complex value;
};

// Direct Fourier-side evaluation of one piece:
// i^r (omega.grad)^r [Ahat^{(l)}.(zeta^j x omega^{l-j})](xi).
inline Complex piece_value(const CoefficientField& F, int j, int r, const Eigen::VectorXd& xi,
                           const Eigen::VectorXcd& zeta, const Eigen::VectorXcd& omega) {
  const SymTensor jet = eval_field(F, xi, omega, r);
  const SymTensor probe = tensor_product(tensor_power(zeta, j), tensor_power(omega, F.k - j));
  return std::pow(Complex(0, 1), r) * dot(jet, probe);
}

// Triangular extraction of every piece with r + (l-j) <= R from
// main-equation values alone.  For fixed j and total budget b, the amplitude
// exponent r1 = l - j isolates the piece of order l on top of already-known
// lower-order pieces of the same budget.
inline std::vector<Piece> reduce_to_pieces(const std::vector<CoefficientField>& coeffs, int k0,
                                           int R, const Eigen::VectorXd& xi,
                                           const Eigen::VectorXcd& zeta,
                                           const Eigen::VectorXcd& omega) {
  if (R < 0) throw std::invalid_argument("reduce_to_pieces: negative budget");
  const Complex inv_i(0, -1);
  std::vector<Piece> out;
  for (int j = 0; j <= k0; ++j) {
    // known[q] holds piece(j+q, j, b-q) for the budget b currently processed.
    for (int b = 0; b <= R; ++b) {
      std::vector<Complex> known;
      for (int q = 0; q <= std::min(b, k0 - j); ++q) {
        const Complex mev = main_equation_value(coeffs, j, xi, zeta, omega, q, b - q, k0);
        Complex lower = 0;
        for (int k = 0; k < q; ++k)
          lower += static_cast<double>(binom(k + j, j)) * std::pow(inv_i, k) * falling(q, k) *
                   known[k];
        const double top = static_cast<double>(binom(q + j, j)) * falling(q, q);
        const Complex piece = (mev - lower) / (std::pow(inv_i, q) * top);
        known.push_back(piece);
        out.push_back({j + q, j, b - q, piece});
      }
    }
  }
  return out;
}

enum class OmegaMode { free_direction, tied_to_zeta };

struct NullspaceReport {
  int unknown_dim = 0;
  int rank = 0;
  int value_dim = 0;
  Eigen::MatrixXcd value_basis;  // orthonormal columns spanning the value part
  int samples_used = 0;
};

// Constraint rows (J_r.omega^r).(zeta^{k-j} x omega^j) = 0 over sampled
// (zeta, omega) pairs, r + j <= R, j <= k.  The system is block diagonal in
// r, so the value part is governed by the r = 0 rows; the full system is
// still assembled as specified.  In free mode omega is an independent random
// real direction; in tied mode omega = Re zeta.
inline NullspaceReport jet_nullspace(int d, int k, int R, const Eigen::VectorXd& xi,
                                     int n_samples, double tol,
                                     OmegaMode mode = OmegaMode::free_direction,
                                     uint64_t seed = 1) {
  if (k < 0 || R < 0) throw std::invalid_argument("jet_nullspace: negative order");
  const int sdk = sym_dim(d, k);
  std::vector<int> offset;
  int unknowns = 0;
  for (int r = 0; r <= R; ++r) {
    offset.push_back(unknowns);
    unknowns += sym_dim(d, r) * sdk;
  }
  std::vector<std::pair<int, int>> rows_rj;
  for (int r = 0; r <= R; ++r)
    for (int j = 0; j <= std::min(k, R - r); ++j) rows_rj.push_back({r, j});

  const auto build = [&](int n, uint64_t s0) {
    Eigen::MatrixXcd M(n * static_cast<int>(rows_rj.size()), unknowns);
    M.setZero();
    Rng rng(s0);
    int row = 0;
    for (int s = 0; s < n; ++s) {
      const Eigen::VectorXcd zeta =
          (xi.size() && xi.norm() > 0 ? sample_V_xi(xi, rng.raw() | 1) : sample_V(d, rng.raw() | 1))
              .value;
      Eigen::VectorXd omega(d);
      if (mode == OmegaMode::tied_to_zeta)
        omega = zeta.real();
      else
        for (int i = 0; i < d; ++i) omega(i) = rng.normal();
      const Eigen::VectorXcd omc = omega.cast<Complex>();
      for (const auto& [r, j] : rows_rj) {
        const SymTensor probe = tensor_product(tensor_power(zeta, k - j), tensor_power(omc, j));
        const auto mu_range = counted_range(d, r);
        for (size_t mu = 0; mu < mu_range.size(); ++mu) {
          Complex wmu = static_cast<double>(multiplicity(mu_range[mu]));
          for (size_t i = 0; i < mu_range[mu].size(); ++i)
            for (int q = 0; q < mu_range[mu][i]; ++q) wmu *= omega(i);
          const auto nu_range = counted_range(d, k);
          for (size_t nu = 0; nu < nu_range.size(); ++nu)
            M(row, offset[r] + static_cast<int>(mu) * sdk + static_cast<int>(nu)) =
                wmu * static_cast<double>(multiplicity(nu_range[nu])) * probe.comp[nu];
        }
        const double rn = M.row(row).norm();
        if (rn > 0) M.row(row) /= rn;
        ++row;
      }
    }
    return M;
  };

  int n = std::max(n_samples, (4 * unknowns) / static_cast<int>(rows_rj.size()) + 1);
  int last_rank = -1;
  int stable = 0;
  Eigen::MatrixXcd M;
  for (int iter = 0; iter < 24; ++iter) {
    M = build(n, seed);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > tol * sv(0)) ++rank;
    if (rank == last_rank) {
      ++stable;
    } else {
      stable = 0;
      last_rank = rank;
    }
    if (stable >= 2) {
      NullspaceReport rep;
      rep.unknown_dim = unknowns;
      rep.rank = rank;
      rep.samples_used = n;
      const int nullity = unknowns - rank;
      if (nullity == 0) {
        rep.value_dim = 0;
        rep.value_basis = Eigen::MatrixXcd(sdk, 0);
        return rep;
      }
      const Eigen::MatrixXcd N = svd.matrixV().rightCols(nullity);
      const Eigen::MatrixXcd B0 = N.topRows(sdk);
      Eigen::BDCSVD<Eigen::MatrixXcd> proj(B0, Eigen::ComputeThinU);
      const auto& ps = proj.singularValues();
      int vdim = 0;
      while (vdim < ps.size() && ps(vdim) > tol) ++vdim;
      rep.value_dim = vdim;
      rep.value_basis = proj.matrixU().leftCols(vdim);
      return rep;
    }
    n = (n * 5) / 4 + 1;
  }
  throw std::runtime_error("jet_nullspace: rank did not stabilize");
}

// Orthonormal basis of range(B -> sym(xi^p x B)) for B of order k - p,
// in plain component coordinates.
inline Eigen::MatrixXcd power_range_basis(int d, int k, int p, const Eigen::VectorXd& xi) {
  const int sdk = sym_dim(d, k);
  const int sdb = sym_dim(d, k - p);
  const Eigen::VectorXcd xic = xi.cast<Complex>();
  Eigen::MatrixXcd M(sdk, sdb);
  for (int b = 0; b < sdb; ++b) {
    SymTensor E(d, k - p);
    E.comp[b] = 1.0;
    const SymTensor col = tensor_product(tensor_power(xic, p), E);
    for (int i = 0; i < sdk; ++i) M(i, b) = col.comp[i];
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
  Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(sdk, sdb);
  return Q;
}

// Principal angles between the column spaces of two orthonormal bases,
// ascending.  Cosines from Q1* Q2 resolve angles near pi/2; sines from the
// projected residual resolve angles near zero, where acos alone would lose
// half the digits.  atan2 of the matched pair is accurate in both regimes.
inline Eigen::VectorXd principal_angles(const Eigen::MatrixXcd& Q1, const Eigen::MatrixXcd& Q2) {
  if (Q1.cols() == 0 || Q2.cols() == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXcd C = Q1.adjoint() * Q2;
  Eigen::BDCSVD<Eigen::MatrixXcd> csvd(C);
  Eigen::BDCSVD<Eigen::MatrixXcd> ssvd(Q2 - Q1 * C);
  const auto& cs = csvd.singularValues();  // descending
  const auto& sn = ssvd.singularValues();  // descending, pairs in reverse
  Eigen::VectorXd angles(cs.size());
  for (int i = 0; i < angles.size(); ++i)
    angles(i) = std::atan2(sn(sn.size() - 1 - i), std::min(1.0, cs(i)));
  return angles;
}

struct Certificate {
  int k = 0;
  int R = 0;
  int s = 0;  // 2R+1-k when k > R, else unused
  bool hypothesis_ok = false;
  double max_condition = 0;  // worst scaled condition violation
  bool concluded = false;
  double residual = 0;                  // distance to the predicted structure
  std::optional<SymTensor> B;           // recovered order k-s-1 factor (k > R)
  std::vector<double> chain_b_norms;    // transverse parts along the peeling chain
  double chain_mismatch = 0;            // chain result vs least-squares fit
};

// Hypothesis check plus conclusion: for k <= R the value must vanish; for
// R+1 <= k <= 2R+1 the value must equal sym(xi^{s+1} x B), found by least
// squares in the multiplicity-weighted norm, with the peeling chain run
// step by step through the constrained structure decomposition.
inline Certificate certify_by_induction(const CoefficientField& F, const Eigen::VectorXd& xi,
                                        int R, double tol, uint64_t seed = 1) {
  const int d = F.d;
  const int k = F.k;
  if (k > 2 * R + 1)
    throw std::invalid_argument("certify_by_induction: no predicted structure beyond order 2R+1");
  Certificate cert;
  cert.k = k;
  cert.R = R;

  // Scaled violation of (omega.grad)^r [Ahat.(zeta^{k-j} x omega^j)](xi) = 0
  // over sampled zeta and free omega, r + j <= R.
  Rng rng(seed);
  double worst = 0;
  double scale = weighted_norm(eval_field(F, xi, Eigen::VectorXcd::Zero(d), 0));
  std::vector<SymTensor> jets;
  for (int r = 0; r <= R; ++r) {
    Eigen::VectorXcd omega(d);
    for (int i = 0; i < d; ++i) omega(i) = rng.cnormal();
    jets.push_back(eval_field(F, xi, omega, r));
    scale = std::max(scale, weighted_norm(jets.back()) / std::pow(omega.norm(), r));
  }
  const double floor = scale > 0 ? scale : 1.0;
  for (int s = 0; s < 24; ++s) {
    const Eigen::VectorXcd zeta = sample_V_xi(xi, rng.raw() | 1).value;
    Eigen::VectorXcd omega(d);
    for (int i = 0; i < d; ++i) omega(i) = rng.cnormal();
    for (int r = 0; r <= R; ++r) {
      const SymTensor jet = eval_field(F, xi, omega, r);
      for (int j = 0; j + r <= R && j <= k; ++j) {
        const SymTensor probe =
            tensor_product(tensor_power(zeta, k - j), tensor_power(omega, j));
        const double denom = floor * weighted_norm(probe) + 1e-300;
        worst = std::max(worst, std::abs(dot(jet, probe)) / denom);
      }
    }
  }
  cert.max_condition = worst;
  cert.hypothesis_ok = worst < tol;
  if (!cert.hypothesis_ok) return cert;

  const SymTensor value = eval_field(F, xi, Eigen::VectorXcd::Zero(d), 0);
  if (k <= R) {
    cert.residual = weighted_norm(value);
    cert.concluded = cert.residual < tol * floor;
    return cert;
  }

  const int s = 2 * R + 1 - k;
  cert.s = s;

  // Least-squares fit in the weighted norm against the injective map
  // B -> sym(xi^{s+1} x B).
  const int sdb = sym_dim(d, k - s - 1);
  const int sdk = sym_dim(d, k);
  const Eigen::VectorXcd xic = xi.cast<Complex>();
  const auto idx = counted_range(d, k);
  Eigen::MatrixXcd M(sdk, sdb);
  Eigen::VectorXcd rhs(sdk);
  for (int b = 0; b < sdb; ++b) {
    SymTensor E(d, k - s - 1);
    E.comp[b] = 1.0;
    const SymTensor col = tensor_product(tensor_power(xic, s + 1), E);
    for (int i = 0; i < sdk; ++i)
      M(i, b) = std::sqrt(static_cast<double>(multiplicity(idx[i]))) * col.comp[i];
  }
  for (int i = 0; i < sdk; ++i)
    rhs(i) = std::sqrt(static_cast<double>(multiplicity(idx[i]))) * value.comp[i];
  const Eigen::VectorXcd sol = M.householderQr().solve(rhs);
  SymTensor B(d, k - s - 1);
  for (int b = 0; b < sdb; ++b) B.comp[b] = sol(b);
  cert.B = B;
  cert.residual = (M * sol - rhs).norm();
  cert.concluded = cert.residual < tol * floor;

  // Peeling chain: s+1 constrained decompositions, each expected to place
  // everything in the xi factor.  A step on a tensor of order 0 would leave
  // nothing to decompose, and cannot occur since k - (s+1) = k - s - 1 >= 0.
  SymTensor T = value;
  for (int step = 0; step < s + 1; ++step) {
    const Decomposition dec = decompose_V_xi(T, xi);
    cert.chain_b_norms.push_back(dec.B ? weighted_norm(*dec.B) : 0.0);
    if (!dec.C) break;
    T = *dec.C;
  }
  if (T.k == B.k) cert.chain_mismatch = weighted_norm(T - B);
  return cert;
}

}  // namespace tenrec

#endif
