#ifndef TENREC_STRUCTURE_HPP
#define TENREC_STRUCTURE_HPP

// Isotropic direction sets, kernel testing of the contraction conditions
// A.zeta^k = 0, the constructive splitting A = I2 x B + xi x C, and numerical
// rank of the sampled constraint system.

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tenrec/rng.hpp"
#include "tenrec/symtensor.hpp"

namespace tenrec {

struct IsotropicVector {
  Eigen::VectorXcd value;  // zeta = a + i b, (a, b) orthonormal
  Eigen::VectorXd xi;      // size 0 when unconstrained

  // Largest violation among: Re.Im orthogonality, unit lengths, zeta.xi = 0.
  double invariant_violation() const {
    const Eigen::VectorXd a = value.real(), b = value.imag();
    double v = std::abs(a.dot(b));
    v = std::max(v, std::abs(a.norm() - 1.0));
    v = std::max(v, std::abs(b.norm() - 1.0));
    if (xi.size() > 0) {
      const Complex zx = value.transpose() * xi.cast<Complex>();
      v = std::max(v, std::abs(zx));
    }
    return v;
  }
};

inline IsotropicVector sample_V(int d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_V: need d >= 2");
  Rng rng(seed);
  Eigen::VectorXd a(d), b(d);
  for (int i = 0; i < d; ++i) a(i) = rng.normal();
  for (int i = 0; i < d; ++i) b(i) = rng.normal();
  a.normalize();
  // Projecting twice keeps the pair orthogonal to working precision even for
  // nearly parallel draws.
  b -= a.dot(b) * a;
  b -= a.dot(b) * a;
  b.normalize();
  IsotropicVector out;
  out.value = a.cast<Complex>() + Complex(0, 1) * b.cast<Complex>();
  out.xi = Eigen::VectorXd();
  return out;
}

inline IsotropicVector sample_V_xi(const Eigen::VectorXd& xi, std::uint64_t seed) {
  const int d = static_cast<int>(xi.size());
  if (xi.norm() == 0.0) return sample_V(d, seed);
  if (d < 3) throw std::invalid_argument("sample_V_xi: need d >= 3 for a nonzero constraint");
  Rng rng(seed);
  const Eigen::VectorXd n = xi.normalized();
  Eigen::VectorXd a(d), b(d);
  for (int i = 0; i < d; ++i) a(i) = rng.normal();
  for (int i = 0; i < d; ++i) b(i) = rng.normal();
  a -= n.dot(a) * n;
  a -= n.dot(a) * n;
  a.normalize();
  b -= n.dot(b) * n;
  b -= a.dot(b) * a;
  b -= n.dot(b) * n;
  b -= a.dot(b) * a;
  b.normalize();
  IsotropicVector out;
  out.value = a.cast<Complex>() + Complex(0, 1) * b.cast<Complex>();
  out.xi = xi;
  return out;
}

struct KernelReport {
  bool pass = false;
  double max_dev = 0;
};

// Max of |A.zeta^k| over sampled directions, compared against tol * |A|.
inline KernelReport kernel_test(const SymTensor& A, const Eigen::VectorXd& xi, int n_samples,
                                double tol, std::uint64_t seed = 1) {
  KernelReport rep;
  const double scale = weighted_norm(A);
  for (int s = 0; s < n_samples; ++s) {
    const IsotropicVector z = xi.size() ? sample_V_xi(xi, seed + s) : sample_V(A.d, seed + s);
    rep.max_dev = std::max(rep.max_dev, std::abs(dot(A, tensor_power(z.value, A.k))));
  }
  rep.pass = rep.max_dev <= tol * scale;
  return rep;
}

struct Decomposition {
  std::optional<SymTensor> B;  // order k-2
  std::optional<SymTensor> C;  // order k-1
  double residual = 0;         // max-norm of A - I2 x B - xi x C
};

// Least-squares fit of A by I2 x B over B in S^{k-2}, minimizing the
// multiplicity-weighted Frobenius norm.  The fit map is injective, so plain
// Householder QR solves it.
inline Decomposition decompose_V(const SymTensor& A) {
  if (A.k < 1) throw std::invalid_argument("decompose_V: need order >= 1");
  Decomposition out;
  if (A.k == 1) {
    out.residual = max_abs(A);
    return out;
  }
  const int d = A.d, k = A.k;
  const SymTensor id = identity2(d);
  const auto rows_idx = counted_range(d, k);
  const auto cols_idx = counted_range(d, k - 2);
  Eigen::MatrixXcd M(rows_idx.size(), cols_idx.size());
  Eigen::VectorXcd rhs(rows_idx.size());
  std::vector<double> w(rows_idx.size());
  for (size_t r = 0; r < rows_idx.size(); ++r)
    w[r] = std::sqrt(static_cast<double>(multiplicity(rows_idx[r])));
  for (size_t c = 0; c < cols_idx.size(); ++c) {
    SymTensor basis(d, k - 2);
    basis.comp[c] = 1;
    const SymTensor col = tensor_product(id, basis);
    for (size_t r = 0; r < rows_idx.size(); ++r) M(r, c) = w[r] * col.comp[r];
  }
  for (size_t r = 0; r < rows_idx.size(); ++r) rhs(r) = w[r] * A.comp[r];
  const Eigen::VectorXcd sol = Eigen::HouseholderQR<Eigen::MatrixXcd>(M).solve(rhs);
  SymTensor B(d, k - 2);
  for (size_t c = 0; c < cols_idx.size(); ++c) B.comp[c] = sol(c);
  out.B = B;
  out.residual = max_abs(A - tensor_product(id, B));
  return out;
}

// Real orthogonal matrix whose last row is xi normalized; rotating with it
// sends xi to the last coordinate axis.
inline Eigen::MatrixXd rotation_to_last_axis(const Eigen::VectorXd& xi) {
  const int d = static_cast<int>(xi.size());
  const Eigen::VectorXd n = xi.normalized();
  Eigen::MatrixXd base(d, d);
  base.col(0) = n;
  // Complete to a basis, then orthonormalize; the lattice directions that are
  // least aligned with n keep the construction well conditioned.
  Eigen::VectorXd::Index drop;
  n.cwiseAbs().maxCoeff(&drop);
  int c = 1;
  for (int i = 0; i < d; ++i) {
    if (i == drop) continue;
    base.col(c++) = Eigen::VectorXd::Unit(d, i);
  }
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(base).householderQ();
  Eigen::MatrixXd R(d, d);
  // Q's first column is +-n; reorder so n sits in the last row.
  const double sign = Q.col(0).dot(n) > 0 ? 1.0 : -1.0;
  for (int i = 1; i < d; ++i) R.row(i - 1) = Q.col(i).transpose();
  R.row(d - 1) = sign * Q.col(0).transpose();
  return R;
}

// Constructive splitting A = I2 x B + xi x C following the rotation /
// restriction / slice-reweighting chain; the residual field reports how far A
// is from the reachable set.
inline Decomposition decompose_V_xi(const SymTensor& A, const Eigen::VectorXd& xi) {
  if (xi.size() == 0 || xi.norm() == 0.0) return decompose_V(A);
  if (A.k < 1) throw std::invalid_argument("decompose_V_xi: need order >= 1");
  const int d = A.d, k = A.k;
  if (static_cast<int>(xi.size()) != d)
    throw std::invalid_argument("decompose_V_xi: xi dimension mismatch");
  const Eigen::MatrixXd R = rotation_to_last_axis(xi);
  const SymTensor Arot = rotate(R.cast<Complex>(), A);

  // Split off the part free of the last coordinate and decompose it one
  // dimension lower.
  SymTensor Btilde(d, k >= 2 ? k - 2 : 0);
  bool have_B = false;
  if (k >= 2) {
    SymTensor restricted(d - 1, k);
    for (const auto& a : counted_range(d - 1, k)) {
      CountedIndex full = a;
      full.push_back(0);
      restricted.at(a) = Arot.at(full);
    }
    const Decomposition inner = decompose_V(restricted);
    if (inner.B) {
      have_B = true;
      Btilde = SymTensor(d, k - 2);
      for (const auto& a : counted_range(d - 1, k - 2)) {
        CountedIndex full = a;
        full.push_back(0);
        Btilde.at(full) = inner.B->at(a);
      }
    }
  }
  const SymTensor Ctilde = have_B ? Arot - tensor_product(identity2(d), Btilde) : Arot;

  // Last-axis slice, reweighted so that e_d x C reproduces every component of
  // Ctilde that touches the last coordinate.
  SymTensor C(d, k - 1);
  for (const auto& a : counted_range(d, k - 1)) {
    CountedIndex up = a;
    up[d - 1] += 1;
    C.at(a) = (static_cast<double>(k) / (1.0 + a[d - 1])) * Ctilde.at(up);
  }

  const Eigen::MatrixXcd Rt = R.transpose().cast<Complex>();
  Decomposition out;
  if (have_B) out.B = rotate(Rt, Btilde);
  out.C = (1.0 / xi.norm()) * rotate(Rt, C);
  SymTensor recon = tensor_product(vec_tensor(xi.cast<Complex>()), *out.C);
  if (out.B) recon = recon + tensor_product(identity2(d), *out.B);
  out.residual = max_abs(A - recon);
  return out;
}

// Sampled constraint matrix: one row per direction, entries multiplicity *
// (zeta^k)_a, so that row . components(A) = A.zeta^k.
inline Eigen::MatrixXcd constraint_matrix(int k, int d, const Eigen::VectorXd& xi, int n_samples,
                                          std::uint64_t seed = 1) {
  const auto idx = counted_range(d, k);
  Eigen::MatrixXcd M(n_samples, idx.size());
  for (int s = 0; s < n_samples; ++s) {
    const IsotropicVector z = xi.size() ? sample_V_xi(xi, seed + s) : sample_V(d, seed + s);
    const SymTensor zk = tensor_power(z.value, k);
    for (size_t c = 0; c < idx.size(); ++c)
      M(s, c) = static_cast<double>(multiplicity(idx[c])) * zk.comp[c];
  }
  return M;
}

// Numerical rank with a verified spectral gap: the singular values must fall
// by at least 10^3 across the cut or the count is not trustworthy.
inline int rank_with_gap(const Eigen::MatrixXcd& M, double tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
  if (r > 0 && r < sv.size() && sv(r) != 0.0 && sv(r - 1) / sv(r) < 1e3)
    throw std::runtime_error("rank_with_gap: spectral gap below 1e3, rank not resolved");
  return r;
}

inline int constraint_rank(int k, int d, const Eigen::VectorXd& xi, int n_samples,
                           double tol = 1e-9, std::uint64_t seed = 1) {
  if (n_samples < 2 * static_cast<int>(sym_dim(d, k)))
    throw std::invalid_argument("constraint_rank: need at least 2*sym_dim samples");
  return rank_with_gap(constraint_matrix(k, d, xi, n_samples, seed), tol);
}

// Orthonormal basis of the right nullspace of the sampled constraint matrix,
// returned as tensors.
inline std::vector<SymTensor> constraint_kernel_basis(int k, int d, const Eigen::VectorXd& xi,
                                                      int n_samples, double tol = 1e-9,
                                                      std::uint64_t seed = 1) {
  const Eigen::MatrixXcd M = constraint_matrix(k, d, xi, n_samples, seed);
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cut = sv.size() && sv(0) > 0 ? tol * sv(0) : 0.0;
  int r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  std::vector<SymTensor> basis;
  for (int c = r; c < svd.matrixV().cols(); ++c) {
    SymTensor t(d, k);
    for (size_t i = 0; i < t.comp.size(); ++i) t.comp[i] = svd.matrixV()(i, c);
    basis.push_back(t);
  }
  return basis;
}

}  // namespace tenrec

#endif
