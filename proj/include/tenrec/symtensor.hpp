#ifndef TENREC_SYMTENSOR_HPP
#define TENREC_SYMTENSOR_HPP

// Dense symmetric complex tensors stored one value per counted index, plus
// the ordered-index DenseArray companion.  Provides symmetrization, the
// symmetric tensor product, contraction, products of vector lists, linear
// coordinate changes, the rank-two identity tensor, and the cached constant
// table for the identity-absorption contraction.

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "tenrec/multiindex.hpp"

namespace tenrec {

using Complex = std::complex<double>;

struct SymTensor {
  int d = 0;
  int k = 0;
  std::vector<Complex> comp;  // one value per counted rank, canonical order

  SymTensor() = default;
  SymTensor(int d_, int k_) : d(d_), k(k_), comp(sym_dim(d_, k_), Complex(0)) {}

  Complex& at(const CountedIndex& a) { return comp[counted_rank(a)]; }
  const Complex& at(const CountedIndex& a) const { return comp[counted_rank(a)]; }
};

struct DenseArray {
  int d = 0;
  int k = 0;
  std::vector<Complex> val;  // one value per ordered index, flat layout

  DenseArray() = default;
  DenseArray(int d_, int k_) : d(d_), k(k_), val(dense_size(d_, k_), Complex(0)) {}

  Complex& at(const OrderedIndex& o) { return val[ordered_to_flat(o, d)]; }
  const Complex& at(const OrderedIndex& o) const { return val[ordered_to_flat(o, d)]; }
};

inline void require_same_shape(int da, int db, const char* who) {
  if (da != db) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

inline SymTensor operator+(const SymTensor& a, const SymTensor& b) {
  require_same_shape(a.d, b.d, "operator+");
  if (a.k != b.k) throw std::invalid_argument("operator+: order mismatch");
  SymTensor c = a;
  for (size_t i = 0; i < c.comp.size(); ++i) c.comp[i] += b.comp[i];
  return c;
}

inline SymTensor operator-(const SymTensor& a, const SymTensor& b) {
  require_same_shape(a.d, b.d, "operator-");
  if (a.k != b.k) throw std::invalid_argument("operator-: order mismatch");
  SymTensor c = a;
  for (size_t i = 0; i < c.comp.size(); ++i) c.comp[i] -= b.comp[i];
  return c;
}

inline SymTensor operator*(Complex s, const SymTensor& a) {
  SymTensor c = a;
  for (auto& v : c.comp) v *= s;
  return c;
}

// Frobenius norm of the underlying ordered array, computed from counted
// storage through the multiplicity weights.
inline double weighted_norm(const SymTensor& a) {
  double s = 0;
  const auto idx = counted_range(a.d, a.k);
  for (size_t i = 0; i < idx.size(); ++i)
    s += static_cast<double>(multiplicity(idx[i])) * std::norm(a.comp[i]);
  return std::sqrt(s);
}

inline double max_abs(const SymTensor& a) {
  double m = 0;
  for (const auto& v : a.comp) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const DenseArray& a) {
  double m = 0;
  for (const auto& v : a.val) m = std::max(m, std::abs(v));
  return m;
}

// Counted rank of every flat ordered index; shared by rotation and dense
// expansion so the base-d decode happens once.
inline std::vector<std::uint32_t> flat_rank_table(int d, int k) {
  const std::uint64_t n = dense_size(d, k);
  std::vector<std::uint32_t> table(n);
  for (std::uint64_t t = 0; t < n; ++t)
    table[t] = static_cast<std::uint32_t>(counted_rank(to_counted(ordered_from_flat(t, d, k), d)));
  return table;
}

inline DenseArray to_dense(const SymTensor& a) {
  DenseArray out(a.d, a.k);
  const auto table = flat_rank_table(a.d, a.k);
  for (std::uint64_t t = 0; t < out.val.size(); ++t) out.val[t] = a.comp[table[t]];
  return out;
}

// Average over slot permutations; reading back any ordered rearrangement of a
// class gives the common value, so only the per-class mean is stored.
inline SymTensor symmetrize(const DenseArray& a) {
  SymTensor out(a.d, a.k);
  const auto table = flat_rank_table(a.d, a.k);
  for (std::uint64_t t = 0; t < a.val.size(); ++t) out.comp[table[t]] += a.val[t];
  const auto idx = counted_range(a.d, a.k);
  for (size_t i = 0; i < idx.size(); ++i)
    out.comp[i] /= static_cast<double>(multiplicity(idx[i]));
  return out;
}

// Symmetric tensor product.  At a counted result index g the value is the
// multiplicity-split average: sum over sub-indices a of g with |a| = order(A)
// of prod_i binom(g_i, a_i) * A_a * B_{g-a}, divided by binom(|g|, |a|).
inline SymTensor tensor_product(const SymTensor& A, const SymTensor& B) {
  require_same_shape(A.d, B.d, "tensor_product");
  const int j = A.k, k = B.k;
  SymTensor out(A.d, j + k);
  const double denom = static_cast<double>(binom(j + k, j));
  const auto idx = counted_range(A.d, j + k);
  for (size_t g = 0; g < idx.size(); ++g) {
    Complex acc = 0;
    for (const auto& a : counted_subindices(idx[g], j)) {
      double w = 1;
      for (size_t i = 0; i < a.size(); ++i) w *= static_cast<double>(binom(idx[g][i], a[i]));
      acc += w * A.at(a) * B.at(counted_sub(idx[g], a));
    }
    out.comp[g] = acc / denom;
  }
  return out;
}

inline SymTensor tensor_power(const Eigen::VectorXcd& v, int k) {
  const int d = static_cast<int>(v.size());
  SymTensor out(d, k);
  const auto idx = counted_range(d, k);
  for (size_t g = 0; g < idx.size(); ++g) {
    Complex p = 1;
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < idx[g][i]; ++c) p *= v(i);
    out.comp[g] = p;
  }
  return out;
}

inline SymTensor scalar_tensor(int d, Complex s) {
  SymTensor out(d, 0);
  out.comp[0] = s;
  return out;
}

inline SymTensor tensor_power(const SymTensor& a, int n) {
  SymTensor out = scalar_tensor(a.d, 1);
  for (int i = 0; i < n; ++i) out = tensor_product(out, a);
  return out;
}

inline SymTensor vec_tensor(const Eigen::VectorXcd& v) { return tensor_power(v, 1); }

inline Eigen::VectorXcd vec_of(const SymTensor& a) {
  if (a.k != 1) throw std::invalid_argument("vec_of: order must be 1");
  Eigen::VectorXcd v(a.d);
  for (int i = 0; i < a.d; ++i) v(i) = a.comp[i];
  return v;
}

// Contraction of A by B over the trailing order(B) slots:
// (A.B)_a = sum over counted b of multiplicity(b) * A_{a+b} * B_b.
inline SymTensor contract(const SymTensor& A, const SymTensor& B) {
  require_same_shape(A.d, B.d, "contract");
  if (B.k > A.k) throw std::invalid_argument("contract: B order exceeds A order");
  SymTensor out(A.d, A.k - B.k);
  const auto out_idx = counted_range(A.d, A.k - B.k);
  const auto b_idx = counted_range(A.d, B.k);
  for (size_t g = 0; g < out_idx.size(); ++g) {
    Complex acc = 0;
    for (size_t b = 0; b < b_idx.size(); ++b)
      acc += static_cast<double>(multiplicity(b_idx[b])) * A.at(counted_add(out_idx[g], b_idx[b])) *
             B.comp[b];
    out.comp[g] = acc;
  }
  return out;
}

// Contraction by a not-necessarily-symmetric array; equal to contracting by
// its symmetrization because A is symmetric.
inline SymTensor contract(const SymTensor& A, const DenseArray& B) {
  return contract(A, symmetrize(B));
}

inline Complex dot(const SymTensor& a, const SymTensor& b) {
  if (a.k != b.k) throw std::invalid_argument("dot: order mismatch");
  return contract(a, b).comp[0];
}

// eta_1 x ... x eta_k as a symmetric tensor (left fold of tensor_product).
inline SymTensor multi_product(const std::vector<Eigen::VectorXcd>& vs) {
  if (vs.empty()) throw std::invalid_argument("multi_product: empty vector list");
  SymTensor out = scalar_tensor(static_cast<int>(vs[0].size()), 1);
  for (const auto& v : vs) out = tensor_product(out, vec_tensor(v));
  return out;
}

// Linear coordinate change: (RA)_a = sum_b R_{a1 b1} ... R_{ak bk} A_b, with
// the first index of each R factor pinned to one ordered representative of a.
inline SymTensor rotate(const Eigen::MatrixXcd& R, const SymTensor& A) {
  if (R.rows() != A.d || R.cols() != A.d) throw std::invalid_argument("rotate: shape mismatch");
  const int d = A.d, k = A.k;
  SymTensor out(d, k);
  const auto idx = counted_range(d, k);
  const auto table = flat_rank_table(d, k);
  const std::uint64_t n = dense_size(d, k);
  for (size_t g = 0; g < idx.size(); ++g) {
    const OrderedIndex o = to_ordered(idx[g]);
    Complex acc = 0;
    OrderedIndex b(k, 0);
    for (std::uint64_t t = 0; t < n; ++t) {
      std::uint64_t rest = t;
      Complex p = 1;
      for (int s = k - 1; s >= 0; --s) {
        b[s] = static_cast<int>(rest % d);
        rest /= d;
        p *= R(o[s], b[s]);
      }
      acc += p * A.comp[table[t]];
    }
    out.comp[g] = acc;
  }
  return out;
}

inline SymTensor identity2(int d) {
  SymTensor out(d, 2);
  for (int i = 0; i < d; ++i) {
    CountedIndex a(d, 0);
    a[i] = 2;
    out.at(a) = 1;
  }
  return out;
}

// Constant c(k,n) in the contraction identity
//   (A x I2^n) . (zeta^{k+n} x omega^n) = c(k,n) (omega.zeta)^n (A.zeta^k),
// computed by evaluating the left side at a fixed well-conditioned choice and
// cached.  The table is the authority; closed forms are checked against it in
// the test suite, not assumed here.
inline double id3_constant(int k, int n, int d) {
  if (k < 0 || n < 0) throw std::invalid_argument("id3_constant: negative order");
  if (n == 0) return 1.0;
  if (d < 2) throw std::invalid_argument("id3_constant: need d >= 2 for isotropic vectors");
  static std::map<std::tuple<int, int, int>, double> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({k, n, d});
    if (it != cache.end()) return it->second;
  }
  Eigen::VectorXcd zeta = Eigen::VectorXcd::Zero(d), omega = Eigen::VectorXcd::Zero(d);
  zeta(0) = 1;
  zeta(1) = Complex(0, 1);
  omega(0) = 1;  // omega.zeta = 1 and (e1^k).zeta^k = 1
  const SymTensor padded = tensor_product(tensor_power(omega, k), tensor_power(identity2(d), n));
  const SymTensor probe = tensor_product(tensor_power(zeta, k + n), tensor_power(omega, n));
  const Complex c = dot(padded, probe);
  if (std::abs(c.imag()) > 1e-12 * std::max(1.0, std::abs(c.real())))
    throw std::runtime_error("id3_constant: evaluation produced a non-real value");
  std::lock_guard<std::mutex> lock(mu);
  cache[{k, n, d}] = c.real();
  return c.real();
}

}  // namespace tenrec

#endif
