#ifndef TENREC_TESTS_ORACLE_DENSE_HPP
#define TENREC_TESTS_ORACLE_DENSE_HPP

// Brute-force reference implementations working purely on ordered-index
// dense arrays.  These deliberately share no algorithmic code with the
// counted-storage kernels; only the flat addressing helpers and the storage
// contract (value per counted class) are common ground.

#include <Eigen/Dense>
#include <algorithm>
#include <unordered_map>
#include <vector>

#include "tenrec/rng.hpp"
#include "tenrec/symtensor.hpp"

namespace tenrec_oracle {

using tenrec::Complex;
using tenrec::DenseArray;
using tenrec::OrderedIndex;
using tenrec::SymTensor;

// Average over slot permutations, bucketed by the sorted slot key (every
// permutation class shares one sorted representative).
inline DenseArray o_symmetrize(const DenseArray& a) {
  std::unordered_map<std::uint64_t, Complex> sum;
  std::unordered_map<std::uint64_t, double> cnt;
  for (std::uint64_t t = 0; t < a.val.size(); ++t) {
    OrderedIndex o = tenrec::ordered_from_flat(t, a.d, a.k);
    std::sort(o.begin(), o.end());
    const std::uint64_t key = tenrec::ordered_to_flat(o, a.d);
    sum[key] += a.val[t];
    cnt[key] += 1;
  }
  DenseArray out(a.d, a.k);
  for (std::uint64_t t = 0; t < a.val.size(); ++t) {
    OrderedIndex o = tenrec::ordered_from_flat(t, a.d, a.k);
    std::sort(o.begin(), o.end());
    const std::uint64_t key = tenrec::ordered_to_flat(o, a.d);
    out.val[t] = sum[key] / cnt[key];
  }
  return out;
}

// Literal definition: average a over all k! slot permutations.  Exponential
// cost; used to validate o_symmetrize at small sizes.
inline DenseArray o_symmetrize_perm(const DenseArray& a) {
  DenseArray out(a.d, a.k);
  std::vector<int> perm(a.k);
  for (std::uint64_t t = 0; t < a.val.size(); ++t) {
    const OrderedIndex o = tenrec::ordered_from_flat(t, a.d, a.k);
    for (int i = 0; i < a.k; ++i) perm[i] = i;
    Complex acc = 0;
    double n = 0;
    do {
      OrderedIndex p(a.k);
      for (int i = 0; i < a.k; ++i) p[i] = o[perm[i]];
      acc += a.val[tenrec::ordered_to_flat(p, a.d)];
      n += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.val[t] = acc / n;
  }
  return out;
}

// Unsymmetrized concatenation product followed by symmetrization.
inline DenseArray o_product(const DenseArray& a, const DenseArray& b) {
  DenseArray raw(a.d, a.k + b.k);
  const std::uint64_t nb = b.val.size();
  for (std::uint64_t s = 0; s < a.val.size(); ++s)
    for (std::uint64_t t = 0; t < nb; ++t) raw.val[s * nb + t] = a.val[s] * b.val[t];
  return o_symmetrize(raw);
}

// (A.B)_alpha = sum over ordered beta of A_{alpha beta} B_beta.
inline DenseArray o_contract(const DenseArray& a, const DenseArray& b) {
  DenseArray out(a.d, a.k - b.k);
  const std::uint64_t nb = b.val.size();
  for (std::uint64_t s = 0; s < out.val.size(); ++s) {
    Complex acc = 0;
    for (std::uint64_t t = 0; t < nb; ++t) acc += a.val[s * nb + t] * b.val[t];
    out.val[s] = acc;
  }
  return out;
}

// (RA)_{i1..ik} = sum over ordered j of R_{i1 j1}...R_{ik jk} A_j.
inline DenseArray o_rotate(const Eigen::MatrixXcd& R, const DenseArray& a) {
  DenseArray out(a.d, a.k);
  for (std::uint64_t s = 0; s < out.val.size(); ++s) {
    const OrderedIndex o = tenrec::ordered_from_flat(s, a.d, a.k);
    Complex acc = 0;
    for (std::uint64_t t = 0; t < a.val.size(); ++t) {
      const OrderedIndex b = tenrec::ordered_from_flat(t, a.d, a.k);
      Complex p = 1;
      for (int i = 0; i < a.k; ++i) p *= R(o[i], b[i]);
      acc += p * a.val[t];
    }
    out.val[s] = acc;
  }
  return out;
}

inline DenseArray o_power(const Eigen::VectorXcd& v, int k) {
  DenseArray out(static_cast<int>(v.size()), k);
  for (std::uint64_t t = 0; t < out.val.size(); ++t) {
    const OrderedIndex o = tenrec::ordered_from_flat(t, out.d, k);
    Complex p = 1;
    for (int i : o) p *= v(i);
    out.val[t] = p;
  }
  return out;
}

// Read counted storage out to the dense layout through its defining access.
inline DenseArray o_expand(const SymTensor& a) {
  DenseArray out(a.d, a.k);
  for (std::uint64_t t = 0; t < out.val.size(); ++t)
    out.val[t] = a.at(tenrec::to_counted(tenrec::ordered_from_flat(t, a.d, a.k), a.d));
  return out;
}

inline double o_max_diff(const DenseArray& a, const DenseArray& b) {
  double m = 0;
  for (std::uint64_t t = 0; t < a.val.size(); ++t) m = std::max(m, std::abs(a.val[t] - b.val[t]));
  return m;
}

inline DenseArray o_random(int d, int k, tenrec::Rng& rng) {
  DenseArray out(d, k);
  for (auto& v : out.val) v = rng.cnormal();
  return out;
}

inline SymTensor rand_sym(int d, int k, tenrec::Rng& rng) {
  SymTensor out(d, k);
  for (auto& v : out.comp) v = rng.cnormal();
  return out;
}

inline Eigen::VectorXcd rand_cvec(int d, tenrec::Rng& rng) {
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.cnormal();
  return v;
}

inline Eigen::VectorXd rand_rvec(int d, tenrec::Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

// Random element of the isotropic set: zeta = a + i b with (a, b) a random
// orthonormal real pair.
inline Eigen::VectorXcd rand_isotropic(int d, tenrec::Rng& rng) {
  Eigen::VectorXd a = rand_rvec(d, rng);
  a.normalize();
  Eigen::VectorXd b = rand_rvec(d, rng);
  b -= a.dot(b) * a;
  b.normalize();
  return a.cast<Complex>() + Complex(0, 1) * b.cast<Complex>();
}

inline Eigen::MatrixXd rand_orthogonal(int d, tenrec::Rng& rng) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

}  // namespace tenrec_oracle

#endif
