// Symmetric tensor algebra against the ordered-index oracle: products,
// contractions, rotations, the vector-list product subset identities, and the
// identity-absorption constant table.

#include <catch2/catch_amalgamated.hpp>

#include "oracle_dense.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/symtensor.hpp"

using namespace tenrec;
using namespace tenrec_oracle;

namespace {

const Complex I(0, 1);

double rel_scale(const SymTensor& a) { return std::max(1.0, max_abs(a)); }

// Subsets of {0..k-1} of given size, as sorted position lists.
std::vector<std::vector<int>> subsets(int k, int s) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    if (__builtin_popcount(mask) != s) continue;
    std::vector<int> J;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) J.push_back(i);
    out.push_back(J);
  }
  return out;
}

}  // namespace

TEST_CASE("tensor powers and the identity tensor") {
  Eigen::VectorXcd v(2);
  v << 1, I;
  const SymTensor p = tensor_power(v, 2);
  REQUIRE(p.comp.size() == 3);
  CHECK(std::abs(p.comp[0] - Complex(1)) < 1e-15);   // counted (2,0)
  CHECK(std::abs(p.comp[1] - I) < 1e-15);            // counted (1,1)
  CHECK(std::abs(p.comp[2] - Complex(-1)) < 1e-15);  // counted (0,2)
  CHECK(std::abs(tensor_power(v, 0).comp[0] - Complex(1)) < 1e-15);

  const SymTensor id3 = identity2(3);
  CHECK(std::abs(id3.at({2, 0, 0}) - Complex(1)) < 1e-15);
  CHECK(std::abs(id3.at({1, 1, 0})) < 1e-15);
  CHECK(std::abs(dot(id3, id3) - Complex(3)) < 1e-14);

  Rng rng(11);
  const Eigen::VectorXcd w = rand_cvec(3, rng);
  CHECK(max_abs(contract(id3, vec_tensor(w)) - vec_tensor(w)) < 1e-14);

  // Contraction with any order-2 tensor gives its trace.
  const SymTensor t = rand_sym(3, 2, rng);
  Complex tr = 0;
  for (int i = 0; i < 3; ++i) {
    CountedIndex a(3, 0);
    a[i] = 2;
    tr += t.at(a);
  }
  CHECK(std::abs(dot(id3, t) - tr) < 1e-13);

  Eigen::VectorXcd zeta(3);
  zeta << 1, I, 0;
  CHECK(std::abs(dot(id3, tensor_power(zeta, 2))) < 1e-15);
}

TEST_CASE("symmetrization") {
  DenseArray a(2, 2);
  a.at({0, 1}) = 1;
  const SymTensor s = symmetrize(a);
  CHECK(std::abs(s.at({1, 1}) - Complex(0.5)) < 1e-15);
  CHECK(std::abs(s.at({2, 0})) < 1e-15);

  Rng rng(21);
  const SymTensor t = rand_sym(3, 4, rng);
  CHECK(max_abs(symmetrize(to_dense(t)) - t) < 1e-14);

  // The bucketed oracle equals literal permutation averaging, and the library
  // agrees with both.
  const DenseArray r = o_random(3, 3, rng);
  const DenseArray s1 = o_symmetrize(r);
  const DenseArray s2 = o_symmetrize_perm(r);
  CHECK(o_max_diff(s1, s2) < 1e-14);
  CHECK(o_max_diff(o_expand(symmetrize(r)), s2) < 1e-14);
}

TEST_CASE("tensor product matches the oracle and its algebra") {
  Rng rng(31);
  for (auto [d, j, k] : {std::tuple{2, 1, 1}, {2, 2, 3}, {3, 1, 2}, {3, 2, 2}, {4, 1, 3}}) {
    const SymTensor A = rand_sym(d, j, rng), B = rand_sym(d, k, rng);
    const SymTensor lib = tensor_product(A, B);
    CHECK(o_max_diff(o_expand(lib), o_product(o_expand(A), o_expand(B))) < 1e-12);
    CHECK(max_abs(lib - tensor_product(B, A)) < 1e-13);
  }

  const SymTensor B = rand_sym(3, 3, rng);
  CHECK(max_abs(tensor_product(scalar_tensor(3, 1), B) - B) < 1e-15);

  const Eigen::VectorXcd v = rand_cvec(3, rng);
  CHECK(max_abs(tensor_power(v, 5) - tensor_product(tensor_power(v, 2), tensor_power(v, 3))) <
        1e-12);
}

TEST_CASE("contraction against a non-symmetric array") {
  Rng rng(41);
  const SymTensor A = rand_sym(3, 4, rng);
  const DenseArray B = o_random(3, 2, rng);
  // Symmetry of A makes contraction blind to the non-symmetric part of B.
  const DenseArray Ad = o_expand(A);
  const DenseArray direct = o_contract(Ad, B);
  const DenseArray via_sym = o_contract(Ad, o_symmetrize(B));
  CHECK(o_max_diff(direct, via_sym) < 1e-12);
  CHECK(o_max_diff(direct, o_expand(contract(A, B))) < 1e-12);
}

TEST_CASE("triple contraction expansion") {
  Rng rng(51);
  for (auto [d, s, k] : {std::tuple{2, 1, 3}, {3, 2, 5}, {3, 1, 4}}) {
    const SymTensor B = rand_sym(d, s, rng), C = rand_sym(d, k - s, rng), A = rand_sym(d, k, rng);
    const Complex lib = dot(tensor_product(B, C), A);
    // Direct counted double sum over split indices.
    Complex direct = 0;
    for (const auto& bi : counted_range(d, s))
      for (const auto& ci : counted_range(d, k - s))
        direct += static_cast<double>(multiplicity(bi)) * static_cast<double>(multiplicity(ci)) *
                  B.at(bi) * C.at(ci) * A.at(counted_add(bi, ci));
    CHECK(std::abs(lib - direct) < 1e-11 * std::max(1.0, std::abs(direct)));
    const Complex oracle =
        o_contract(o_product(o_expand(B), o_expand(C)), o_expand(A)).val[0];
    CHECK(std::abs(lib - oracle) < 1e-11 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("vector-list products and subset splitting") {
  Rng rng(61);
  const int d = 2, k = 4, s = 2;
  std::vector<Eigen::VectorXcd> eta;
  for (int i = 0; i < k; ++i) eta.push_back(rand_cvec(d, rng));
  const SymTensor full = multi_product(eta);

  // Permutation invariance.
  std::vector<Eigen::VectorXcd> shuffled{eta[2], eta[0], eta[3], eta[1]};
  CHECK(max_abs(full - multi_product(shuffled)) < 1e-13);

  // Component-level subset split: summing products of complementary selected
  // sub-products over all s-subsets reproduces binom(k,s) times the full
  // product, entry by entry.
  const double ks = static_cast<double>(binom(k, s));
  for (const auto& ap : counted_range(d, s))
    for (const auto& app : counted_range(d, k - s)) {
      Complex lhs = 0;
      for (const auto& J : subsets(k, s)) {
        std::vector<Eigen::VectorXcd> sel, rest;
        for (int i = 0; i < k; ++i)
          (std::count(J.begin(), J.end(), i) ? sel : rest).push_back(eta[i]);
        lhs += multi_product(sel).at(ap) * multi_product(rest).at(app);
      }
      CHECK(std::abs(lhs - ks * full.at(counted_add(ap, app))) < 1e-12);
    }

  // Contraction form of the split, one dimension higher.
  {
    const int d3 = 3, k3 = 4, s3 = 2;
    std::vector<Eigen::VectorXcd> ns;
    for (int i = 0; i < k3; ++i) ns.push_back(rand_cvec(d3, rng));
    const SymTensor B = rand_sym(d3, s3, rng), C = rand_sym(d3, k3 - s3, rng);
    Complex rhs = 0;
    for (const auto& J : subsets(k3, s3)) {
      std::vector<Eigen::VectorXcd> sel, rest;
      for (int i = 0; i < k3; ++i)
        (std::count(J.begin(), J.end(), i) ? sel : rest).push_back(ns[i]);
      rhs += dot(B, multi_product(sel)) * dot(C, multi_product(rest));
    }
    const Complex lhs =
        static_cast<double>(binom(k3, s3)) * dot(tensor_product(B, C), multi_product(ns));
    CHECK(std::abs(lhs - rhs) < 1e-11 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("rotation") {
  Rng rng(71);
  const int d = 3;
  const SymTensor A = rand_sym(d, 2, rng), B = rand_sym(d, 2, rng);
  CHECK(max_abs(rotate(Eigen::MatrixXcd::Identity(d, d), A) - A) < 1e-15);

  const Eigen::MatrixXcd R = rand_orthogonal(d, rng).cast<Complex>();
  CHECK(std::abs(dot(rotate(R, A), rotate(R, B)) - dot(A, B)) < 1e-12);
  CHECK(std::abs(dot(rotate(R, A), B) - dot(A, rotate(R.transpose(), B))) < 1e-12);

  // Complex matrices and products.
  Eigen::MatrixXcd M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = rng.cnormal();
  const SymTensor v1 = rand_sym(d, 1, rng);
  CHECK(max_abs(rotate(M, tensor_product(v1, A)) -
                tensor_product(rotate(M, v1), rotate(M, A))) < 1e-11);
  CHECK(o_max_diff(o_expand(rotate(M, A)), o_rotate(M, o_expand(A))) < 1e-12);
}

TEST_CASE("isotropic contraction identities") {
  Rng rng(81);
  // Product splits along powers of any complex vector, isotropic or not.
  for (auto [d, k, j] : {std::tuple{2, 2, 1}, {3, 2, 2}, {4, 1, 3}}) {
    const SymTensor A = rand_sym(d, k, rng), B = rand_sym(d, j, rng);
    const Eigen::VectorXcd z = rand_cvec(d, rng);
    const Complex lhs = dot(tensor_product(A, B), tensor_power(z, k + j));
    const Complex rhs = dot(A, tensor_power(z, k)) * dot(B, tensor_power(z, j));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
  }

  // Too few omega slots: the contraction vanishes identically.
  for (auto [d, k, n, j] : {std::tuple{3, 1, 1, 0}, {3, 0, 2, 1}, {4, 2, 2, 0}}) {
    const SymTensor A = rand_sym(d, k, rng);
    const Eigen::VectorXcd zeta = rand_isotropic(d, rng), omega = rand_cvec(d, rng);
    const SymTensor padded = tensor_product(A, tensor_power(identity2(d), n));
    const SymTensor probe =
        tensor_product(tensor_power(zeta, k + 2 * n - j), tensor_power(omega, j));
    CHECK(std::abs(dot(padded, probe)) < 1e-12 * rel_scale(padded) * rel_scale(probe));
  }

  // Balanced omega count: proportional to (omega.zeta)^n (A.zeta^k) with the
  // cached constant.
  for (auto [d, k, n] : {std::tuple{3, 0, 1}, {3, 1, 1}, {3, 2, 1}, {3, 0, 2}, {4, 2, 2}}) {
    const SymTensor A = rand_sym(d, k, rng);
    const Eigen::VectorXcd zeta = rand_isotropic(d, rng), omega = rand_cvec(d, rng);
    const SymTensor padded = tensor_product(A, tensor_power(identity2(d), n));
    const SymTensor probe = tensor_product(tensor_power(zeta, k + n), tensor_power(omega, n));
    const Complex oz = zeta.transpose() * omega;
    const Complex rhs =
        id3_constant(k, n, d) * std::pow(oz, n) * dot(A, tensor_power(zeta, k));
    CHECK(std::abs(dot(padded, probe) - rhs) < 1e-11 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("identity-absorption constant table") {
  CHECK(std::abs(id3_constant(0, 1, 3) - 1.0) < 1e-13);
  CHECK(std::abs(id3_constant(1, 1, 3) - 2.0 / 3.0) < 1e-13);
  CHECK(std::abs(id3_constant(2, 1, 3) - 0.5) < 1e-13);
  CHECK(std::abs(id3_constant(0, 2, 3) - 2.0 / 3.0) < 1e-13);

  // The table is dimension-independent.
  CHECK(std::abs(id3_constant(1, 1, 2) - id3_constant(1, 1, 4)) < 1e-13);

  // Closed-form comparison: 2^n n! (k+n)! / (k+2n)! reproduces the table;
  // dropping the n! factor or inserting the extra binomial ratio does not.
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k + 2 * n <= 6; ++k) {
      const double table = id3_constant(k, n, 3);
      const double matched = std::pow(2.0, n) * fact(n) * fact(k + n) / fact(k + 2 * n);
      CHECK(std::abs(table - matched) < 1e-12);
    }
  const double display_form = std::pow(2.0, 1) * 1.0 * std::pow(fact(1), 2) /
                              (fact(0) * fact(2) * fact(2));  // (k,n)=(0,1) variant
  CHECK(std::abs(id3_constant(0, 1, 3) - display_form) > 0.4);
}

TEST_CASE("dot product symmetry") {
  Rng rng(91);
  const SymTensor A = rand_sym(3, 3, rng), B = rand_sym(3, 3, rng);
  CHECK(std::abs(dot(A, B) - dot(B, A)) < 1e-12);
}
