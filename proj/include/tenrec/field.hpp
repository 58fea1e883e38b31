#ifndef TENREC_FIELD_HPP
#define TENREC_FIELD_HPP

// Closed-form tensor-valued fields on frequency space: sums of
// (polynomial in xi with symmetric-tensor coefficients) x Gaussian envelope.
// The class is closed under directional differentiation and under
// contraction with powers of the evaluation point, which is all the
// recovery arguments consume.

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <vector>

#include "tenrec/symtensor.hpp"

namespace tenrec {

struct FieldTerm {
  std::map<CountedIndex, SymTensor> poly;  // xi-exponent -> order-k coefficient
  Eigen::VectorXd center;
  double width = 1.0;
};

struct CoefficientField {
  int d = 0;
  int k = 0;  // tensor order of the values
  std::vector<FieldTerm> terms;

  CoefficientField() = default;
  CoefficientField(int d_, int k_) : d(d_), k(k_) {}
};

inline void field_add_monomial(FieldTerm& t, const CountedIndex& e, const SymTensor& coeff) {
  auto [it, fresh] = t.poly.emplace(e, coeff);
  if (!fresh) it->second = it->second + coeff;
}

inline CoefficientField constant_field(const SymTensor& A, const Eigen::VectorXd& center,
                                       double width) {
  CoefficientField f(A.d, A.k);
  FieldTerm t;
  t.center = center;
  t.width = width;
  t.poly.emplace(CountedIndex(A.d, 0), A);
  f.terms.push_back(t);
  return f;
}

// Field xi -> sym(xi^p x B) times a Gaussian envelope, expanded into
// monomials: the coefficient of xi^a has gamma-entry
// prod_i binom(gamma_i, a_i) * B_{gamma-a} / binom(k, p).
inline CoefficientField power_field(int p, const SymTensor& B, const Eigen::VectorXd& center,
                                    double width) {
  if (p < 0) throw std::invalid_argument("power_field: negative power");
  const int d = B.d;
  const int k = B.k + p;
  CoefficientField f(d, k);
  FieldTerm t;
  t.center = center;
  t.width = width;
  const double denom = static_cast<double>(binom(k, p));
  for (const auto& a : counted_range(d, p)) {
    SymTensor coeff(d, k);
    for (const auto& g : counted_range(d, k)) {
      if (!counted_leq(a, g)) continue;
      double w = 1.0;
      for (size_t i = 0; i < a.size(); ++i) w *= static_cast<double>(binom(g[i], a[i]));
      coeff.at(g) = w / denom * B.at(counted_sub(g, a));
    }
    t.poly.emplace(a, coeff);
  }
  f.terms.push_back(t);
  return f;
}

inline CoefficientField field_sum(const CoefficientField& a, const CoefficientField& b) {
  if (a.d != b.d || a.k != b.k) throw std::invalid_argument("field_sum: shape mismatch");
  CoefficientField f = a;
  f.terms.insert(f.terms.end(), b.terms.begin(), b.terms.end());
  return f;
}

inline CoefficientField field_scale(Complex s, const CoefficientField& a) {
  CoefficientField f = a;
  for (auto& t : f.terms)
    for (auto& [e, c] : t.poly) c = s * c;
  return f;
}

// Exact directional derivative (omega.grad): the polynomial part is
// differentiated term by term, and the envelope contributes
// -(omega.(xi - center))/width^2 times the term, which stays polynomial.
inline CoefficientField directional_derivative(const CoefficientField& F,
                                               const Eigen::VectorXcd& omega) {
  if (static_cast<int>(omega.size()) != F.d)
    throw std::invalid_argument("directional_derivative: direction dimension mismatch");
  CoefficientField out(F.d, F.k);
  for (const auto& t : F.terms) {
    FieldTerm nt;
    nt.center = t.center;
    nt.width = t.width;
    const double iw2 = 1.0 / (t.width * t.width);
    for (const auto& [e, c] : t.poly) {
      for (int i = 0; i < F.d; ++i) {
        if (e[i] > 0) {
          CountedIndex down = e;
          down[i] -= 1;
          field_add_monomial(nt, down, (omega(i) * static_cast<double>(e[i])) * c);
        }
        CountedIndex up = e;
        up[i] += 1;
        field_add_monomial(nt, up, (-omega(i) * iw2) * c);
        field_add_monomial(nt, e, (omega(i) * t.center(i) * iw2) * c);
      }
    }
    out.terms.push_back(nt);
  }
  return out;
}

// (omega.grad)^r Ahat at the real point xi.
inline SymTensor eval_field(const CoefficientField& F, const Eigen::VectorXd& xi,
                            const Eigen::VectorXcd& omega, int r) {
  if (r < 0) throw std::invalid_argument("eval_field: negative derivative order");
  CoefficientField G = F;
  for (int i = 0; i < r; ++i) G = directional_derivative(G, omega);
  SymTensor out(F.d, F.k);
  for (const auto& t : G.terms) {
    const double env = std::exp(-(xi - t.center).squaredNorm() / (2.0 * t.width * t.width));
    for (const auto& [e, c] : t.poly) {
      double mono = env;
      for (size_t i = 0; i < e.size(); ++i)
        for (int q = 0; q < e[i]; ++q) mono *= xi(i);
      out = out + mono * c;
    }
  }
  return out;
}

// Pointwise contraction by xi^p, kept in closed form: the contraction slice
// against exponent delta joins the polynomial part as an extra monomial.
inline CoefficientField contract_by_point_power(const CoefficientField& F, int p) {
  if (p < 0 || p > F.k) throw std::invalid_argument("contract_by_point_power: power out of range");
  CoefficientField out(F.d, F.k - p);
  for (const auto& t : F.terms) {
    FieldTerm nt;
    nt.center = t.center;
    nt.width = t.width;
    for (const auto& [e, c] : t.poly) {
      for (const auto& delta : counted_range(F.d, p)) {
        SymTensor slice(F.d, F.k - p);
        for (const auto& g : counted_range(F.d, F.k - p))
          slice.at(g) = static_cast<double>(multiplicity(delta)) * c.at(counted_add(g, delta));
        field_add_monomial(nt, counted_add(e, delta), slice);
      }
    }
    out.terms.push_back(nt);
  }
  return out;
}

// Fourier-side transpose of a coefficient list:
// Bhat^{(k)}(xi) = sum_{j>=k} (-1)^j binom(j,k) Ahat^{(j)}(xi).xi^{j-k}.
// Applying it twice returns the original list.
inline std::vector<CoefficientField> transpose_fields(const std::vector<CoefficientField>& A) {
  std::vector<CoefficientField> out;
  out.reserve(A.size());
  for (size_t k = 0; k < A.size(); ++k) {
    CoefficientField acc(A[k].d, static_cast<int>(k));
    for (size_t j = k; j < A.size(); ++j) {
      if (A[j].k != static_cast<int>(j))
        throw std::invalid_argument("transpose_fields: order mismatch in list");
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      const double w = sign * static_cast<double>(binom(j, k));
      acc = field_sum(acc, field_scale(w, contract_by_point_power(A[j], static_cast<int>(j - k))));
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace tenrec

#endif
