#ifndef TENREC_CALCULUS_HPP
#define TENREC_CALCULUS_HPP

// Exact symbolic calculus on amplitudes p(x) e^{-ix.xi} with polynomial p:
// derivatives, transport residuals, powers of the conjugated principal part
// split by h-power, the lower-order conjugated summands, and the transpose
// rule for constant coefficient lists.

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <vector>

#include "tenrec/symtensor.hpp"

namespace tenrec {

// Finite sum of monomials x^a times a fixed plane wave e^{-ix.xi}.
struct PolyPlaneWave {
  Eigen::VectorXd xi;                     // plane-wave frequency
  std::map<CountedIndex, Complex> terms;  // exponent -> coefficient, no zeros

  explicit PolyPlaneWave(Eigen::VectorXd xi_ = Eigen::VectorXd()) : xi(std::move(xi_)) {}

  int d() const { return static_cast<int>(xi.size()); }

  void add_term(const CountedIndex& a, Complex c) {
    if (c == Complex(0)) return;
    auto [it, fresh] = terms.emplace(a, c);
    if (!fresh && (it->second += c) == Complex(0)) terms.erase(it);
  }

  Complex eval(const Eigen::VectorXd& x) const {
    Complex p = 0;
    for (const auto& [a, c] : terms) {
      Complex mono = c;
      for (size_t i = 0; i < a.size(); ++i)
        for (int q = 0; q < a[i]; ++q) mono *= x(i);
      p += mono;
    }
    const double phase = -x.dot(xi);
    return p * Complex(std::cos(phase), std::sin(phase));
  }

  double max_coeff() const {
    double m = 0;
    for (const auto& [a, c] : terms) m = std::max(m, std::abs(c));
    return m;
  }
};

inline PolyPlaneWave ppw_constant(const Eigen::VectorXd& xi, Complex c) {
  PolyPlaneWave out(xi);
  out.add_term(CountedIndex(xi.size(), 0), c);
  return out;
}

// (omega.x)^q e^{-ix.xi} expanded into monomials with multinomial weights.
inline PolyPlaneWave omega_power(const Eigen::VectorXcd& omega, int q, const Eigen::VectorXd& xi) {
  PolyPlaneWave out(xi);
  for (const auto& a : counted_range(static_cast<int>(omega.size()), q)) {
    Complex w = static_cast<double>(multiplicity(a));
    for (size_t i = 0; i < a.size(); ++i)
      for (int c = 0; c < a[i]; ++c) w *= omega(i);
    out.add_term(a, w);
  }
  return out;
}

inline PolyPlaneWave ppw_add(const PolyPlaneWave& a, const PolyPlaneWave& b) {
  if ((a.xi - b.xi).norm() != 0.0)
    throw std::invalid_argument("ppw_add: mixed plane-wave frequencies");
  PolyPlaneWave out = a;
  for (const auto& [e, c] : b.terms) out.add_term(e, c);
  return out;
}

inline PolyPlaneWave ppw_scale(Complex s, const PolyPlaneWave& a) {
  PolyPlaneWave out(a.xi);
  for (const auto& [e, c] : a.terms) out.add_term(e, s * c);
  return out;
}

// One derivative D_j = (1/i) d/dx_j: acts on the monomial by the product rule
// and pulls down -xi_j from the plane wave.
inline PolyPlaneWave apply_D1(const PolyPlaneWave& a, int j) {
  PolyPlaneWave out(a.xi);
  const Complex inv_i(0, -1);
  for (const auto& [e, c] : a.terms) {
    if (e[j] > 0) {
      CountedIndex down = e;
      down[j] -= 1;
      out.add_term(down, inv_i * static_cast<double>(e[j]) * c);
    }
    out.add_term(e, -a.xi(j) * c);
  }
  return out;
}

inline PolyPlaneWave apply_D(const PolyPlaneWave& a, const OrderedIndex& alpha) {
  PolyPlaneWave out = a;
  for (int j : alpha) out = apply_D1(out, j);
  return out;
}

inline PolyPlaneWave zeta_D(const PolyPlaneWave& a, const Eigen::VectorXcd& zeta) {
  PolyPlaneWave out(a.xi);
  for (int j = 0; j < a.d(); ++j) out = ppw_add(out, ppw_scale(zeta(j), apply_D1(a, j)));
  return out;
}

// (zeta.D)^{r+1} a; the zero object iff a satisfies the transport equation of
// order r+1.
inline PolyPlaneWave transport_residual(const PolyPlaneWave& a, const Eigen::VectorXcd& zeta,
                                        int r) {
  if (r < 0) throw std::invalid_argument("transport_residual: negative order");
  PolyPlaneWave out = a;
  for (int i = 0; i <= r; ++i) out = zeta_D(out, zeta);
  return out;
}

inline PolyPlaneWave laplace_D(const PolyPlaneWave& a) {
  PolyPlaneWave out(a.xi);
  for (int j = 0; j < a.d(); ++j) out = ppw_add(out, apply_D1(apply_D1(a, j), j));
  return out;
}

// Binomial split of P_zeta(hD)^m a: piece[k] = binom(m,k) (sum_j D_j^2)^{m-k}
// (2 zeta.D)^k a, so the full power is sum_k h^{2m-k} piece[k].  The two
// factors commute, which makes the split exact.
inline std::vector<PolyPlaneWave> p_binomial_pieces(const PolyPlaneWave& a,
                                                    const Eigen::VectorXcd& zeta, int m) {
  std::vector<PolyPlaneWave> pieces;
  pieces.reserve(m + 1);
  for (int k = 0; k <= m; ++k) {
    PolyPlaneWave p = ppw_scale(static_cast<double>(binom(m, k)), a);
    for (int i = 0; i < k; ++i) p = ppw_scale(2.0, zeta_D(p, zeta));
    for (int i = 0; i < m - k; ++i) p = laplace_D(p);
    pieces.push_back(p);
  }
  return pieces;
}

inline PolyPlaneWave apply_P_power(const PolyPlaneWave& a, const Eigen::VectorXcd& zeta, double h,
                                   int m) {
  if (h <= 0) throw std::invalid_argument("apply_P_power: h must be positive");
  const auto pieces = p_binomial_pieces(a, zeta, m);
  PolyPlaneWave out(a.xi);
  for (int k = 0; k <= m; ++k) out = ppw_add(out, ppw_scale(std::pow(h, 2 * m - k), pieces[k]));
  return out;
}

// A.(zeta^j x D^{k-j} a): contract the leading j slots by zeta first, then
// apply the remaining slots as derivatives of a with multiplicity weights.
// Contracting the pure-tensor slot block first is licensed by the symmetry of
// A together with the and-then-symmetrize contraction rule.
inline PolyPlaneWave coefficient_action(const SymTensor& A, const Eigen::VectorXcd& zeta, int j,
                                        const PolyPlaneWave& a) {
  if (j < 0 || j > A.k) throw std::invalid_argument("coefficient_action: slot split out of range");
  const SymTensor Az = contract(A, tensor_power(zeta, j));
  PolyPlaneWave out(a.xi);
  for (const auto& delta : counted_range(A.d, A.k - j)) {
    const Complex w = static_cast<double>(multiplicity(delta)) * Az.at(delta);
    if (w == Complex(0)) continue;
    out = ppw_add(out, ppw_scale(w, apply_D(a, to_ordered(delta))));
  }
  return out;
}

// Summand of the conjugated lower-order expansion:
// h^{2m-j} binom(k,j) A.(zeta^j x D^{k-j} a).
inline PolyPlaneWave conjugated_term(const SymTensor& A, const Eigen::VectorXcd& zeta, double h,
                                     int m, int j, const PolyPlaneWave& a) {
  const double scale = std::pow(h, 2 * m - j) * static_cast<double>(binom(A.k, j));
  return ppw_scale(scale, coefficient_action(A, zeta, j, a));
}

struct OperatorCoefficients {
  int m = 0;                 // principal part is the m-th Laplacian power
  std::vector<SymTensor> A;  // A[k] has order k; absent orders are zero

  void validate() const {
    for (size_t k = 0; k < A.size(); ++k)
      if (A[k].k != static_cast<int>(k))
        throw std::invalid_argument("OperatorCoefficients: order mismatch at slot " +
                                    std::to_string(k));
  }
};

// Full conjugated operator on an amplitude: h^{2m} e^{-ix.zeta/h} L(e^{ix.zeta/h} a).
inline PolyPlaneWave conjugate_full(const OperatorCoefficients& coeffs,
                                    const Eigen::VectorXcd& zeta, double h,
                                    const PolyPlaneWave& a) {
  coeffs.validate();
  PolyPlaneWave out = apply_P_power(a, zeta, h, coeffs.m);
  for (size_t k = 0; k < coeffs.A.size(); ++k)
    for (int j = 0; j <= static_cast<int>(k); ++j)
      out = ppw_add(out, conjugated_term(coeffs.A[k], zeta, h, coeffs.m, j, a));
  return out;
}

// Transpose rule for constant coefficients: every derivative term vanishes,
// leaving the alternating sign on each order.
inline OperatorCoefficients transpose_coefficients(const OperatorCoefficients& coeffs) {
  coeffs.validate();
  OperatorCoefficients out;
  out.m = coeffs.m;
  out.A = coeffs.A;
  for (size_t k = 0; k < out.A.size(); ++k)
    if (k % 2 == 1) out.A[k] = Complex(-1) * out.A[k];
  return out;
}

}  // namespace tenrec

#endif
