#ifndef TENREC_SEMICLASSICAL_HPP
#define TENREC_SEMICLASSICAL_HPP

// Periodic-grid spectral sandbox: weighted X-norms, the conjugated symbol as
// a Fourier multiplier, a Tikhonov-floored inverse, the contraction-mapping
// CGO solve, and the Monte-Carlo averaging ratio.  The box stands in for
// whole space; all data is kept supported in the middle third by the smooth
// cutoff below.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tenrec/calculus.hpp"
#include "tenrec/rng.hpp"
#include "tenrec/structure.hpp"

namespace tenrec {

struct GridField {
  int d = 0;
  double L = 2.0 * M_PI;
  int N = 0;
  std::vector<Complex> values;  // x_m = (L/N) m, row-major
  std::vector<Complex> coeffs;  // c_n = N^{-d} sum_m u(x_m) e^{-i xi_n . x_m}

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(N);
    return s;
  }
};

namespace detail {

inline void dft_inplace(int d, int N, int sign, std::vector<Complex>& data) {
  std::vector<int> n(d, N);
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft(d, n.data(), buf, buf, sign, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

inline int wrap_freq(int i, int N) { return i < (N + 1) / 2 ? i : i - N; }

}  // namespace detail

inline GridField grid_from_values(int d, double L, int N, std::vector<Complex> v) {
  GridField u;
  u.d = d;
  u.L = L;
  u.N = N;
  if (v.size() != u.size()) throw std::invalid_argument("grid_from_values: size mismatch");
  u.coeffs = v;
  detail::dft_inplace(d, N, FFTW_FORWARD, u.coeffs);
  const double inv = 1.0 / static_cast<double>(u.size());
  for (auto& c : u.coeffs) c *= inv;
  u.values = std::move(v);
  return u;
}

inline GridField grid_from_coeffs(int d, double L, int N, std::vector<Complex> c) {
  GridField u;
  u.d = d;
  u.L = L;
  u.N = N;
  if (c.size() != u.size()) throw std::invalid_argument("grid_from_coeffs: size mismatch");
  u.values = c;
  detail::dft_inplace(d, N, FFTW_BACKWARD, u.values);
  u.coeffs = std::move(c);
  return u;
}

// Lattice frequency of the flat coefficient index, in physical units 2pi/L.
inline Eigen::VectorXd grid_freq(const GridField& u, std::size_t flat) {
  Eigen::VectorXd xi(u.d);
  for (int a = u.d - 1; a >= 0; --a) {
    const int i = static_cast<int>(flat % u.N);
    flat /= u.N;
    xi(a) = (2.0 * M_PI / u.L) * detail::wrap_freq(i, u.N);
  }
  return xi;
}

inline Eigen::VectorXd grid_point(const GridField& u, std::size_t flat) {
  Eigen::VectorXd x(u.d);
  for (int a = u.d - 1; a >= 0; --a) {
    x(a) = (u.L / u.N) * static_cast<double>(flat % u.N);
    flat /= u.N;
  }
  return x;
}

struct SemiclassicalWeight {
  double h = 1.0;
  IsotropicVector zeta;
  double lambda = 0.0;

  void validate() const {
    if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("weight: h outside (0, 1]");
    if (zeta.invariant_violation() > 1e-10)
      throw std::invalid_argument("weight: direction is not isotropic");
  }
};

// Semiclassical symbol p_zeta(h xi) = h^2 |xi|^2 + 2 h zeta.xi.
inline Complex p_symbol(const SemiclassicalWeight& w, const Eigen::VectorXd& xi) {
  const Complex zx = (w.zeta.value.array() * xi.cast<Complex>().array()).sum();
  return w.h * w.h * xi.squaredNorm() + 2.0 * w.h * zx;
}

// Weighted spectral norm: ||u||^2 = sum (h + |p_zeta(h xi)|)^{2 lambda} |c_xi|^2.
inline double x_norm(const GridField& u, const SemiclassicalWeight& w) {
  w.validate();
  double s = 0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const double a2 = std::norm(u.coeffs[i]);
    if (a2 == 0.0) continue;
    const double base = w.h + std::abs(p_symbol(w, grid_freq(u, i)));
    s += std::pow(base, 2.0 * w.lambda) * a2;
  }
  return std::sqrt(s);
}

inline double sobolev_norm(const GridField& u, double s) {
  double acc = 0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const double a2 = std::norm(u.coeffs[i]);
    if (a2 == 0.0) continue;
    acc += std::pow(1.0 + grid_freq(u, i).squaredNorm(), s) * a2;
  }
  return std::sqrt(acc);
}

inline double l2_norm(const GridField& u) {
  double acc = 0;
  for (const auto& c : u.coeffs) acc += std::norm(c);
  return std::sqrt(acc);
}

inline GridField apply_P(const GridField& u, const SemiclassicalWeight& w, int m) {
  w.validate();
  if (m < 0) throw std::invalid_argument("apply_P: negative power");
  std::vector<Complex> c(u.coeffs.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (u.coeffs[i] == 0.0) continue;
    c[i] = std::pow(p_symbol(w, grid_freq(u, i)), m) * u.coeffs[i];
  }
  return grid_from_coeffs(u.d, u.L, u.N, std::move(c));
}

// Spectral derivative D^alpha with D = (1/i) d/dx: multiplier xi^alpha.
inline GridField apply_D_grid(const GridField& u, const CountedIndex& alpha) {
  if (static_cast<int>(alpha.size()) != u.d)
    throw std::invalid_argument("apply_D_grid: index dimension mismatch");
  std::vector<Complex> c(u.coeffs.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (u.coeffs[i] == 0.0) continue;
    const Eigen::VectorXd xi = grid_freq(u, i);
    double mono = 1.0;
    for (int a = 0; a < u.d; ++a)
      for (int q = 0; q < alpha[a]; ++q) mono *= xi(a);
    c[i] = mono * u.coeffs[i];
  }
  return grid_from_coeffs(u.d, u.L, u.N, std::move(c));
}

// Regularized multiplier inverse: exact 1/p where |p| >= eps h, Tikhonov
// pbar / (|p|^2 + (eps h)^2) on the floored modes.
inline GridField solve_inverse(const GridField& f, const SemiclassicalWeight& w, double eps) {
  w.validate();
  if (!(eps > 0)) throw std::invalid_argument("solve_inverse: floor must be positive");
  std::vector<Complex> c(f.coeffs.size());
  const double floor = eps * w.h;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (f.coeffs[i] == 0.0) continue;
    const Complex p = p_symbol(w, grid_freq(f, i));
    const Complex q =
        std::abs(p) >= floor ? 1.0 / p : std::conj(p) / (std::norm(p) + floor * floor);
    c[i] = q * f.coeffs[i];
  }
  return grid_from_coeffs(f.d, f.L, f.N, std::move(c));
}

// Fraction of spectral energy above the 2/3 band, the aliasing health check.
inline double band_fraction_above(const GridField& u, double frac = 2.0 / 3.0) {
  double total = 0, high = 0;
  const double cut = frac * (u.N / 2.0);
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    const double a2 = std::norm(u.coeffs[i]);
    if (a2 == 0.0) continue;
    total += a2;
    std::size_t flat = i;
    double maxn = 0;
    for (int a = 0; a < u.d; ++a) {
      maxn = std::max(maxn,
                      std::abs(static_cast<double>(detail::wrap_freq(flat % u.N, u.N))));
      flat /= u.N;
    }
    if (maxn > cut) high += a2;
  }
  return total > 0 ? high / total : 0.0;
}

struct DealiasedProduct {
  GridField field;
  double tail = 0;  // product energy above 2/3 of the doubled Nyquist
};

// Pointwise product through a doubled grid so that the quadratic spectrum
// never folds back into the retained band.  The tail diagnostic measures how
// close the exact product comes to the doubled grid's own safety margin: a
// tiny value certifies that even the padded computation had headroom.
inline DealiasedProduct multiply_dealiased_tail(const GridField& a, const GridField& b) {
  if (a.d != b.d || a.N != b.N || a.L != b.L)
    throw std::invalid_argument("multiply_dealiased: grid mismatch");
  const int d = a.d, N = a.N, M = 2 * N;
  std::size_t big = 1;
  for (int q = 0; q < d; ++q) big *= M;
  std::vector<Complex> pa(big, 0.0), pb(big, 0.0);
  const auto embed = [&](const std::vector<Complex>& src, std::vector<Complex>& dst) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] == 0.0) continue;
      std::size_t flat = i, out = 0;
      std::size_t stride = 1;
      for (int q = 0; q < d; ++q) {
        const int f = detail::wrap_freq(flat % N, N);
        out += static_cast<std::size_t>((f + M) % M) * stride;
        flat /= N;
        stride *= M;
      }
      dst[out] = src[i];
    }
  };
  embed(a.coeffs, pa);
  embed(b.coeffs, pb);
  detail::dft_inplace(d, M, FFTW_BACKWARD, pa);
  detail::dft_inplace(d, M, FFTW_BACKWARD, pb);
  for (std::size_t i = 0; i < big; ++i) pa[i] *= pb[i];
  detail::dft_inplace(d, M, FFTW_FORWARD, pa);

  double total = 0, high = 0;
  const double cut = (2.0 / 3.0) * (M / 2.0);
  for (std::size_t i = 0; i < big; ++i) {
    const double e = std::norm(pa[i]);
    if (e == 0.0) continue;
    total += e;
    std::size_t flat = i;
    double maxn = 0;
    for (int q = 0; q < d; ++q) {
      maxn = std::max(maxn,
                      std::abs(static_cast<double>(detail::wrap_freq(flat % M, M))));
      flat /= M;
    }
    if (maxn > cut) high += e;
  }

  const double inv = 1.0 / static_cast<double>(big);
  std::vector<Complex> c(a.coeffs.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t flat = i, in = 0;
    std::size_t stride = 1;
    for (int q = 0; q < d; ++q) {
      const int f = detail::wrap_freq(flat % N, N);
      in += static_cast<std::size_t>((f + M) % M) * stride;
      flat /= N;
      stride *= M;
    }
    c[i] = pa[in] * inv;
  }
  DealiasedProduct out;
  out.field = grid_from_coeffs(d, a.L, N, std::move(c));
  out.tail = total > 0 ? high / total : 0.0;
  return out;
}

inline GridField multiply_dealiased(const GridField& a, const GridField& b) {
  return multiply_dealiased_tail(a, b).field;
}

// Smooth bump equal to 1 on the middle third of each axis, supported in the
// middle two thirds, built from the classical exp(-1/u) step so that every
// derivative vanishes at the seams.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double s0 = std::exp(-1.0 / u);
  const double s1 = std::exp(-1.0 / (1.0 - u));
  return s0 / (s0 + s1);
}

inline double cutoff_profile(double t) {
  if (t < 1.0 / 6.0 || t > 5.0 / 6.0) return 0.0;
  if (t < 1.0 / 3.0) return smooth_step((t - 1.0 / 6.0) * 6.0);
  if (t <= 2.0 / 3.0) return 1.0;
  return smooth_step((5.0 / 6.0 - t) * 6.0);
}

inline GridField cutoff_field(int d, double L, int N) {
  GridField probe;
  probe.d = d;
  probe.L = L;
  probe.N = N;
  std::vector<Complex> v(probe.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::VectorXd x = grid_point(probe, i);
    double f = 1.0;
    for (int a = 0; a < d; ++a) f *= cutoff_profile(x(a) / L);
    v[i] = f;
  }
  return grid_from_values(d, L, N, std::move(v));
}

inline GridField gaussian_bump(int d, double L, int N, const Eigen::VectorXd& center,
                               double width, Complex amplitude) {
  GridField probe;
  probe.d = d;
  probe.L = L;
  probe.N = N;
  std::vector<Complex> v(probe.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::VectorXd x = grid_point(probe, i);
    v[i] = amplitude * std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
  }
  return grid_from_values(d, L, N, std::move(v));
}

// Order-k tensor coefficient sampled on the grid, counted components.
struct GridTensorField {
  int d = 0;
  int k = 0;
  std::vector<GridField> comp;
};

inline GridTensorField constant_grid_tensor(const SymTensor& A, double L, int N) {
  GridTensorField g;
  g.d = A.d;
  g.k = A.k;
  for (const auto& c : A.comp) {
    GridField probe;
    probe.d = A.d;
    probe.L = L;
    probe.N = N;
    g.comp.push_back(grid_from_values(A.d, L, N, std::vector<Complex>(probe.size(), c)));
  }
  return g;
}

struct CgoResult {
  GridField psi;
  int iterations = 0;
  bool converged = false;
  double contraction = 0;           // largest successive-difference ratio
  double x_norm_psi = 0;            // X^{m/2}
  double fixed_point_residual = 0;  // last difference over the first iterate
  double equation_residual = 0;     // off-floor spectral residual over ||f||
  double floor_mass = 0;            // share of ||f||^2 on floored modes
  double alias_tail = 0;            // worst padded-product tail seen in the run
};

// Fixed point of psi = I^m f - I^m sum_k sum_j h^{2m-j} binom(k,j)
// A^{(k)}.(zeta^j x D^{k-j} psi), with f = -cutoff (P^m a + same sum on a).
// The a-side terms come from the exact symbolic calculus; the psi-side
// products run through the dealiased doubled grid.
inline CgoResult cgo_solve(const std::vector<GridTensorField>& coeffs, const PolyPlaneWave& a,
                           const SemiclassicalWeight& w, int m, int max_iter, double tol) {
  w.validate();
  if (m < 1) throw std::invalid_argument("cgo_solve: need m >= 1");
  int d = 0, N = 0;
  double L = 2.0 * M_PI;
  for (const auto& A : coeffs)
    if (!A.comp.empty()) {
      d = A.d;
      N = A.comp[0].N;
      L = A.comp[0].L;
    }
  if (N == 0) throw std::invalid_argument("cgo_solve: no coefficient grid present");
  if (a.d() != d) throw std::invalid_argument("cgo_solve: amplitude dimension mismatch");
  for (const auto& A : coeffs)
    if (!A.comp.empty() && A.k >= 2 * m)
      throw std::invalid_argument("cgo_solve: coefficient order must stay below 2m");

  const Eigen::VectorXcd zeta = w.zeta.value;
  const double h = w.h;
  SemiclassicalWeight wm = w;
  wm.lambda = m / 2.0;

  const GridField phi = cutoff_field(d, L, N);
  GridField probe = phi;  // carries d, L, N for fresh fields

  // Per order and zeta-power: the contracted coefficient (A.zeta^j)_delta as
  // grids, the scalar weight h^{2m-j} binom(k,j), and the multiindices delta.
  struct ContractedBlock {
    double weight;  // h^{2m-j} binom(k,j) mult(delta)
    CountedIndex delta;
    GridField az;  // (A^{(k)} . zeta^j)_delta on the grid
  };
  std::vector<ContractedBlock> blocks;
  for (const auto& A : coeffs) {
    if (A.comp.empty()) continue;
    const int k = A.k;
    for (int j = 0; j <= k; ++j) {
      const double hpow = std::pow(h, 2 * m - j) * static_cast<double>(binom(k, j));
      const auto beta_range = counted_range(d, j);
      for (const auto& delta : counted_range(d, k - j)) {
        std::vector<Complex> vals(probe.size(), 0.0);
        for (const auto& beta : beta_range) {
          Complex wz = static_cast<double>(multiplicity(beta));
          for (std::size_t i = 0; i < beta.size(); ++i)
            for (int q = 0; q < beta[i]; ++q) wz *= zeta(i);
          const auto& src = A.comp[counted_rank(counted_add(delta, beta))].values;
          for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += wz * src[i];
        }
        ContractedBlock blk;
        blk.weight = hpow * static_cast<double>(multiplicity(delta));
        blk.delta = delta;
        blk.az = grid_from_values(d, L, N, std::move(vals));
        blocks.push_back(std::move(blk));
      }
    }
  }

  // Right side from the symbolic calculus, sampled and cut off.
  const PolyPlaneWave pa = apply_P_power(a, zeta, h, m);
  std::vector<Complex> fv(probe.size(), 0.0);
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = pa.eval(grid_point(probe, i));
  for (const auto& blk : blocks) {
    const PolyPlaneWave da = apply_D(a, to_ordered(blk.delta));
    if (da.terms.empty()) continue;
    for (std::size_t i = 0; i < fv.size(); ++i)
      fv[i] += blk.weight * blk.az.values[i] * da.eval(grid_point(probe, i));
  }
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = -phi.values[i] * fv[i];
  const GridField f = grid_from_values(d, L, N, std::move(fv));

  double alias_tail = 0;
  const auto apply_B = [&](const GridField& psi) {
    std::vector<Complex> acc(probe.size(), 0.0);
    for (const auto& blk : blocks) {
      const GridField dpsi = apply_D_grid(psi, blk.delta);
      const DealiasedProduct prod = multiply_dealiased_tail(blk.az, dpsi);
      alias_tail = std::max(alias_tail, prod.tail);
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] += blk.weight * prod.field.values[i];
    }
    return grid_from_values(d, L, N, std::move(acc));
  };

  const double eps = 1.0;
  const auto inv_m = [&](const GridField& g) {
    GridField out = g;
    for (int q = 0; q < m; ++q) out = solve_inverse(out, w, eps);
    return out;
  };

  CgoResult res;
  const GridField base = inv_m(f);
  double base_norm = x_norm(base, wm);
  GridField psi = base;
  double prev_diff = base_norm;
  res.contraction = 0;
  res.converged = base_norm == 0.0;
  res.iterations = 1;
  for (int it = 1; it < max_iter && !res.converged; ++it) {
    const GridField bpsi = apply_B(psi);
    const GridField ibpsi = inv_m(bpsi);
    std::vector<Complex> nv(probe.size());
    for (std::size_t i = 0; i < nv.size(); ++i) nv[i] = base.values[i] - ibpsi.values[i];
    GridField next = grid_from_values(d, L, N, std::move(nv));
    std::vector<Complex> dv(probe.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = next.values[i] - psi.values[i];
    const double diff = x_norm(grid_from_values(d, L, N, std::move(dv)), wm);
    if (prev_diff > 0) res.contraction = std::max(res.contraction, diff / prev_diff);
    prev_diff = diff;
    psi = std::move(next);
    res.iterations = it + 1;
    res.fixed_point_residual = base_norm > 0 ? diff / base_norm : 0.0;
    if (diff < tol * std::max(base_norm, 1e-300)) res.converged = true;
  }
  res.psi = psi;
  res.x_norm_psi = x_norm(psi, wm);

  // Spectral equation residual P^m psi + B psi - f, restricted to the modes
  // where the floored inverse is the exact inverse; the floored share of f
  // is reported separately.
  const GridField pmpsi = apply_P(psi, w, m);
  const GridField bpsi = apply_B(psi);
  double off = 0, fnorm2 = 0, floored = 0;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    const double f2 = std::norm(f.coeffs[i]);
    fnorm2 += f2;
    const Complex p = p_symbol(w, grid_freq(f, i));
    if (std::abs(p) >= eps * h) {
      off += std::norm(pmpsi.coeffs[i] + bpsi.coeffs[i] - f.coeffs[i]);
    } else {
      floored += f2;
    }
  }
  res.equation_residual = fnorm2 > 0 ? std::sqrt(off / fnorm2) : 0.0;
  res.floor_mass = fnorm2 > 0 ? floored / fnorm2 : 0.0;
  res.alias_tail = alias_tail;
  return res;
}

struct AvgReport {
  double ratio = 0;
  double stderr_ratio = 0;
};

// Monte-Carlo mean of ||f||^2 in X^{-lambda} over tau uniform in [h, 2h] and
// the rotated direction e^{i theta} zeta, against h^{2(-lambda-s+k+sigma)}
// times the squared W^{k-s,2} norm.  The (1/h) dtau dtheta measure makes the
// mean enter with a plain 2 pi factor.
inline AvgReport avg_estimate_mc(const GridField& f, double lambda, double s, double k,
                                 double sigma, double h, const IsotropicVector& zeta,
                                 int n_mc, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma < 1.0))
    throw std::invalid_argument("avg_estimate_mc: sigma outside [0, 1)");
  if (!(s - k - 2.0 * sigma >= -1e-12))
    throw std::invalid_argument("avg_estimate_mc: window s - k - 2 sigma >= 0 violated");
  if (!(2.0 * lambda - 2.0 * sigma >= s - k - 2.0 * sigma - 1e-12))
    throw std::invalid_argument("avg_estimate_mc: window 2 lambda - 2 sigma too small");
  if (n_mc < 2) throw std::invalid_argument("avg_estimate_mc: need at least two samples");

  struct Mode {
    double xi2;
    Complex zx;
    double a2;
  };
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    const double a2 = std::norm(f.coeffs[i]);
    if (a2 == 0.0) continue;
    const Eigen::VectorXd xi = grid_freq(f, i);
    const Complex zx = (zeta.value.array() * xi.cast<Complex>().array()).sum();
    modes.push_back({xi.squaredNorm(), zx, a2});
  }

  Rng rng(seed);
  double mean = 0, m2 = 0;
  for (int n = 0; n < n_mc; ++n) {
    const double tau = h * (1.0 + rng.uniform());
    const double theta = 2.0 * M_PI * rng.uniform();
    const Complex rot(std::cos(theta), std::sin(theta));
    double nsq = 0;
    for (const auto& md : modes) {
      const Complex p = tau * tau * md.xi2 + 2.0 * tau * rot * md.zx;
      nsq += std::pow(tau + std::abs(p), -2.0 * lambda) * md.a2;
    }
    const double delta = nsq - mean;
    mean += delta / (n + 1);
    m2 += delta * (nsq - mean);
  }
  const double var = m2 / (n_mc - 1);
  const double wnorm = sobolev_norm(f, k - s);
  const double rhs = std::pow(h, 2.0 * (-lambda - s + k + sigma)) * wnorm * wnorm;
  AvgReport rep;
  rep.ratio = 2.0 * M_PI * mean / rhs;
  rep.stderr_ratio = 2.0 * M_PI * std::sqrt(var / n_mc) / rhs;
  return rep;
}

}  // namespace tenrec

#endif
