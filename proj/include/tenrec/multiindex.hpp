#ifndef TENREC_MULTIINDEX_HPP
#define TENREC_MULTIINDEX_HPP

// Multi-index combinatorics shared by every other header: checked 64-bit
// binomials, dimensions of symmetric-tensor and polynomial spaces, counted
// multi-indices (exponent vectors) with their canonical ordering, ranking,
// multiplicities, and sub-index enumeration.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace tenrec {

// Counts per coordinate, entries >= 0; total order is the sum of entries.
using CountedIndex = std::vector<int>;
// Coordinate of each tensor slot, entries in [0, d).
using OrderedIndex = std::vector<int>;

// Exact binomial coefficient in 64 bits; throws on overflow instead of
// wrapping so downstream dimension formulas can trust the result.
inline std::uint64_t binom(int n, int r) {
  if (n < 0 || r < 0 || r > n) return 0;
  r = std::min(r, n - r);
  // 128-bit accumulator: the running value binom(n-r+i, i) can overflow 64
  // bits transiently during the multiply even when the result fits.
  unsigned __int128 acc = 1;
  for (int i = 1; i <= r; ++i) {
    acc = acc * static_cast<unsigned>(n - r + i) / static_cast<unsigned>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max())
      throw std::overflow_error("binom(" + std::to_string(n) + ", " + std::to_string(r) +
                                ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

// dim of the space of symmetric k-tensors over C^d (monomials of degree
// exactly k in d variables); zero for negative k by convention.
inline std::uint64_t sym_dim(int d, int k) {
  if (k < 0) return 0;
  if (d <= 0) return k == 0 ? 1 : 0;
  return binom(k + d - 1, d - 1);
}

// dim of polynomials of total degree <= k in d variables.
inline std::uint64_t poly_dim_le(int d, int k) {
  if (k < 0) return 0;
  return binom(k + d, d);
}

inline int counted_total(const CountedIndex& a) {
  return std::accumulate(a.begin(), a.end(), 0);
}

// Number of ordered arrangements of a counted index: |a|! / prod a_i!.
// Computed as a product of binomials so every intermediate fits whenever the
// result does.
inline std::uint64_t multiplicity(const CountedIndex& a) {
  std::uint64_t acc = 1;
  int seen = 0;
  for (int c : a) {
    if (c < 0) throw std::invalid_argument("multiplicity: negative count");
    seen += c;
    std::uint64_t prod = 0;
    if (__builtin_mul_overflow(acc, binom(seen, c), &prod))
      throw std::overflow_error("multiplicity exceeds 64 bits");
    acc = prod;
  }
  return acc;
}

// Canonical order on counted indices of fixed total: ascending in the last
// coordinate, ties broken by the same rule on the remaining prefix.  The
// first index is (k, 0, ..., 0) and the last is (0, ..., 0, k).
inline std::uint64_t counted_rank(const CountedIndex& a) {
  const int d = static_cast<int>(a.size());
  if (d == 0) return 0;
  int k = counted_total(a);
  std::uint64_t r = 0;
  for (int pos = d - 1; pos >= 1; --pos) {
    for (int c = 0; c < a[pos]; ++c) r += sym_dim(pos, k - c);
    k -= a[pos];
  }
  return r;
}

inline CountedIndex counted_unrank(int d, int k, std::uint64_t r) {
  if (d <= 0 || k < 0 || r >= sym_dim(d, k))
    throw std::out_of_range("counted_unrank: rank outside [0, sym_dim)");
  CountedIndex a(d, 0);
  for (int pos = d - 1; pos >= 1; --pos) {
    int c = 0;
    while (r >= sym_dim(pos, k - c)) {
      r -= sym_dim(pos, k - c);
      ++c;
    }
    a[pos] = c;
    k -= c;
  }
  a[0] = k;
  return a;
}

// All counted indices with total k over d coordinates, in canonical order.
inline std::vector<CountedIndex> counted_range(int d, int k) {
  std::vector<CountedIndex> out;
  const std::uint64_t n = sym_dim(d, k);
  out.reserve(n);
  for (std::uint64_t r = 0; r < n; ++r) out.push_back(counted_unrank(d, k, r));
  return out;
}

inline CountedIndex counted_add(const CountedIndex& a, const CountedIndex& b) {
  if (a.size() != b.size()) throw std::invalid_argument("counted_add: size mismatch");
  CountedIndex c(a.size());
  for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

// Component-wise difference a - b; valid only when b <= a everywhere.
inline CountedIndex counted_sub(const CountedIndex& a, const CountedIndex& b) {
  if (a.size() != b.size()) throw std::invalid_argument("counted_sub: size mismatch");
  CountedIndex c(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (b[i] > a[i]) throw std::invalid_argument("counted_sub: difference would go negative");
    c[i] = a[i] - b[i];
  }
  return c;
}

inline bool counted_leq(const CountedIndex& a, const CountedIndex& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

// All sub-indices a <= g with total j.
inline std::vector<CountedIndex> counted_subindices(const CountedIndex& g, int j) {
  std::vector<CountedIndex> out;
  const int d = static_cast<int>(g.size());
  CountedIndex a(d, 0);
  // Depth-first over coordinates, capping each count by g and the remaining total.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == d) {
      if (left == 0) out.push_back(a);
      return;
    }
    const int cap = std::min(g[pos], left);
    for (int c = 0; c <= cap; ++c) {
      a[pos] = c;
      self(self, pos + 1, left - c);
    }
    a[pos] = 0;
  };
  if (j >= 0) rec(rec, 0, j);
  return out;
}

// Flat storage layout for ordered indices: slot 0 is the most significant
// base-d digit.
inline std::uint64_t dense_size(int d, int k) {
  std::uint64_t n = 1;
  for (int i = 0; i < k; ++i) {
    std::uint64_t prod = 0;
    if (__builtin_mul_overflow(n, static_cast<std::uint64_t>(d), &prod))
      throw std::overflow_error("dense_size exceeds 64 bits");
    n = prod;
  }
  return n;
}

inline std::uint64_t ordered_to_flat(const OrderedIndex& o, int d) {
  std::uint64_t t = 0;
  for (int i : o) {
    if (i < 0 || i >= d) throw std::out_of_range("ordered_to_flat: slot outside [0, d)");
    t = t * d + i;
  }
  return t;
}

inline OrderedIndex ordered_from_flat(std::uint64_t t, int d, int k) {
  OrderedIndex o(k);
  for (int i = k - 1; i >= 0; --i) {
    o[i] = static_cast<int>(t % d);
    t /= d;
  }
  return o;
}

// Collapse an ordered index to its counted form over d coordinates.
inline CountedIndex to_counted(const OrderedIndex& o, int d) {
  CountedIndex a(d, 0);
  for (int i : o) {
    if (i < 0 || i >= d) throw std::out_of_range("to_counted: slot outside [0, d)");
    ++a[i];
  }
  return a;
}

// One ordered representative of a counted index (slots sorted ascending).
inline OrderedIndex to_ordered(const CountedIndex& a) {
  OrderedIndex o;
  o.reserve(counted_total(a));
  for (size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < a[i]; ++c) o.push_back(static_cast<int>(i));
  return o;
}

}  // namespace tenrec

#endif
