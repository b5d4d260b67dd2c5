#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "gearopt/errors.hpp"

namespace gearopt {

/// Deterministic order-independent reduction: recursive pairwise summation.
/// Used for every energy/efficiency accumulation so repeated runs produce
/// bit-identical results regardless of future chunking changes.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Golden-section search for the maximum of f on [lo, hi].
/// Assumes f is unimodal; on a monotone f it converges to the favoured
/// boundary, which callers can detect by comparing against the interval ends.
template <class F>
double golden_section_maximize(F&& f, double lo, double hi, double rel_tol = 1e-12) {
  require(hi > lo, errc::config, "golden_section_maximize: empty interval");
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5)-1)/2
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  // ~170 iterations shrink any double interval below relative epsilon;
  // the width test exits earlier for normal inputs.
  for (int it = 0; it < 400 && (b - a) > rel_tol * (std::abs(a) + std::abs(b)) * 0.5; ++it) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    }
  }
  return 0.5 * (a + b);
}

/// Gaussian elimination with partial pivoting for small dense systems.
/// A pivot smaller than 1e-12 times the infinity norm of its row is treated
/// as singular.
template <std::size_t N>
std::array<double, N> solve_linear(std::array<std::array<double, N>, N> a,
                                   std::array<double, N> b) {
  constexpr double kPivotRel = 1e-12;
  std::array<double, N> row_norm{};
  for (std::size_t i = 0; i < N; ++i) {
    double m = 0.0;
    for (double v : a[i]) m = std::max(m, std::abs(v));
    row_norm[i] = m;
  }
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      std::swap(b[piv], b[col]);
      std::swap(row_norm[piv], row_norm[col]);
    }
    const double p = a[col][col];
    require(std::abs(p) > kPivotRel * std::max(row_norm[col], 1e-300),
            errc::singular_system, "solve_linear: pivot below threshold");
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / p;
      if (f == 0.0) continue;
      for (std::size_t k = col; k < N; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < N; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Root of a strictly decreasing function with f(lo) > 0.
/// Grows the bracket geometrically if needed, then bisects to full double
/// resolution. Suitable for polynomial demand-balance equations where a
/// unique positive root is guaranteed.
template <class F>
double bisect_decreasing(F&& f, double lo, double hi_guess) {
  double hi = std::max(hi_guess, lo + 1e-12);
  double fhi = f(hi);
  for (int it = 0; fhi > 0.0 && it < 200; ++it) {
    hi *= 2.0;
    fhi = f(hi);
  }
  require(fhi <= 0.0, errc::infeasible, "bisect_decreasing: no sign change found");
  double a = lo, b = hi;
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (std::abs(a) + std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    if (f(m) > 0.0)
      a = m;
    else
      b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace gearopt
