#pragma once

// One-dimensional search helpers used by the bound minimizations.

#include <cmath>
#include <functional>
#include <limits>

#include "bcmoments/error.hpp"

namespace bcmoments {

struct Minimum {
  double argmin;
  double value;
};

/// Golden-section search for a unimodal f on [lo, hi].
template <typename F>
Minimum golden_section_minimize(F&& f, double lo, double hi, double x_tol = 1e-12, int max_iter = 500) {
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > x_tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

/// Coarse grid scan over [lo, hi] followed by golden-section refinement in
/// the cell pair around the best grid point. Protects against a nonunimodal
/// objective picking up a poor local minimum from a bad initial bracket.
template <typename F>
Minimum grid_then_golden(F&& f, double lo, double hi, int grid_points = 200, double x_tol = 1e-12) {
  double best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  int best_i = 0;
  const double step = (hi - lo) / grid_points;
  for (int i = 0; i <= grid_points; ++i) {
    const double x = lo + step * i;
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
      best_i = i;
    }
  }
  const double a = lo + step * std::max(0, best_i - 1);
  const double b = lo + step * std::min(grid_points, best_i + 1);
  Minimum refined = golden_section_minimize(f, a, b, x_tol);
  if (!(refined.value <= best_f)) return {best_x, best_f};
  return refined;
}

/// Bisection root of a function with a sign change on [lo, hi].
template <typename F>
double bisect_root(F&& f, double lo, double hi, double x_tol = 1e-15, int max_iter = 400) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  require(std::signbit(flo) != std::signbit(fhi), ErrorKind::numeric, "bisection interval does not bracket a root");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || (hi - lo) <= x_tol * (1.0 + std::abs(mid))) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace bcmoments
