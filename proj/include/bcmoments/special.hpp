#pragma once

// Special functions and exact power sums.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "bcmoments/error.hpp"
#include "bcmoments/optimize.hpp"

namespace bcmoments {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// A numerically summed series together with a certified bound on what was
/// left out.
struct SeriesValue {
  double value = 0.0;
  double truncation_error = 0.0;  // upper bound on |omitted tail|
  std::size_t terms_used = 0;
  bool converged = true;
};

/// Stopping rule shared by all infinite sums.
inline double series_tolerance(double partial_sum) {
  return std::max(1e-12, 1e-9 * std::abs(partial_sum));
}

inline constexpr unsigned kMaxExactPower = 30;

/// Bernoulli numbers B_0..B_n with B_1 = +1/2, via Akiyama–Tanigawa.
inline std::vector<Rational> bernoulli_numbers(unsigned n) {
  std::vector<Rational> out(n + 1);
  std::vector<Rational> row(n + 1);
  for (unsigned m = 0; m <= n; ++m) {
    row[m] = Rational(1, m + 1);
    for (unsigned j = m; j >= 1; --j) {
      row[j - 1] = Rational(j) * (row[j - 1] - row[j]);
    }
    out[m] = row[0];
  }
  return out;
}

namespace detail {
inline const std::vector<Rational>& bernoulli_cache() {
  static const std::vector<Rational> cache = bernoulli_numbers(2 * kMaxExactPower + 2);
  return cache;
}

inline BigInt binomial(unsigned n, unsigned k) {
  BigInt out = 1;
  for (unsigned i = 1; i <= k; ++i) {
    out *= n + 1 - i;
    out /= i;
  }
  return out;
}
}  // namespace detail

/// Coefficients c[k] of N^k (k = 0..p+1) of the Faulhaber polynomial with
/// sum_{n=1}^N n^p = sum_k c[k] N^k.
inline std::vector<Rational> faulhaber_coefficients(unsigned p) {
  require(p <= kMaxExactPower, ErrorKind::range, "Faulhaber power p must be <= 30");
  const auto& bern = detail::bernoulli_cache();
  std::vector<Rational> coeff(p + 2, Rational(0));
  for (unsigned j = 0; j <= p; ++j) {
    coeff[p + 1 - j] = Rational(detail::binomial(p + 1, j)) * bern[j] / Rational(p + 1);
  }
  return coeff;
}

/// Exact sum_{n=1}^N n^p evaluated through the closed-form polynomial.
inline BigInt faulhaber_sum(unsigned p, std::uint64_t n) {
  const auto coeff = faulhaber_coefficients(p);
  const Rational x{BigInt(n)};
  Rational acc(0);
  for (std::size_t k = coeff.size(); k-- > 0;) {
    acc = acc * x + coeff[k];
  }
  require(denominator(acc) == 1, ErrorKind::numeric, "Faulhaber polynomial produced a non-integer");
  return numerator(acc);
}

/// sum_{n=m}^inf n^{-s} for s > 1, m >= 1: explicit head plus Euler–Maclaurin
/// tail. For the completely monotone n^{-s} the remainder is bounded by the
/// first omitted correction term, which is reported as truncation_error.
inline SeriesValue hurwitz_tail(double s, std::uint64_t m) {
  require(s > 1.0, ErrorKind::divergence, "sum of n^{-s} diverges for s <= 1");
  require(m >= 1, ErrorKind::domain, "power tail index must be >= 1");
  static const std::vector<double> b2k = [] {
    const auto& bern = detail::bernoulli_cache();
    std::vector<double> out;
    double factorial = 1.0;
    for (unsigned k = 1; 2 * k < bern.size(); ++k) {
      factorial *= (2.0 * k - 1.0) * (2.0 * k);
      out.push_back(bern[2 * k].convert_to<double>() / factorial);
    }
    return out;
  }();

  std::uint64_t cut = std::max<std::uint64_t>(m, 16);
  for (;;) {
    long double head = 0.0L;
    for (std::uint64_t n = cut; n-- > m;) head += std::pow(static_cast<long double>(n), -static_cast<long double>(s));
    const double big_m = static_cast<double>(cut);
    double tail = std::pow(big_m, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(big_m, -s);
    double rising = s;  // s (s+1) ... (s+2k-2)
    double power = std::pow(big_m, -s - 1.0);
    double omitted = std::numeric_limits<double>::infinity();
    double prev_mag = std::numeric_limits<double>::infinity();
    bool good = false;
    for (std::size_t k = 0; k < b2k.size(); ++k) {
      const double term = b2k[k] * rising * power;
      const double mag = std::abs(term);
      if (mag > prev_mag) break;  // asymptotic series started to grow
      const double target = 1e-3 * series_tolerance(static_cast<double>(head) + tail);
      if (mag <= target) {
        omitted = mag;
        good = true;
        break;
      }
      tail += term;
      prev_mag = mag;
      rising *= (s + 2.0 * k + 1.0) * (s + 2.0 * k + 2.0);
      power /= big_m * big_m;
    }
    if (good || cut > (std::uint64_t{1} << 24)) {
      SeriesValue out;
      out.value = static_cast<double>(head) + tail;
      out.truncation_error = good ? omitted : prev_mag;
      out.terms_used = static_cast<std::size_t>(cut - m);
      out.converged = good;
      return out;
    }
    cut *= 4;
  }
}

/// Riemann zeta on the real axis, s > 1.
inline SeriesValue zeta(double s) {
  require(s > 1.0 + 1e-6, ErrorKind::divergence, "zeta(s) requires s > 1 (series diverges)");
  return hurwitz_tail(s, 1);
}

/// Principal branch W0 of the Lambert W function on [-1/e, inf).
inline double lambert_w0(double x) {
  constexpr double inv_e = 1.0 / std::numbers::e;
  require(std::isfinite(x), ErrorKind::domain, "Lambert W argument must be finite");
  require(x >= -inv_e - 1e-15, ErrorKind::domain, "Lambert W0 requires x >= -1/e");
  if (x == 0.0) return 0.0;
  if (x <= -inv_e) return -1.0;

  double w;
  if (x >= 0.0) {
    w = std::log1p(x);
  } else {
    // branch-point expansion around x = -1/e
    const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  }
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    if (!std::isfinite(step)) break;
    w -= step;
    if (std::abs(step) <= 1e-12 * (1.0 + std::abs(w))) return w;
  }
  const double hi = x > std::numbers::e ? std::log(x) : 1.0;
  return bisect_root([x](double v) { return v * std::exp(v) - x; }, -1.0, hi);
}

}  // namespace bcmoments
