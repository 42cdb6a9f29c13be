#pragma once

// Large-deviation rate functions: the Cramér transform of a scalar cumulant
// generating function and the Sanov rate of a one-coordinate constraint on a
// finite alphabet.

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "bcmoments/error.hpp"
#include "bcmoments/optimize.hpp"

namespace bcmoments {

/// Cumulant generating function Lambda(lambda) = ln E[e^{lambda X}].
struct Cgf {
  std::function<double(double)> lambda;
  double mean = 0.0;
  std::string name = "custom";
};

inline Cgf gaussian_cgf(double mu = 0.0, double sigma = 1.0) {
  return {[mu, sigma](double l) { return mu * l + 0.5 * sigma * sigma * l * l; }, mu, "gaussian"};
}

/// ln cosh(lambda), evaluated without overflow.
inline Cgf rademacher_cgf() {
  return {[](double l) {
            const double a = std::abs(l);
            return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
          },
          0.0, "rademacher"};
}

/// ln(1 - p + p e^lambda), evaluated without overflow.
inline Cgf bernoulli_cgf(double p) {
  require(p > 0.0 && p < 1.0, ErrorKind::domain, "Bernoulli parameter must lie in (0,1)");
  return {[p](double l) {
            if (l > 0.0) return l + std::log(p + (1.0 - p) * std::exp(-l));
            return std::log1p(p * std::expm1(l));
          },
          p, "bernoulli"};
}

struct RateFunctionResult {
  double rate = 0.0;
  std::vector<double> argmin;  // minimizing point x (Cramér) or distribution nu (Sanov)
  double tilt = 0.0;           // optimal lambda / theta
  std::string method;
};

/// Lambda*(x) = sup_lambda (lambda x - Lambda(lambda)) by concave 1-d search.
/// Returns {value, maximizing lambda}; the sup may be approached as
/// |lambda| -> inf (e.g. bounded support), in which case the value is the limit.
inline std::pair<double, double> legendre_transform(const Cgf& cgf, double x) {
  const double sign = x >= cgf.mean ? 1.0 : -1.0;
  const auto g = [&](double t) {
    const double l = sign * t;
    const double v = l * x - cgf.lambda(l);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };
  if (x == cgf.mean) return {0.0, 0.0};
  double hi = 1.0;
  double prev = g(0.5);
  while (hi < 1e8) {
    const double cur = g(hi);
    if (!(cur > prev)) break;
    prev = cur;
    hi *= 2.0;
  }
  const Minimum m = golden_section_minimize([&](double t) { return -g(t); }, 0.0, hi, 1e-14);
  const double best = std::max(-m.value, std::max(g(hi), 0.0));
  return {best, sign * m.argmin};
}

/// inf_{|x - mean| >= eps} Lambda*(x) = min(Lambda*(mean + eps), Lambda*(mean - eps)).
inline RateFunctionResult cramer_rate(const Cgf& cgf, double eps) {
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  for (double l : {-0.1, -0.01, 0.01, 0.1}) {
    require(std::isfinite(cgf.lambda(l)), ErrorKind::domain, "cumulant generating function is not finite near 0");
  }
  RateFunctionResult out;
  out.method = "numeric";
  if (eps == 0.0) {
    out.argmin = {cgf.mean};
    return out;
  }
  const auto up = legendre_transform(cgf, cgf.mean + eps);
  const auto down = legendre_transform(cgf, cgf.mean - eps);
  if (up.first <= down.first) {
    out.rate = up.first;
    out.argmin = {cgf.mean + eps};
    out.tilt = up.second;
  } else {
    out.rate = down.first;
    out.argmin = {cgf.mean - eps};
    out.tilt = down.second;
  }
  return out;
}

/// D_KL(nu || mu) in nats.
inline double kl_divergence(const std::vector<double>& nu, const std::vector<double>& mu) {
  require(nu.size() == mu.size(), ErrorKind::input, "distributions must share an alphabet");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] == 0.0) continue;
    require(mu[i] > 0.0, ErrorKind::domain, "KL divergence is infinite");
    acc += nu[i] * std::log(nu[i] / mu[i]);
  }
  return static_cast<double>(acc);
}

/// Binary KL divergence t ln(t/p) + (1-t) ln((1-t)/(1-p)).
inline double bernoulli_kl(double t, double p) { return kl_divergence({t, 1.0 - t}, {p, 1.0 - p}); }

/// inf { D_KL(nu || mu) : nu(a) >= t } via exponential tilting of coordinate a.
inline RateFunctionResult sanov_rate(const std::vector<double>& mu, std::size_t a, double t) {
  require(!mu.empty() && a < mu.size(), ErrorKind::input, "symbol index outside the alphabet");
  for (double m : mu) require(m > 0.0, ErrorKind::domain, "mu must be strictly positive on its alphabet");
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  require(std::abs(total - 1.0) < 1e-9, ErrorKind::domain, "mu must sum to 1");
  require(t <= 1.0, ErrorKind::domain, "threshold t must be <= 1");
  RateFunctionResult out;
  out.method = "tilting";
  const double ma = mu[a];
  if (t <= ma) {
    out.argmin = mu;
    return out;
  }
  if (t == 1.0) {
    out.argmin.assign(mu.size(), 0.0);
    out.argmin[a] = 1.0;
    out.rate = -std::log(ma);
    out.tilt = std::numeric_limits<double>::infinity();
    return out;
  }
  // nu_theta(a) = ma e^theta / (ma e^theta + 1 - ma), increasing in theta
  const auto mass = [ma](double theta) { return ma / (ma + (1.0 - ma) * std::exp(-theta)); };
  double hi = 1.0;
  while (mass(hi) < t) hi *= 2.0;
  const double theta = bisect_root([&](double th) { return mass(th) - t; }, 0.0, hi, 1e-16);
  out.tilt = theta;
  out.argmin.resize(mu.size());
  const double rest = (1.0 - t) / (1.0 - ma);
  for (std::size_t i = 0; i < mu.size(); ++i) out.argmin[i] = i == a ? t : mu[i] * rest;
  out.rate = kl_divergence(out.argmin, mu);
  return out;
}

}  // namespace bcmoments
