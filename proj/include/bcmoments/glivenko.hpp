#pragma once

// Glivenko–Cantelli deviation counts: O_eps = #{n <= n_max : D_n >= eps} for
// the Kolmogorov distance D_n = sup_x |F_n(x) - F(x)| of an i.i.d. sample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bcmoments/mdf.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rng.hpp"

namespace bcmoments {

struct ContinuousDistribution {
  std::string name;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
};

inline ContinuousDistribution uniform01() {
  return {"uniform", [](double x) { return std::clamp(x, 0.0, 1.0); }, [](double u) { return u; }};
}

inline ContinuousDistribution exponential_distribution(double rate = 1.0) {
  require(rate > 0.0, ErrorKind::domain, "exponential rate must be > 0");
  return {"exponential:" + detail::format_double(rate),
          [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); },
          [rate](double u) { return -std::log1p(-u) / rate; }};
}

inline ContinuousDistribution parse_distribution(const std::string& text) {
  if (text == "uniform") return uniform01();
  if (text == "exponential") return exponential_distribution();
  if (text.rfind("exponential:", 0) == 0) return exponential_distribution(std::stod(text.substr(12)));
  fail(ErrorKind::input, "unknown distribution '" + text + "' (expected uniform or exponential[:rate])");
}

/// D_n from sorted values u_(1) <= ... <= u_(n) of F(X_i).
inline double kolmogorov_distance(const std::vector<double>& sorted_u) {
  const double n = static_cast<double>(sorted_u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_u.size(); ++i) {
    const double u = sorted_u[i];
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

/// Number of quantile cells M = ceil(1/eps) in the DKW-style per-n bound.
inline double quantile_cells(double eps) { return std::ceil(1.0 / eps); }

/// Per-n bound P(D_n >= eps) <= M * 2 exp(-2 n eps^2).
inline double gc_cell_bound(double n, double eps) { return quantile_cells(eps) * hoeffding_bound(n, eps); }

/// 1 + 2M / ((1 - e^{-2eps^2})(1 - e^{-2(eps^2 - eta^2)})), an upper bound on
/// E[exp(2 eta^2 O_eps)] from the per-n cell bound and the general moment bound.
inline double gc_chain_constant(double eps, double eta) {
  require(eps > 0.0 && eps <= 1.0, ErrorKind::domain, "eps must lie in (0,1]");
  require(eta >= 0.0 && eta < eps, ErrorKind::domain, "Glivenko-Cantelli bound needs 0 <= eta < eps");
  const double a = -std::expm1(-2.0 * eps * eps);
  const double b = -std::expm1(-2.0 * (eps * eps - eta * eta));
  return 1.0 + 2.0 * quantile_cells(eps) / (a * b);
}

struct GcConfig {
  ContinuousDistribution dist = uniform01();
  std::vector<double> eps{0.2};
  double eta = 0.1;
  std::size_t n_max = 2000;
  std::vector<std::size_t> tested_n{10, 20, 50, 100, 200, 500, 1000, 2000};
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
  int k_max = 5;
};

struct GcResult {
  MDFReport report;
  std::vector<std::vector<std::uint32_t>> counts;      // [eps][rep]
  std::vector<std::vector<double>> exceedance;         // [eps][tested n] empirical P(D_n >= eps)
  std::vector<std::vector<double>> exceedance_bound;   // [eps][tested n]
  std::vector<std::size_t> tested_n;
};

namespace detail {

struct GcPath {
  std::vector<std::uint32_t> counts;  // per eps
  std::vector<std::uint8_t> hits;     // [eps * tested + t]
};

/// One replication. D_n is evaluated exactly only when the running upper
/// bound U_n = ((n-1) U_{n-1} + 1)/n reaches the smallest eps or n is tested;
/// otherwise D_n <= U_n < eps already settles every comparison.
inline GcPath gc_path(const GcConfig& cfg, double eps_min, const CounterStream& stream) {
  const std::size_t ne = cfg.eps.size();
  const std::size_t nt = cfg.tested_n.size();
  GcPath out{std::vector<std::uint32_t>(ne, 0), std::vector<std::uint8_t>(ne * nt, 0)};
  std::vector<double> sorted;
  sorted.reserve(cfg.n_max);
  std::size_t merged = 0;
  std::size_t next_test = 0;
  double bound = 1.0;
  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    const double x = cfg.dist.quantile(stream.uniform(n));
    sorted.push_back(cfg.dist.cdf(x));
    bound = n == 1 ? 1.0 : std::min(1.0, (static_cast<double>(n - 1) * bound + 1.0) / static_cast<double>(n));
    const bool tested = next_test < nt && cfg.tested_n[next_test] == n;
    if (bound < eps_min - 1e-12 && !tested) continue;
    std::sort(sorted.begin() + static_cast<std::ptrdiff_t>(merged), sorted.end());
    std::inplace_merge(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(merged), sorted.end());
    merged = sorted.size();
    const double d = kolmogorov_distance(sorted);
    bound = d;
    for (std::size_t e = 0; e < ne; ++e) {
      if (d >= cfg.eps[e]) {
        ++out.counts[e];
        if (tested) out.hits[e * nt + next_test] = 1;
      }
    }
    if (tested) ++next_test;
  }
  return out;
}

}  // namespace detail

inline GcResult gc_simulate(GcConfig cfg, const ExecutionOptions& options = {}) {
  require(!cfg.eps.empty(), ErrorKind::input, "eps grid is empty");
  require(cfg.reps >= 1, ErrorKind::input, "reps must be >= 1");
  require(cfg.n_max >= 1, ErrorKind::input, "n_max must be >= 1");
  for (double e : cfg.eps) {
    require(e > 0.0 && e <= 1.0, ErrorKind::domain, "eps must lie in (0,1]");
    require(cfg.eta < e, ErrorKind::domain, "eta must be < eps (eta=" + detail::format_double(cfg.eta) +
                                                ", eps=" + detail::format_double(e) + ")");
  }
  std::sort(cfg.tested_n.begin(), cfg.tested_n.end());
  cfg.tested_n.erase(std::unique(cfg.tested_n.begin(), cfg.tested_n.end()), cfg.tested_n.end());
  std::erase_if(cfg.tested_n, [&](std::size_t n) { return n == 0 || n > cfg.n_max; });
  const double eps_min = *std::min_element(cfg.eps.begin(), cfg.eps.end());

  const auto paths = parallel_generate<detail::GcPath>(cfg.reps, options, [&](std::size_t rep) {
    return detail::gc_path(cfg, eps_min, CounterStream(cfg.seed, rep));
  });

  GcResult res;
  res.tested_n = cfg.tested_n;
  MDFReport& rep = res.report;
  rep.application = "gc";
  rep.reps = cfg.reps;
  rep.seed = cfg.seed;
  rep.parameters = json{{"distribution", cfg.dist.name}, {"eps", cfg.eps},     {"eta", cfg.eta},
                        {"n_max", cfg.n_max},            {"tested_n", cfg.tested_n}};
  const std::size_t nt = cfg.tested_n.size();
  json per_n = json::array();
  for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
    const double eps = cfg.eps[e];
    const double chain = gc_chain_constant(eps, cfg.eta);
    std::vector<std::uint32_t> counts(cfg.reps);
    std::vector<double> hit_rate(nt, 0.0);
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      counts[r] = paths[r].counts[e];
      for (std::size_t t = 0; t < nt; ++t) hit_rate[t] += paths[r].hits[e * nt + t];
    }
    std::vector<double> bounds(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      hit_rate[t] /= static_cast<double>(cfg.reps);
      bounds[t] = gc_cell_bound(static_cast<double>(cfg.tested_n[t]), eps);
      per_n.push_back({{"epsilon", eps}, {"n", cfg.tested_n[t]}, {"empirical", hit_rate[t]}, {"bound", bounds[t]}});
    }

    MDFRow mgf;
    mgf.epsilon = eps;
    mgf.empirical = empirical_moment(counts, Functional::exp(2.0 * cfg.eta * cfg.eta));
    mgf.order = "E[exp(2 eta^2 O)] eta=" + detail::format_double(cfg.eta);
    mgf.theoretical = chain;
    mgf.theoretical_formula = "1 + 2M/((1-exp(-2eps^2))(1-exp(-2(eps^2-eta^2)))), M = ceil(1/eps)";
    rep.rows.push_back(std::move(mgf));
    add_tail_rows(rep, eps, counts, cfg.k_max,
                  [&](int k) -> std::optional<double> { return chain * std::exp(-2.0 * cfg.eta * cfg.eta * k); });

    res.counts.push_back(std::move(counts));
    res.exceedance.push_back(std::move(hit_rate));
    res.exceedance_bound.push_back(std::move(bounds));
  }
  rep.extras["per_n"] = per_n;
  // mass of the events beyond the simulated horizon
  json beyond = json::array();
  for (double eps : cfg.eps) {
    const double n1 = static_cast<double>(cfg.n_max + 1);
    beyond.push_back(gc_cell_bound(n1, eps) / -std::expm1(-2.0 * eps * eps));
  }
  rep.extras["tail_beyond_n_max"] = beyond;
  return res;
}

}  // namespace bcmoments
