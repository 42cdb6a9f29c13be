#pragma once

// Longest segments of a Bernoulli walk whose empirical mean is at least t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bcmoments/mdf.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rates.hpp"
#include "bcmoments/rng.hpp"

namespace bcmoments {

inline constexpr double kSegmentTolerance = 1e-9;

/// R_n for n = 1..size: longest (k, l] with l <= n and mean of x_{k+1..l} >= t.
/// Uses T_j = S_j - t j: the segment qualifies iff T_k <= T_l. For each l the
/// smallest such k is found by binary search on the prefix minima of T.
inline std::vector<std::uint32_t> longest_segments(const std::vector<std::uint8_t>& x, double t) {
  std::vector<std::uint32_t> r(x.size(), 0);
  std::vector<double> prefix_min{0.0};
  prefix_min.reserve(x.size() + 1);
  double s = 0.0;
  std::uint32_t best = 0;
  for (std::size_t l = 1; l <= x.size(); ++l) {
    s += x[l - 1];
    const double tl = s - t * static_cast<double>(l);
    prefix_min.push_back(std::min(prefix_min.back(), tl));
    // prefix minima are nonincreasing: first index with value <= tl + tol
    const auto it = std::partition_point(prefix_min.begin(), prefix_min.end(),
                                         [&](double v) { return v > tl + kSegmentTolerance; });
    const auto k = static_cast<std::size_t>(it - prefix_min.begin());
    best = std::max(best, static_cast<std::uint32_t>(l - k));
    r[l - 1] = best;
  }
  return r;
}

/// Quadratic-time reference for longest_segments.
inline std::vector<std::uint32_t> longest_segments_reference(const std::vector<std::uint8_t>& x, double t) {
  std::vector<double> s(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) s[i + 1] = s[i] + x[i];
  std::vector<std::uint32_t> r(x.size(), 0);
  std::uint32_t best = 0;
  for (std::size_t l = 1; l <= x.size(); ++l) {
    for (std::size_t k = 0; k < l; ++k) {
      const double len = static_cast<double>(l - k);
      if ((s[l] - s[k]) - t * len >= -kSegmentTolerance) {
        best = std::max(best, static_cast<std::uint32_t>(l - k));
        break;
      }
    }
    r[l - 1] = best;
  }
  return r;
}

/// tau_r = first n with R_n >= r, for r = 1..R_max (index r-1).
inline std::vector<std::uint32_t> first_occurrence_times(const std::vector<std::uint32_t>& r) {
  std::vector<std::uint32_t> tau;
  for (std::size_t n = 1; n <= r.size(); ++n) {
    while (tau.size() < r[n - 1]) tau.push_back(static_cast<std::uint32_t>(n));
  }
  return tau;
}

struct SegmentsConfig {
  double p_head = 0.5;
  double threshold = 1.0;
  std::vector<double> eps{0.1};
  std::size_t n_max = 100000;
  std::size_t reps = 200;
  std::uint64_t seed = 1;
};

struct SegmentsResult {
  MDFReport report;
  double rate = 0.0;  // J(B) = KL(t || p)
  std::vector<double> normalized;  // R_{n_max} / ln n_max per rep
};

inline SegmentsResult rare_segments(const SegmentsConfig& cfg, const ExecutionOptions& options = {}) {
  require(cfg.p_head > 0.0 && cfg.p_head < 1.0, ErrorKind::domain, "p_head must lie in (0,1)");
  require(cfg.threshold > cfg.p_head, ErrorKind::domain,
          "threshold must exceed the mean p_head, otherwise the rate J(B) is zero");
  require(cfg.threshold <= 1.0, ErrorKind::domain, "threshold must be <= 1");
  require(cfg.n_max >= 2 && cfg.reps >= 1, ErrorKind::input, "need n_max >= 2 and reps >= 1");
  const double rate = bernoulli_kl(cfg.threshold, cfg.p_head);
  for (double e : cfg.eps) require(e > 0.0 && e < rate, ErrorKind::domain, "eps must lie in (0, J(B))");

  struct Path {
    std::vector<std::uint32_t> plus, minus, tau_plus, tau_minus;
    double normalized = 0.0;
  };
  const std::size_t ne = cfg.eps.size();
  const auto paths = parallel_generate<Path>(cfg.reps, options, [&](std::size_t rep) {
    const CounterStream stream(cfg.seed, rep);
    std::vector<std::uint8_t> x(cfg.n_max);
    for (std::size_t i = 0; i < cfg.n_max; ++i) x[i] = stream.uniform(i + 1) < cfg.p_head;
    const auto r = longest_segments(x, cfg.threshold);
    const auto tau = first_occurrence_times(r);
    Path out{std::vector<std::uint32_t>(ne), std::vector<std::uint32_t>(ne), std::vector<std::uint32_t>(ne),
             std::vector<std::uint32_t>(ne)};
    for (std::size_t e = 0; e < ne; ++e) {
      const double hi = 1.0 / (rate - cfg.eps[e]);
      const double lo = 1.0 / (rate + cfg.eps[e]);
      for (std::size_t n = 2; n <= cfg.n_max; ++n) {
        const double v = r[n - 1] / std::log(static_cast<double>(n));
        out.plus[e] += v >= hi;
        out.minus[e] += v <= lo;
      }
      for (std::size_t k = 1; k <= tau.size(); ++k) {
        const double v = std::log(static_cast<double>(tau[k - 1])) / static_cast<double>(k);
        out.tau_plus[e] += v >= rate + cfg.eps[e];
        out.tau_minus[e] += v <= rate - cfg.eps[e];
      }
    }
    out.normalized = r.back() / std::log(static_cast<double>(cfg.n_max));
    return out;
  });

  SegmentsResult res;
  res.rate = rate;
  MDFReport& rep = res.report;
  rep.application = "segments";
  rep.reps = cfg.reps;
  rep.seed = cfg.seed;
  rep.parameters = json{{"p_head", cfg.p_head}, {"threshold", cfg.threshold}, {"eps", cfg.eps}, {"n_max", cfg.n_max}};
  rep.extras["rate"] = rate;

  for (const auto& p : paths) res.normalized.push_back(p.normalized);
  MDFRow limit;
  limit.epsilon = 0.0;
  limit.empirical = mean_with_stderr(res.normalized, "R_n/ln n at n_max");
  limit.order = limit.empirical.functional;
  limit.theoretical = 1.0 / rate;
  limit.theoretical_formula = "1/J(B) (almost sure limit)";
  limit.is_bound = false;
  rep.rows.push_back(std::move(limit));

  for (std::size_t e = 0; e < ne; ++e) {
    const std::pair<const char*, std::vector<std::uint32_t> Path::*> kinds[] = {
        {"O+", &Path::plus}, {"O-", &Path::minus}, {"U+", &Path::tau_plus}, {"U-", &Path::tau_minus}};
    for (const auto& [name, member] : kinds) {
      std::vector<std::uint32_t> c(cfg.reps);
      for (std::size_t i = 0; i < cfg.reps; ++i) c[i] = (paths[i].*member)[e];
      MDFRow row;
      row.epsilon = cfg.eps[e];
      row.empirical = empirical_moment(c, Functional::power(1.0));
      row.order = std::string("E[") + name + "]";
      row.empirical.functional = row.order;
      row.theoretical_formula = "finite (constant not computed)";
      rep.rows.push_back(std::move(row));
    }
  }
  return res;
}

}  // namespace bcmoments
