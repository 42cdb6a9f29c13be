#pragma once

// Moment bound for sums of centered i.i.d. variables via integer partitions,
// and deviation counts of running means.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bcmoments/mdf.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rng.hpp"

namespace bcmoments {

/// All partitions of `total` whose parts are all >= min_part, parts nonincreasing.
inline std::vector<std::vector<int>> integer_partitions(int total, int min_part = 2) {
  require(total >= 0 && min_part >= 1, ErrorKind::input, "invalid partition request");
  std::vector<std::vector<int>> out;
  std::vector<int> current;
  const auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      out.push_back(current);
      return;
    }
    for (int part = std::min(remaining, max_part); part >= min_part; --part) {
      current.push_back(part);
      self(self, remaining - part, part);
      current.pop_back();
    }
  };
  rec(rec, total, total);
  return out;
}

/// k^q (2q)!/2^q sum_{pi} prod_m |E[X^{b_m}]| over partitions of 2q with parts >= 2.
/// moments[j - 2] = E[X^j] for j = 2..2q.
inline double slln_partition_bound(int q, const std::vector<double>& moments, double k) {
  require(q >= 1, ErrorKind::domain, "q must be >= 1");
  require(k >= 1.0, ErrorKind::domain, "k must be >= 1");
  require(moments.size() >= static_cast<std::size_t>(2 * q - 1), ErrorKind::input,
          "moments E[X^j] for j = 2.." + std::to_string(2 * q) + " are required (got " +
              std::to_string(moments.size()) + ")");
  double sum = 0.0;
  for (const auto& part : integer_partitions(2 * q, 2)) {
    double prod = 1.0;
    for (int b : part) prod *= std::abs(moments[static_cast<std::size_t>(b - 2)]);
    sum += prod;
  }
  const double coeff = std::tgamma(2.0 * q + 1.0) / std::ldexp(1.0, q);
  return std::pow(k, q) * coeff * sum;
}

enum class SllnSampler { rademacher, normal, uniform, zero };

inline SllnSampler parse_slln_sampler(const std::string& s) {
  if (s == "rademacher") return SllnSampler::rademacher;
  if (s == "normal") return SllnSampler::normal;
  if (s == "uniform") return SllnSampler::uniform;
  if (s == "zero") return SllnSampler::zero;
  fail(ErrorKind::input, "unknown sampler '" + s + "' (expected rademacher, normal, uniform or zero)");
}

inline std::string to_string(SllnSampler s) {
  switch (s) {
    case SllnSampler::rademacher: return "rademacher";
    case SllnSampler::normal: return "normal";
    case SllnSampler::uniform: return "uniform";
    case SllnSampler::zero: return "zero";
  }
  return "?";
}

/// E[X^j], j = 2..2q, of the unit-variance sampler (uniform on [-sqrt3, sqrt3]).
inline std::vector<double> sampler_moments(SllnSampler s, int q) {
  std::vector<double> m;
  for (int j = 2; j <= 2 * q; ++j) {
    if (j % 2 == 1) {
      m.push_back(0.0);
      continue;
    }
    switch (s) {
      case SllnSampler::rademacher: m.push_back(1.0); break;
      case SllnSampler::normal: {
        double df = 1.0;  // (j-1)!!
        for (int i = j - 1; i > 1; i -= 2) df *= i;
        m.push_back(df);
        break;
      }
      case SllnSampler::uniform: m.push_back(std::pow(3.0, j / 2.0) / (j + 1.0)); break;
      case SllnSampler::zero: m.push_back(0.0); break;
    }
  }
  return m;
}

struct SllnConfig {
  SllnSampler sampler = SllnSampler::rademacher;
  int q = 3;
  double p = 1.0;
  std::vector<double> eps{0.5};
  std::size_t n_max = 10000;
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  int k_max = 5;
};

struct SllnResult {
  MDFReport report;
  std::vector<std::vector<std::uint32_t>> counts;  // [eps][rep]
  bool tails_nonincreasing = true;
};

inline SllnResult slln_mdf_report(const SllnConfig& cfg, const ExecutionOptions& options = {}) {
  require(cfg.q >= 1, ErrorKind::domain, "q must be >= 1");
  require(cfg.p > 0.0 && cfg.p < cfg.q - 1, ErrorKind::domain,
          "SLLN MDF requires 0 < p < q - 1 (p=" + detail::format_double(cfg.p) + ", q=" + std::to_string(cfg.q) + ")");
  require(cfg.reps >= 1 && cfg.n_max >= 1, ErrorKind::input, "reps and n_max must be >= 1");
  require(!cfg.eps.empty(), ErrorKind::input, "eps grid is empty");
  for (double e : cfg.eps) require(e > 0.0, ErrorKind::domain, "eps must be > 0");

  const auto paths = parallel_generate<std::vector<std::uint32_t>>(cfg.reps, options, [&](std::size_t r) {
    StreamCursor cur(CounterStream(cfg.seed, r));
    std::vector<std::uint32_t> c(cfg.eps.size(), 0);
    double s = 0.0;
    for (std::size_t n = 1; n <= cfg.n_max; ++n) {
      switch (cfg.sampler) {
        case SllnSampler::rademacher: s += cur.uniform() < 0.5 ? -1.0 : 1.0; break;
        case SllnSampler::normal: s += cur.normal(); break;
        case SllnSampler::uniform: s += std::sqrt(3.0) * (2.0 * cur.uniform() - 1.0); break;
        case SllnSampler::zero: break;
      }
      const double mean = std::abs(s) / static_cast<double>(n);
      for (std::size_t e = 0; e < cfg.eps.size(); ++e) c[e] += mean >= cfg.eps[e];
    }
    return c;
  });

  SllnResult res;
  MDFReport& rep = res.report;
  rep.application = "slln";
  rep.reps = cfg.reps;
  rep.seed = cfg.seed;
  rep.parameters = json{{"sampler", to_string(cfg.sampler)}, {"q", cfg.q}, {"p", cfg.p}, {"eps", cfg.eps},
                        {"n_max", cfg.n_max}};
  for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
    std::vector<std::uint32_t> counts(cfg.reps);
    for (std::size_t r = 0; r < cfg.reps; ++r) counts[r] = paths[r][e];
    MDFRow row;
    row.epsilon = cfg.eps[e];
    row.empirical = empirical_moment(counts, Functional::power(cfg.p));
    row.order = row.empirical.functional;
    row.theoretical_formula = "finite (constant not computed)";
    rep.rows.push_back(std::move(row));
    const std::size_t first_tail = rep.rows.size();
    add_tail_rows(rep, cfg.eps[e], counts, cfg.k_max);
    for (std::size_t i = first_tail + 1; i < rep.rows.size(); ++i) {
      if (rep.rows[i].empirical.estimate > rep.rows[i - 1].empirical.estimate) res.tails_nonincreasing = false;
    }
    res.counts.push_back(std::move(counts));
  }
  rep.extras["tails_nonincreasing"] = res.tails_nonincreasing;
  return res;
}

}  // namespace bcmoments
