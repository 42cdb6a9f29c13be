#pragma once

// Exceedances of Brownian motion over the inflated iterated-logarithm envelope
// on the geometric grid t_n = alpha^n, with interval maxima sampled exactly.

#include <cmath>
#include <cstdint>
#include <vector>

#include "bcmoments/mdf.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rng.hpp"

namespace bcmoments {

/// P(max_{[s,t]} W >= m | W_s = a, W_t = b) for a bridge over dt = t - s.
inline double bridge_crossing_probability(double a, double b, double dt, double m) {
  require(dt > 0.0, ErrorKind::domain, "bridge length must be > 0");
  if (m <= std::max(a, b)) return 1.0;
  return std::exp(-2.0 * (m - a) * (m - b) / dt);
}

/// Inverse transform of the bridge maximum: solves crossing probability = u.
inline double bridge_max(double a, double b, double dt, double u) {
  require(dt > 0.0, ErrorKind::domain, "bridge length must be > 0");
  return 0.5 * (a + b + std::sqrt((b - a) * (b - a) - 2.0 * dt * std::log(u)));
}

/// First n >= 1 with alpha^n > e.
inline int lil_first_index(double alpha) {
  require(alpha > 1.0, ErrorKind::domain, "LIL needs alpha > 1");
  return std::max(1, static_cast<int>(std::floor(1.0 / std::log(alpha))) + 1);
}

/// sqrt(alpha) sqrt(2 t ln ln t) at t = alpha^n.
inline double lil_threshold(double alpha, int n) {
  const double t = std::pow(alpha, n);
  return std::sqrt(alpha) * std::sqrt(2.0 * t * std::log(std::log(t)));
}

/// Reflection bound P(E_n) <= P(sup_{t <= alpha^{n+1}} W_t > threshold) = erfc(sqrt(ln ln alpha^n)).
inline double lil_event_bound(double alpha, int n) {
  return std::erfc(std::sqrt(std::log(n * std::log(alpha))));
}

struct LilConfig {
  double alpha = 2.0;
  int n_max = 40;
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  int k_max = 3;
};

struct LilResult {
  MDFReport report;
  std::vector<std::uint32_t> counts;
  int first_index = 1;
};

inline std::uint32_t lil_path(const LilConfig& cfg, int n0, const CounterStream& stream) {
  StreamCursor cur(stream);
  double t = std::pow(cfg.alpha, n0);
  double w = std::sqrt(t) * cur.normal();
  std::uint32_t count = 0;
  for (int n = n0; n <= cfg.n_max; ++n) {
    const double t_next = t * cfg.alpha;
    const double dt = t_next - t;
    const double w_next = w + std::sqrt(dt) * cur.normal();
    const double m = bridge_max(w, w_next, dt, cur.uniform());
    count += m > lil_threshold(cfg.alpha, n);
    t = t_next;
    w = w_next;
  }
  return count;
}

inline LilResult lil_simulate(const LilConfig& cfg, const ExecutionOptions& options = {}) {
  const int n0 = lil_first_index(cfg.alpha);
  require(cfg.reps >= 1, ErrorKind::input, "reps must be >= 1");
  require(cfg.n_max >= n0, ErrorKind::domain,
          "n_max must be >= the first index with alpha^n > e (" + std::to_string(n0) + ")");
  LilResult res;
  res.first_index = n0;
  res.counts = parallel_generate<std::uint32_t>(
      cfg.reps, options, [&](std::size_t r) { return lil_path(cfg, n0, CounterStream(cfg.seed, r)); });

  MDFReport& rep = res.report;
  rep.application = "lil";
  rep.reps = cfg.reps;
  rep.seed = cfg.seed;
  rep.parameters = json{{"alpha", cfg.alpha}, {"n_max", cfg.n_max}, {"first_index", n0}};
  double first_order = 0.0;
  for (int n = n0; n <= cfg.n_max; ++n) first_order += lil_event_bound(cfg.alpha, n);

  MDFRow mean;
  mean.epsilon = cfg.alpha;
  mean.empirical = empirical_moment(res.counts, Functional::power(1.0));
  mean.order = mean.empirical.functional;
  mean.theoretical = first_order;
  mean.theoretical_formula = "sum_n erfc(sqrt(ln ln alpha^n)) over the simulated indices";
  rep.rows.push_back(std::move(mean));

  if (cfg.alpha > 2.0) {
    MDFRow higher;
    higher.epsilon = cfg.alpha;
    higher.empirical = empirical_moment(res.counts, Functional::power(cfg.alpha - 1.0));
    higher.order = higher.empirical.functional;
    higher.theoretical_formula = "finite (constant not computed)";
    rep.rows.push_back(std::move(higher));
  }

  add_tail_rows(rep, cfg.alpha, res.counts, cfg.k_max,
                [&](int k) -> std::optional<double> { return first_order / k; });
  return res;
}

}  // namespace bcmoments
