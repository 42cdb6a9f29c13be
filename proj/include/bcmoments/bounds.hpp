#pragma once

// Moment and tail bounds for the overlap count O = sum_{n>=1} 1{E_n}, and the
// exact distribution of O for finitely many independent events.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcmoments/decay.hpp"
#include "bcmoments/error.hpp"
#include "bcmoments/optimize.hpp"
#include "bcmoments/special.hpp"

namespace bcmoments {

struct BoundResult {
  double value = 0.0;
  bool infinite = false;
  std::string formula_id;
  std::string validity;
  json inputs = json::object();
  std::optional<double> minimizer;
  json extras = json::object();

  json to_json() const {
    json j{{"formula", formula_id}, {"validity", validity}, {"inputs", inputs}};
    if (infinite) j["value"] = "inf";
    else j["value"] = value;
    if (minimizer) j["minimizer"] = *minimizer;
    if (!extras.empty()) j["extras"] = extras;
    return j;
  }
};

struct BoundOptions {
  bool allow_divergent = false;  // return an infinite result instead of raising
};

/// A tail bound computed both from its closed form and by direct numeric
/// minimization over the free parameter.
struct TailBound {
  double value = 0.0;    // closed form
  double numeric = 0.0;  // numeric infimum
  double minimizer = 0.0;
};

namespace detail {

template <typename Compute>
BoundResult guard_divergence(const BoundOptions& options, BoundResult base, Compute&& compute) {
  try {
    return compute(std::move(base));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::divergence || !options.allow_divergent) throw;
    base.value = std::numeric_limits<double>::infinity();
    base.infinite = true;
    base.extras["divergence"] = e.what();
    return base;
  }
}

inline json series_json(const SeriesValue& s) {
  return json{{"value", s.value}, {"truncation_error", s.truncation_error}, {"terms_used", s.terms_used}, {"converged", s.converged}};
}

// Smallest index M >= 1 with decay_term(n) <= 1 for all n >= M.
inline std::size_t clamp_free_index(const DecayModel& model) {
  if (const auto* pl = model.get_if<DecayModel::PowerLaw>()) {
    return static_cast<std::size_t>(std::max(1.0, std::ceil(std::pow(pl->c, 1.0 / pl->q))));
  }
  if (const auto* g = model.get_if<DecayModel::Geometric>()) {
    if (g->c <= 1.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(g->c) / -std::log(g->b)));
  }
  return 1;
}

// Right end of an expanding bracket [0, R] with f'(R) > 0 for a convex f.
template <typename Derivative>
double expand_bracket(Derivative&& df, double start = 1.0) {
  double hi = start;
  for (int i = 0; i < 200 && !(df(hi) > 0.0); ++i) hi *= 2.0;
  return hi;
}

}  // namespace detail

/// E[S(O)] = a_0 + sum_{n>=1} a_n P(E_n) for a nested family (E_1 ⊇ E_2 ⊇ ...).
inline BoundResult nested_moment_identity(const WeightSequence& weights, const DecayModel& model,
                                          const BoundOptions& options = {}) {
  BoundResult base;
  base.formula_id = "prop2.1";
  base.validity = "equality for nested families E_1 ⊇ E_2 ⊇ ...; requires sum a_n P(E_n) < inf";
  base.inputs = json{{"weights", weights.describe()}, {"model", model.describe()}};
  return detail::guard_divergence(options, std::move(base), [&](BoundResult r) {
    const std::size_t start = weights.start_index();
    const double a0 = start == 0 ? weights(0) : 0.0;
    const std::size_t first = std::max<std::size_t>(start, 1);
    SeriesValue s;
    const auto* custom_w = std::get_if<WeightSequence::Custom>(&weights.variant());
    std::optional<std::size_t> last;
    if (const auto* e = model.get_if<DecayModel::Explicit>()) last = e->probabilities.size();
    if (custom_w && custom_w->last_nonzero) last = last ? std::min(*last, *custom_w->last_nonzero) : *custom_w->last_nonzero;

    if (last) {
      long double acc = 0.0L;
      for (std::size_t n = first; n <= *last; ++n) acc += static_cast<long double>(weights(n)) * eval_decay(model, n);
      s.value = static_cast<double>(acc);
      s.terms_used = *last >= first ? *last - first + 1 : 0;
    } else if (const auto* g = model.get_if<DecayModel::Geometric>()) {
      const std::size_t m = std::max(first, detail::clamp_free_index(model));
      long double head = 0.0L;
      for (std::size_t n = first; n < m; ++n) head += static_cast<long double>(weights(n)) * eval_decay(model, n);
      SeriesValue tail;
      if (const auto* ew = std::get_if<WeightSequence::Exponential>(&weights.variant())) {
        const double rho = std::exp(ew->rate) * g->b;
        require(rho < 1.0, ErrorKind::divergence, "nested identity with exponential weights needs p < |ln b|");
        tail = detail::ratio_bounded_sum(m, [&](std::size_t n) { return weights(n) * decay_term(model, n); },
                                         [rho](std::size_t) { return rho; });
      } else if (const auto* mw = std::get_if<WeightSequence::Monomial>(&weights.variant())) {
        const double p = mw->p;
        const double b = g->b;
        tail = detail::ratio_bounded_sum(m, [&](std::size_t n) { return weights(n) * decay_term(model, n); },
                                         [p, b](std::size_t n) { return std::pow(1.0 + 1.0 / static_cast<double>(n), p) * b; });
      } else {
        tail = detail::uncertified_sum(m, [&](std::size_t n) { return weights(n) * decay_term(model, n); });
      }
      s.value = static_cast<double>(head) + tail.value;
      s.truncation_error = tail.truncation_error;
      s.terms_used = (m - first) + tail.terms_used;
      s.converged = tail.converged;
    } else if (const auto* pl = model.get_if<DecayModel::PowerLaw>()) {
      const auto* mw = std::get_if<WeightSequence::Monomial>(&weights.variant());
      require(mw != nullptr, ErrorKind::divergence, "nested identity over a power law needs monomial weights");
      require(mw->p < pl->q - 1.0, ErrorKind::divergence, "nested identity over a power law requires p < q - 1");
      const std::size_t m = std::max(first, detail::clamp_free_index(model));
      long double head = 0.0L;
      for (std::size_t n = first; n < m; ++n) head += static_cast<long double>(weights(n)) * eval_decay(model, n);
      const SeriesValue tail = hurwitz_tail(pl->q - mw->p, m);
      s.value = static_cast<double>(head) + pl->c * tail.value;
      s.truncation_error = pl->c * tail.truncation_error;
      s.terms_used = (m - first) + tail.terms_used;
    } else {
      s = detail::uncertified_sum(first, [&](std::size_t n) { return weights(n) * eval_decay(model, n); });
    }
    r.value = a0 + s.value;
    r.extras["series"] = detail::series_json(s);
    return r;
  });
}

/// Upper bound a_0 + sum_{n>=1} a_n C_n on E[S(O)], valid for any dependence.
inline BoundResult general_moment_bound(const WeightSequence& weights, const DecayModel& model,
                                        const BoundOptions& options = {}) {
  BoundResult base;
  base.formula_id = "thm2.2";
  base.validity = "arbitrary events; bounds E[S(O)] with S(N) = sum_{n<=N} a_n";
  base.inputs = json{{"weights", weights.describe()}, {"model", model.describe()}};
  return detail::guard_divergence(options, std::move(base), [&](BoundResult r) {
    const WeightedTailSeries w = weighted_tail_series(weights, model);
    double value = w.series.value;
    if (weights.start_index() == 0) {
      const double a0 = weights(0);
      value += a0 * (1.0 - tail_sum(model, 0).value);
    }
    r.value = value;
    r.extras["series"] = detail::series_json(w.series);
    return r;
  });
}

/// E[O^{p+1}] <= (p+1) K1(p), K1(p) = sum_{n>=1} n^p C_n.
inline BoundResult poly_moment_bound(double p, const DecayModel& model, const BoundOptions& options = {}) {
  require(p > 0.0, ErrorKind::domain, "polynomial moment order p must be > 0");
  BoundResult base;
  base.formula_id = "cor2.3.poly";
  base.validity = "bounds E[O^{p+1}] for arbitrary events";
  base.inputs = json{{"p", p}, {"model", model.describe()}};
  return detail::guard_divergence(options, std::move(base), [&](BoundResult r) {
    const WeightedTailSeries k1 = weighted_tail_series(WeightSequence::monomial(p), model);
    r.value = (p + 1.0) * k1.series.value;
    r.extras["K1"] = k1.series.value;
    r.extras["series"] = detail::series_json(k1.series);
    if (k1.closed_form) r.extras["closed_bound"] = (p + 1.0) * *k1.closed_form;
    if (const auto* pl = model.get_if<DecayModel::PowerLaw>()) {
      r.extras["zeta_estimate"] = pl->c * zeta(pl->q - 1.0 - p).value;
    }
    return r;
  });
}

/// E[e^{pO}] <= K2(p) + 1, K2(p) = sum_{n>=0} e^{pn} C_n.
inline BoundResult exp_moment_bound(double p, const DecayModel& model, const BoundOptions& options = {}) {
  require(p > 0.0, ErrorKind::domain, "exponential moment rate p must be > 0");
  BoundResult base;
  base.formula_id = "cor2.3.exp";
  base.validity = "bounds E[e^{pO}] for arbitrary events";
  base.inputs = json{{"p", p}, {"model", model.describe()}};
  return detail::guard_divergence(options, std::move(base), [&](BoundResult r) {
    const WeightedTailSeries k2 = weighted_tail_series(WeightSequence::exponential(p), model);
    r.value = k2.series.value + 1.0;
    r.extras["K2"] = k2.series.value;
    r.extras["series"] = detail::series_json(k2.series);
    if (k2.closed_form) r.extras["closed_bound"] = *k2.closed_form + 1.0;
    return r;
  });
}

/// E[e^{rO}] <= exp(C1 (e^r - 1)) for independent events with sum P(E_n) = C1.
inline BoundResult freedman_exp_bound(double r, double c1) {
  require(r > 0.0, ErrorKind::domain, "Freedman bound requires r > 0");
  require(c1 > 0.0, ErrorKind::domain, "Freedman bound requires C1 > 0");
  BoundResult out;
  out.formula_id = "thm2.7";
  out.validity = "independent events, sum P(E_n) = C1";
  out.inputs = json{{"r", r}, {"C1", c1}};
  out.value = std::exp(c1 * std::expm1(r));
  return out;
}

/// P(O >= k) <= inf_{r>0} exp(-kr + C1(e^r - 1)). The closed form uses
/// r* = ln(k/C1); for k <= C1 the infimum over r > 0 is the r -> 0 limit 1.
inline TailBound freedman_tail_bound(double k, double c1) {
  require(k >= 1.0, ErrorKind::domain, "tail level k must be >= 1");
  require(c1 > 0.0, ErrorKind::domain, "Freedman tail requires C1 > 0");
  TailBound out;
  const auto exponent = [k, c1](double r) { return -k * r + c1 * std::expm1(r); };
  if (k <= c1) {
    out.value = 1.0;
    out.minimizer = 0.0;
  } else {
    out.minimizer = std::log(k / c1);
    out.value = std::exp(-k * std::log(k) + k * (std::log(c1) + 1.0) - c1);
  }
  const double hi = detail::expand_bracket([k, c1](double r) { return -k + c1 * std::exp(r); });
  const Minimum m = golden_section_minimize(exponent, 0.0, hi, 1e-14);
  out.numeric = std::exp(std::min(m.value, 0.0));
  return out;
}

/// E[O^2] <= C1 (1 + C1) for independent events.
inline double second_moment_bound(double c1) {
  require(c1 >= 0.0, ErrorKind::domain, "C1 must be >= 0");
  return c1 * (1.0 + c1);
}

/// E[e^{rO}] <= 1 / (1 - C1 e^r) for independent events, C1 < 1, r < |ln C1|.
inline BoundResult improved_exp_bound(double r, double c1) {
  require(c1 > 0.0 && c1 < 1.0, ErrorKind::domain, "improved exponential bound requires 0 < C1 < 1");
  require(r > 0.0, ErrorKind::domain, "improved exponential bound requires r > 0");
  require(r < -std::log(c1), ErrorKind::domain,
          "improved exponential bound requires r < |ln C1| (r=" + detail::format_double(r) +
              ", |ln C1|=" + detail::format_double(-std::log(c1)) + ")");
  BoundResult out;
  out.formula_id = "thm2.9";
  out.validity = "independent events, 0 < C1 < 1, 0 < r < |ln C1|";
  out.inputs = json{{"r", r}, {"C1", c1}};
  out.value = 1.0 / (1.0 - c1 * std::exp(r));
  return out;
}

/// delta/(delta-1) * exp(r * max(0, L^{-1}(e^{-r}/delta))).
inline double rate_aware_objective(double r, const TailFunction& tail, double delta) {
  const double m = std::max(0.0, tail.inv(std::exp(-r) / delta));
  return delta / (delta - 1.0) * std::exp(r * m);
}

/// inf_{delta>1} of rate_aware_objective, searched over ln(delta) in (0, 50].
inline BoundResult rate_aware_exp_bound(double r, const TailFunction& tail) {
  require(r > 0.0, ErrorKind::domain, "rate-aware bound requires r > 0");
  BoundResult out;
  out.formula_id = "cor2.10";
  out.validity = "independent events with C_m <= L(m), L nonincreasing and invertible";
  out.inputs = json{{"r", r}, {"tail", tail.description}};
  const auto log_objective = [&](double u) {
    const double delta = std::exp(u);
    const double m = std::max(0.0, tail.inv(std::exp(-r) / delta));
    return -std::log(-std::expm1(-u)) + r * m;
  };
  const Minimum best = grid_then_golden(log_objective, 1e-8, 50.0, 400, 1e-12);
  require(std::isfinite(best.value), ErrorKind::divergence, "rate-aware infimum is unbounded");
  out.value = std::exp(best.value);
  out.minimizer = std::exp(best.argmin);
  out.extras["at_delta_2"] = rate_aware_objective(r, tail, 2.0);
  return out;
}

/// N_r(delta) = inf{m >= 1 : C_m < e^{-r}/delta}.
inline std::size_t threshold_index(const DecayModel& model, double r, double delta) {
  require(delta > 1.0, ErrorKind::domain, "delta must exceed 1");
  const double level = std::exp(-r) / delta;
  if (const auto* g = model.get_if<DecayModel::Geometric>()) {
    // c b^m / (1-b) < level
    const double m = std::log(level * (1.0 - g->b) / g->c) / std::log(g->b);
    std::size_t n = static_cast<std::size_t>(std::max(1.0, std::floor(m)));
    while (n > 1 && tail_sum(model, n - 1).value < level) --n;
    while (!(tail_sum(model, n).value < level)) ++n;
    return n;
  }
  require(is_summable(model), ErrorKind::divergence, "threshold index needs a summable model");
  std::size_t n = 1;
  while (!(tail_sum(model, n).value < level)) {
    n = n < 64 ? n + 1 : n + n / 8;
    require(n < (std::size_t{1} << 40), ErrorKind::numeric, "threshold index search exceeded range");
  }
  // step back to the first index below the level
  std::size_t lo = 1;
  std::size_t hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (tail_sum(model, mid).value < level) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

/// Integer form inf_{delta>1} delta/(delta-1) e^{r N_r(delta)}. For each
/// candidate N the admissible deltas are 1 < delta < e^{-r}/C_N, so the
/// infimum is min_N D_N/(D_N-1) e^{rN} with D_N = e^{-r}/C_N > 1.
inline BoundResult rate_aware_exp_bound(double r, const DecayModel& model) {
  require(r > 0.0, ErrorKind::domain, "rate-aware bound requires r > 0");
  require(is_summable(model), ErrorKind::divergence, "rate-aware bound needs a summable model");
  BoundResult out;
  out.formula_id = "cor2.10";
  out.validity = "independent events; integer threshold N_r(delta) = inf{m : C_m < e^{-r}/delta}";
  out.inputs = json{{"r", r}, {"model", model.describe()}};
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_n = 0;
  double best_delta = 0.0;
  for (std::size_t n = 1; n < 1'000'000; ++n) {
    const double growth = std::exp(r * static_cast<double>(n));
    if (growth >= best) break;
    const double cn = tail_sum(model, n).value;
    const double d = cn > 0.0 ? std::exp(-r) / cn : std::numeric_limits<double>::infinity();
    if (!(d > 1.0)) continue;
    const double value = std::isinf(d) ? growth : d / (d - 1.0) * growth;
    if (value < best) {
      best = value;
      best_n = n;
      best_delta = d;
    }
  }
  require(std::isfinite(best), ErrorKind::divergence, "rate-aware infimum is unbounded");
  out.value = best;
  out.minimizer = best_delta;
  out.extras["N"] = best_n;
  return out;
}

/// P(O >= k) <= 2 inf_{r>0} exp(-kr + A r e^{r/p}), A = (2c)^{1/p}, for a
/// power-law tail L(m) = c/m^p. Minimizer r* = p(W(e k / A) - 1).
inline TailBound powerlaw_tail_asymptotic(double k, double c, double p) {
  require(k >= 8.0, ErrorKind::domain, "power-law tail asymptotic requires k >= 8");
  require(c > 0.0 && p > 1.0, ErrorKind::domain, "power-law tail asymptotic requires c > 0 and p > 1");
  const double a = std::pow(2.0 * c, 1.0 / p);
  require(k > a, ErrorKind::domain,
          "minimizer is not positive: need k > (2c)^{1/p} = " + detail::format_double(a));
  TailBound out;
  const double w = lambert_w0(std::numbers::e * k / a);
  out.minimizer = p * (w - 1.0);
  out.value = 2.0 * std::exp(-p * k * (w - 1.0) * (w - 1.0) / w);
  const auto exponent = [k, a, p](double r) { return -k * r + a * r * std::exp(r / p); };
  const double hi = detail::expand_bracket([k, a, p](double r) { return -k + a * std::exp(r / p) * (1.0 + r / p); });
  const Minimum m = golden_section_minimize(exponent, 0.0, hi, 1e-15);
  out.numeric = 2.0 * std::exp(m.value);
  return out;
}

/// P(O >= k) <= 2 inf_{r>0} exp((r^2 + r(ln 2c - k|ln b|)) / |ln b|) for a
/// geometric tail L(m) = c b^m. Equals 2 when the vertex lies at r <= 0.
inline TailBound geometric_tail_bound(double k, double c, double b) {
  require(k >= 1.0, ErrorKind::domain, "tail level k must be >= 1");
  require(c > 0.0 && b > 0.0 && b < 1.0, ErrorKind::domain, "geometric tail requires c > 0 and 0 < b < 1");
  const double ell = -std::log(b);
  const double l2c = std::log(2.0 * c);
  TailBound out;
  out.minimizer = std::max(0.0, (k * ell - l2c) / 2.0);
  if (out.minimizer <= 0.0) {
    out.value = 2.0;
  } else {
    const double shift = k - l2c / ell;
    out.value = 2.0 * std::exp(-(ell / 4.0) * shift * shift);
  }
  const auto exponent = [ell, l2c, k](double r) { return (r * r + r * (l2c - k * ell)) / ell; };
  const double hi = detail::expand_bracket([ell, l2c, k](double r) { return 2.0 * r + l2c - k * ell; });
  const Minimum m = golden_section_minimize(exponent, 0.0, hi, 1e-15);
  out.numeric = 2.0 * std::exp(std::min(m.value, 0.0));
  return out;
}

/// Exact law of O_N = sum_{j<=N} 1{E_j} for independent events.
struct ExactOverlapDistribution {
  std::vector<double> probabilities;         // P(O_N = k), k = 0..N
  std::vector<double> event_probs;           // p_1..p_N
  std::vector<double> elementary_symmetric;  // Q_n, n = 0..N (empty when N > 64)
  double identity_max_relative_error = 0.0;  // Schuette–Nesbitt check over sample rates
  bool q_bound_holds = true;                 // Q_n <= C1^n for all n

  double c1() const {
    long double s = 0.0L;
    for (double p : event_probs) s += p;
    return static_cast<double>(s);
  }

  template <typename F>
  double expectation(F&& f) const {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < probabilities.size(); ++k) acc += static_cast<long double>(f(k)) * probabilities[k];
    return static_cast<double>(acc);
  }

  double mean() const {
    return expectation([](std::size_t k) { return static_cast<double>(k); });
  }
};

inline constexpr std::size_t kMaxExactEvents = 10'000;
inline constexpr std::size_t kMaxSymmetricEvents = 64;

/// Coefficients of prod_j (1 + p_j x).
inline std::vector<double> elementary_symmetric(const std::vector<double>& probs) {
  std::vector<long double> q(probs.size() + 1, 0.0L);
  q[0] = 1.0L;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    for (std::size_t n = j + 1; n >= 1; --n) q[n] += q[n - 1] * probs[j];
  }
  return {q.begin(), q.end()};
}

/// Delta^n a_0 for n = 0..a.size()-1, exact in rational arithmetic.
inline std::vector<double> forward_differences(const std::vector<double>& a) {
  std::vector<Rational> row;
  row.reserve(a.size());
  for (double v : a) row.emplace_back(v);
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    out.push_back(row[0].convert_to<double>());
    for (std::size_t i = 0; i + 1 < row.size() - n; ++i) row[i] = row[i + 1] - row[i];
  }
  return out;
}

/// sum_n Q_n Delta^n a_0, which equals E[a_{O_N}] (Schuette–Nesbitt).
inline double schuette_nesbitt_sum(const ExactOverlapDistribution& dist, const std::vector<double>& a) {
  require(!dist.elementary_symmetric.empty(), ErrorKind::range, "elementary symmetric path needs N <= 64");
  require(a.size() == dist.elementary_symmetric.size(), ErrorKind::input, "need one weight per count 0..N");
  const auto diffs = forward_differences(a);
  long double acc = 0.0L;
  for (std::size_t n = 0; n < diffs.size(); ++n) acc += static_cast<long double>(dist.elementary_symmetric[n]) * diffs[n];
  return static_cast<double>(acc);
}

inline ExactOverlapDistribution sn_exact_distribution(const std::vector<double>& probs) {
  require(probs.size() <= kMaxExactEvents, ErrorKind::range, "exact distribution supports at most 10000 events");
  for (double p : probs) require(p >= 0.0 && p <= 1.0, ErrorKind::domain, "event probabilities must lie in [0,1]");
  ExactOverlapDistribution out;
  out.event_probs = probs;
  std::vector<long double> dp(probs.size() + 1, 0.0L);
  dp[0] = 1.0L;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const long double p = probs[j];
    for (std::size_t k = j + 1; k >= 1; --k) dp[k] = dp[k] * (1.0L - p) + dp[k - 1] * p;
    dp[0] *= 1.0L - p;
  }
  out.probabilities.assign(dp.begin(), dp.end());

  if (probs.size() <= kMaxSymmetricEvents) {
    out.elementary_symmetric = elementary_symmetric(probs);
    const double c1 = out.c1();
    double power = 1.0;
    for (double q : out.elementary_symmetric) {
      if (q > power * (1.0 + 1e-12)) out.q_bound_holds = false;
      power *= c1;
    }
    // E[e^{rO}] = sum_n Q_n (e^r - 1)^n
    for (double r : {0.01, 0.1, 0.5, 1.0}) {
      const double lhs = out.expectation([r](std::size_t k) { return std::exp(r * static_cast<double>(k)); });
      long double rhs = 0.0L;
      long double step = 1.0L;
      for (double q : out.elementary_symmetric) {
        rhs += q * step;
        step *= std::expm1(static_cast<long double>(r));
      }
      out.identity_max_relative_error =
          std::max(out.identity_max_relative_error, std::abs(lhs - static_cast<double>(rhs)) / std::abs(lhs));
    }
  }
  return out;
}

}  // namespace bcmoments
