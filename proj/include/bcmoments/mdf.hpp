#pragma once

// Mean-deviation-frequency (MDF) bounds: the moment bounds relabelled for a
// deviation count O_eps = #{n : |Z_n - Z| >= eps}, plus the report type
// shared by the simulation-backed applications.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcmoments/bounds.hpp"
#include "bcmoments/decay.hpp"
#include "bcmoments/monte_carlo.hpp"

namespace bcmoments {

struct MDFRow {
  double epsilon = 0.0;
  std::string order;                  // functional of O_eps, e.g. "E[exp(0.02 O)]"
  std::optional<double> theoretical;  // empty: existential constant, not computed
  std::string theoretical_formula;
  bool is_bound = true;  // false when the theoretical column is a limit, not a bound
  EmpiricalMoment empirical;

  /// empirical <= theoretical + 4 stderr whenever a finite bound is present.
  bool consistent() const {
    if (!is_bound || !theoretical || !std::isfinite(*theoretical)) return true;
    return empirical.estimate <= *theoretical + 4.0 * empirical.stderr_;
  }
};

struct MDFReport {
  std::string application;
  std::vector<MDFRow> rows;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  json parameters = json::object();
  json extras = json::object();

  bool consistent() const {
    for (const auto& r : rows) {
      if (!r.consistent()) return false;
    }
    return true;
  }
};

/// Markov-type tail bound P(O >= k) attached to an MDF bound.
inline double mdf_tail_bound(const BoundResult& bound, double k) {
  require(k > 0.0, ErrorKind::domain, "tail level must be > 0");
  if (bound.infinite) return std::numeric_limits<double>::infinity();
  const std::string& id = bound.formula_id;
  if (id == "cor3.2" || id == "sde.mdf") return bound.value / k;
  if (id == "cor3.4") {
    const double p = bound.inputs.at("p").get<double>();
    return bound.value * std::pow(k, -(p + 1.0));
  }
  if (id == "cor3.5" || id == "thm3.16") {
    const double p = bound.inputs.at("p").get<double>();
    return bound.value * std::exp(-p * k);
  }
  fail(ErrorKind::input, "no tail rule for formula " + id);
}

/// E[O_eps] = phi(eps) = sum_{n>=1} P(E_n).
inline BoundResult mdf_first_order(const DecayModel& model, const BoundOptions& options = {}) {
  BoundResult base;
  base.formula_id = "cor3.2";
  base.validity = "E[O_eps] = phi(eps) = sum P(|Z_n - Z| >= eps); tail P(O_eps >= k) <= phi/k";
  base.inputs = json{{"model", model.describe()}};
  return detail::guard_divergence(options, std::move(base), [&](BoundResult r) {
    require(is_summable(model), ErrorKind::divergence, "first-order MDF needs sum P(E_n) < inf (q > 1)");
    const SeriesValue phi = tail_sum(model, 1);
    r.value = phi.value;
    r.extras["series"] = detail::series_json(phi);
    return r;
  });
}

inline BoundResult mdf_polynomial(double p, const DecayModel& model, const BoundOptions& options = {}) {
  BoundResult r = poly_moment_bound(p, model, options);
  r.formula_id = "cor3.4";
  r.validity = "bounds E[O_eps^{p+1}]; tail P(O_eps >= k) <= k^{-(p+1)} (p+1) phi(eps)";
  return r;
}

inline BoundResult mdf_exponential(double p, const DecayModel& model, const BoundOptions& options = {}) {
  BoundResult r = exp_moment_bound(p, model, options);
  r.formula_id = "cor3.5";
  r.validity = "bounds E[exp(p O_eps)]; tail P(O_eps >= k) <= e^{-pk} (phi(eps) + 1)";
  return r;
}

/// 2 exp(-2 n eps^2).
inline double hoeffding_bound(double n, double eps) {
  require(n >= 1.0, ErrorKind::domain, "Hoeffding bound needs n >= 1");
  require(eps >= 0.0, ErrorKind::domain, "Hoeffding bound needs eps >= 0");
  return 2.0 * std::exp(-2.0 * n * eps * eps);
}

/// C (1 - e^{-rate})^{-1} (1 - e^{-(rate - p)})^{-1} bounds E[exp(p O)] when
/// P(Z_n in A) <= C e^{-rate n}.
inline BoundResult ldp_mdf_bound(double rate, double p, double c) {
  require(rate > 0.0, ErrorKind::domain, "LDP rate must be > 0");
  require(c > 0.0, ErrorKind::domain, "LDP constant C must be > 0");
  require(p > 0.0 && p < rate, ErrorKind::domain,
          "LDP MDF bound requires 0 < p < rate (p=" + detail::format_double(p) + ", rate=" + detail::format_double(rate) + ")");
  BoundResult r;
  r.formula_id = "thm3.16";
  r.validity = "P(Z_n in A) <= C exp(-n inf J), 0 < p < inf J; tail P(O_A >= k) <= value e^{-pk}";
  r.inputs = json{{"rate", rate}, {"p", p}, {"C", c}};
  r.value = c / (-std::expm1(-rate) * -std::expm1(-(rate - p)));
  return r;
}

using GrowthFunction = std::function<double(double)>;

/// 4 m^S(2 ell) exp(-eps^2 ell / 8), valid for ell >= 2/eps^2.
inline double vc_bound(double ell, double eps, const GrowthFunction& growth) {
  require(eps > 0.0, ErrorKind::domain, "VC bound needs eps > 0");
  require(ell >= 2.0 / (eps * eps), ErrorKind::domain,
          "VC bound requires ell >= 2/eps^2 = " + detail::format_double(2.0 / (eps * eps)));
  return 4.0 * growth(2.0 * ell) * std::exp(-eps * eps * ell / 8.0);
}

struct VcLambdaSeries {
  SeriesValue series;  // partial sum up to the horizon
  std::vector<double> partial_sums;
  bool divergent = true;
};

/// Partial sums of sum_{ell >= N} e^{eps^2 ell / 8} / (ell^{1+delta} m^S(2 ell)).
/// With a polynomial growth function the terms grow geometrically, so the
/// full series diverges; only the partial sums up to `horizon` are returned.
inline VcLambdaSeries vc_lambda_series(std::size_t n, double eps, double delta, const GrowthFunction& growth,
                                       std::size_t horizon) {
  require(n >= 1 && horizon >= n, ErrorKind::domain, "need 1 <= N <= horizon");
  require(eps > 0.0 && delta > 0.0, ErrorKind::domain, "need eps > 0 and delta > 0");
  VcLambdaSeries out;
  long double acc = 0.0L;
  for (std::size_t ell = n; ell <= horizon; ++ell) {
    const double l = static_cast<double>(ell);
    acc += std::exp(eps * eps * l / 8.0) / (std::pow(l, 1.0 + delta) * growth(2.0 * l));
    out.partial_sums.push_back(static_cast<double>(acc));
  }
  out.series.value = static_cast<double>(acc);
  out.series.terms_used = horizon - n + 1;
  out.series.truncation_error = std::numeric_limits<double>::infinity();
  out.series.converged = false;
  return out;
}

namespace detail {
inline std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return format_double(v);
}
}  // namespace detail

inline std::string mdf_csv_header() { return "application,epsilon,order,theoretical,empirical,stderr,reps,seed"; }

inline std::string mdf_csv_rows(const MDFReport& report) {
  std::string out;
  for (const auto& r : report.rows) {
    out += report.application + "," + detail::csv_number(r.epsilon) + ",\"" + r.order + "\"," +
           (r.theoretical ? detail::csv_number(*r.theoretical) : std::string("NA")) + "," +
           detail::csv_number(r.empirical.estimate) + "," + detail::csv_number(r.empirical.stderr_) + "," +
           std::to_string(r.empirical.reps) + "," + std::to_string(report.seed) + "\n";
  }
  return out;
}

inline json to_json(const MDFReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"epsilon", r.epsilon},
             {"order", r.order},
             {"empirical", r.empirical.estimate},
             {"stderr", r.empirical.stderr_},
             {"reps", r.empirical.reps},
             {"is_bound", r.is_bound},
             {"consistent", r.consistent()}};
    row["theoretical"] = r.theoretical ? json(*r.theoretical) : json(nullptr);
    if (!r.theoretical_formula.empty()) row["theoretical_formula"] = r.theoretical_formula;
    rows.push_back(std::move(row));
  }
  json j{{"application", report.application}, {"reps", report.reps}, {"seed", report.seed},
         {"parameters", report.parameters}, {"rows", rows}};
  if (!report.extras.empty()) j["extras"] = report.extras;
  return j;
}

/// Adds rows P(O >= k), k = 1..k_max, for one epsilon.
template <typename Count>
void add_tail_rows(MDFReport& report, double eps, const std::vector<Count>& counts, int k_max,
                   const std::function<std::optional<double>(int)>& theory = {}) {
  for (int k = 1; k <= k_max; ++k) {
    MDFRow row;
    row.epsilon = eps;
    row.empirical = empirical_moment(counts, Functional::tail(k));
    row.order = row.empirical.functional;
    if (theory) row.theoretical = theory(k);
    report.rows.push_back(std::move(row));
  }
}

}  // namespace bcmoments
