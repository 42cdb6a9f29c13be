#pragma once

// Explicit strong order-1.5 Taylor scheme for scalar SDEs
// dX = a(t,X) dt + b(t,X) dW, coupled strong-error sweeps, and the MDF
// bound for the resulting deviation count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bcmoments/bounds.hpp"
#include "bcmoments/monte_carlo.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rng.hpp"
#include "bcmoments/special.hpp"

namespace bcmoments {

using Coefficient = std::function<double(double, double)>;

struct SdeProblem {
  Coefficient drift;
  Coefficient diffusion;
  double x0 = 1.0;
  double horizon = 1.0;
  // X_T given the Brownian value W_T (linear test problems only)
  std::function<double(double w_T)> exact;
  std::string name = "custom";
};

/// dX = mu X dt + sigma X dW with X_T = x0 exp((mu - sigma^2/2) T + sigma W_T).
inline SdeProblem geometric_brownian_motion(double mu, double sigma, double x0 = 1.0, double horizon = 1.0) {
  require(horizon > 0.0, ErrorKind::domain, "horizon T must be > 0");
  SdeProblem p;
  p.drift = [mu](double, double x) { return mu * x; };
  p.diffusion = [sigma](double, double x) { return sigma * x; };
  p.x0 = x0;
  p.horizon = horizon;
  p.exact = [=](double w) { return x0 * std::exp((mu - 0.5 * sigma * sigma) * horizon + sigma * w); };
  p.name = "gbm:" + detail::format_double(mu) + "," + detail::format_double(sigma);
  return p;
}

/// Step size with its Brownian increment dW and dZ = int_t^{t+h} (W_s - W_t) ds.
struct SchemeStepInputs {
  double delta = 0.0;
  double dw = 0.0;
  double dz = 0.0;
};

/// (dW, dZ) from two independent standard normals: dW = sqrt(h) g1,
/// dZ = h/2 (dW + sqrt(h) g2 / sqrt(3)).
inline SchemeStepInputs step_inputs(double h, double g1, double g2) {
  const double dw = std::sqrt(h) * g1;
  return {h, dw, 0.5 * h * (dw + std::sqrt(h) * g2 / std::sqrt(3.0))};
}

namespace detail {
inline double checked(double v, const char* what, double t, double x) {
  if (!std::isfinite(v)) {
    fail(ErrorKind::numeric, std::string(what) + " is not finite at t=" + format_double(t) + ", x=" + format_double(x));
  }
  return v;
}
}  // namespace detail

/// One step of the explicit order-1.5 strong scheme (Kloeden–Platen 11.2.1).
/// Coefficients are frozen at time t. Relative to the abbreviated display
/// often quoted for this scheme: the dZ term carries a(Y+) - a(Y-), the drift
/// term is (a(Y+) + 2a + a(Y-)) h/4, the (dW h - dZ) term has denominator 2h
/// and the triple-integral term has denominator 4h.
inline double sde15_step(const SdeProblem& problem, double t, double y, const SchemeStepInputs& in) {
  const double h = in.delta;
  require(h > 0.0, ErrorKind::domain, "step size must be > 0");
  const double sh = std::sqrt(h);
  const auto a = [&](double x) { return detail::checked(problem.drift(t, x), "drift", t, x); };
  const auto b = [&](double x) { return detail::checked(problem.diffusion(t, x), "diffusion", t, x); };
  const double a0 = a(y);
  const double b0 = b(y);
  const double up = y + a0 * h + b0 * sh;
  const double down = y + a0 * h - b0 * sh;
  const double a_up = a(up);
  const double a_down = a(down);
  const double b_up = b(up);
  const double b_down = b(down);
  const double phi_up = up + b_up * sh;
  const double phi_down = up - b_up * sh;
  const double dw = in.dw;
  const double dz = in.dz;
  const double next = y + b0 * dw + (a_up - a_down) * dz / (2.0 * sh) + (a_up + 2.0 * a0 + a_down) * h / 4.0 +
                      (b_up - b_down) * (dw * dw - h) / (4.0 * sh) +
                      (b_up - 2.0 * b0 + b_down) * (dw * h - dz) / (2.0 * h) +
                      (b(phi_up) - b(phi_down) - b_up + b_down) * (dw * dw / 3.0 - h) * dw / (4.0 * h);
  return detail::checked(next, "scheme value", t, y);
}

struct SdePath {
  std::vector<double> times;
  std::vector<double> values;

  /// Piecewise linear interpolation between nodes.
  double at(double t) const {
    require(t >= times.front() && t <= times.back(), ErrorKind::domain, "time outside the partition");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return values.back();
    const auto i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
  }
};

/// Runs the scheme on a partition 0 = tau_0 < ... < tau_N = T with noise from
/// stream `seed` (two normals per step, in order).
inline SdePath sde15_solve(const SdeProblem& problem, const std::vector<double>& partition, std::uint64_t seed) {
  require(partition.size() >= 2, ErrorKind::input, "partition needs at least two points");
  for (std::size_t i = 1; i < partition.size(); ++i) {
    require(partition[i] > partition[i - 1], ErrorKind::input, "partition must be strictly increasing");
  }
  StreamCursor cur(seed, 0);
  SdePath path{partition, {problem.x0}};
  double y = problem.x0;
  for (std::size_t i = 1; i < partition.size(); ++i) {
    const double g1 = cur.normal();
    const double g2 = cur.normal();
    y = sde15_step(problem, partition[i - 1], y, step_inputs(partition[i] - partition[i - 1], g1, g2));
    path.values.push_back(y);
  }
  return path;
}

inline std::vector<double> uniform_partition(double horizon, std::size_t steps) {
  std::vector<double> p(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) p[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
  p.back() = horizon;
  return p;
}

/// Sums fine (dW, dZ) increments of step h into blocks of `ratio` steps:
/// Z over a block adds (W_{t_j} - W_{block start}) h for each fine step j.
inline std::vector<SchemeStepInputs> coarsen(const std::vector<SchemeStepInputs>& fine, std::size_t ratio) {
  require(ratio >= 1 && fine.size() % ratio == 0, ErrorKind::input, "coarsening ratio must divide the fine step count");
  std::vector<SchemeStepInputs> out;
  out.reserve(fine.size() / ratio);
  for (std::size_t i = 0; i < fine.size(); i += ratio) {
    SchemeStepInputs block;
    double w = 0.0;
    for (std::size_t j = i; j < i + ratio; ++j) {
      block.dz += fine[j].dz + w * fine[j].delta;
      w += fine[j].dw;
      block.delta += fine[j].delta;
    }
    block.dw = w;
    out.push_back(block);
  }
  return out;
}

struct RegressionResult {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
inline RegressionResult linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorKind::input, "regression inputs differ in length");
  require(x.size() >= 3, ErrorKind::input, "regression needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::input, "regression abscissae are all equal");
  RegressionResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - r.intercept - r.slope * x[i];
    rss += e * e;
  }
  r.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return r;
}

struct StrongErrorRow {
  double delta = 0.0;
  std::size_t steps = 0;
  EmpiricalMoment error;
};

struct StrongErrorResult {
  std::vector<StrongErrorRow> rows;  // coarse to fine
  RegressionResult regression;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::string problem;
};

/// Parses "dyadic:lo..hi" into step counts 2^lo..2^hi.
inline std::vector<std::size_t> parse_sweep(const std::string& text) {
  const std::string prefix = "dyadic:";
  require(text.rfind(prefix, 0) == 0, ErrorKind::input, "sweep must look like dyadic:lo..hi");
  const auto dots = text.find("..", prefix.size());
  require(dots != std::string::npos, ErrorKind::input, "sweep must look like dyadic:lo..hi");
  int lo = 0, hi = 0;
  try {
    lo = std::stoi(text.substr(prefix.size(), dots - prefix.size()));
    hi = std::stoi(text.substr(dots + 2));
  } catch (const std::exception&) {
    fail(ErrorKind::input, "sweep bounds must be integers: " + text);
  }
  require(0 <= lo && lo <= hi && hi <= 24, ErrorKind::input, "sweep needs 0 <= lo <= hi <= 24");
  std::vector<std::size_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::size_t{1} << k);
  return out;
}

/// E|X_T - Y_T^delta| for each step count, all levels driven by the same
/// fine Brownian path per replication, with the OLS slope of ln error on ln delta.
inline StrongErrorResult strong_error_estimate(const SdeProblem& problem, std::vector<std::size_t> steps,
                                               std::size_t reps, std::uint64_t seed,
                                               const ExecutionOptions& options = {}) {
  require(static_cast<bool>(problem.exact), ErrorKind::input, "strong error sweep needs an exact solution");
  require(steps.size() >= 3, ErrorKind::input, "strong error regression needs at least 3 step sizes");
  require(reps >= 2, ErrorKind::input, "reps must be >= 2");
  std::sort(steps.begin(), steps.end());
  const std::size_t finest = steps.back();
  for (std::size_t s : steps) {
    require(s >= 1 && finest % s == 0, ErrorKind::input, "every step count must divide the finest one");
  }
  const double h = problem.horizon / static_cast<double>(finest);

  const auto errors = parallel_generate<std::vector<double>>(reps, options, [&](std::size_t rep) {
    StreamCursor cur(CounterStream(seed, rep));
    std::vector<SchemeStepInputs> fine(finest);
    double w_total = 0.0;
    for (auto& in : fine) {
      const double g1 = cur.normal();
      const double g2 = cur.normal();
      in = step_inputs(h, g1, g2);
      w_total += in.dw;
    }
    const double x_exact = problem.exact(w_total);
    std::vector<double> out;
    for (std::size_t s : steps) {
      const auto inputs = coarsen(fine, finest / s);
      double y = problem.x0;
      double t = 0.0;
      for (const auto& in : inputs) {
        y = sde15_step(problem, t, y, in);
        t += in.delta;
      }
      out.push_back(std::abs(x_exact - y));
    }
    return out;
  });

  StrongErrorResult res;
  res.reps = reps;
  res.seed = seed;
  res.problem = problem.name;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    std::vector<double> e(reps);
    for (std::size_t r = 0; r < reps; ++r) e[r] = errors[r][k];
    StrongErrorRow row;
    row.steps = steps[k];
    row.delta = problem.horizon / static_cast<double>(steps[k]);
    row.error = mean_with_stderr(e, "E|X_T - Y_T|");
    require(row.error.estimate > 0.0, ErrorKind::numeric, "zero strong error; regression undefined");
    lx.push_back(std::log(row.delta));
    ly.push_back(std::log(row.error.estimate));
    res.rows.push_back(std::move(row));
  }
  res.regression = linear_regression(lx, ly);
  return res;
}

inline std::string strong_error_csv(const StrongErrorResult& r) {
  std::string out = "delta,mean_abs_error,stderr,reps\n";
  for (const auto& row : r.rows) {
    out += detail::format_double(row.delta) + "," + detail::format_double(row.error.estimate) + "," +
           detail::format_double(row.error.stderr_) + "," + std::to_string(row.error.reps) + "\n";
  }
  return out;
}

/// K_1 = K_T (C T)^{3/2} zeta(3/2) / eps bounds E[O_eps] when
/// E|X(T) - Y_T^{delta_N}| <= K_T delta_N^{3/2} with delta_N = C T / N.
inline BoundResult sde_mdf_bound(double k_t, double c, double horizon, double eps) {
  require(k_t > 0.0 && c > 0.0 && horizon > 0.0 && eps > 0.0, ErrorKind::domain,
          "sde MDF bound needs K_T, C, T, eps > 0");
  BoundResult r;
  r.formula_id = "sde.mdf";
  r.validity = "E|X(T) - Y^{delta_N}_T| <= K_T delta_N^{3/2}, delta_N <= C T / N; tail P(O_eps >= k) <= value/k";
  r.inputs = json{{"K_T", k_t}, {"C", c}, {"T", horizon}, {"eps", eps}};
  const SeriesValue z = zeta(1.5);
  r.value = k_t * std::pow(c * horizon, 1.5) / eps * z.value;
  r.extras["zeta_1_5"] = z.value;
  return r;
}

}  // namespace bcmoments
