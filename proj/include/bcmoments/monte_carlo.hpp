#pragma once

// Reproducible simulation of event families and their overlap counts.
//
// Replication `rep` reads CounterStream(seed, rep). Index n >= 1 carries the
// uniform U_n of event n (Independent: 1{U_n < p_n}); index 0 carries the
// single uniform of the nested family. UnionDominated draws its auxiliary
// uniform from kAuxIndex and is built from the same U_n, so for a fixed seed
// its count dominates the Independent count replication by replication.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcmoments/decay.hpp"
#include "bcmoments/error.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rng.hpp"

namespace bcmoments {

inline constexpr double kDefaultTailTolerance = 1e-6;

/// Minimal N with C_{N+1} + error <= tol; with exp_rate r > 0 additionally
/// e^{rN} C_{N+1} <= tol.
inline std::size_t choose_truncation(const DecayModel& model, double tail_tolerance = kDefaultTailTolerance,
                                     double exp_rate = 0.0) {
  require(tail_tolerance >= 0.0, ErrorKind::domain, "tail tolerance must be >= 0");
  require(is_summable(model), ErrorKind::divergence, "truncation needs a summable model (q > 1 for power laws)");
  const auto ok = [&](std::size_t n) {
    const SeriesValue c = tail_sum(model, n + 1);
    if (c.value + c.truncation_error > tail_tolerance) return false;
    if (exp_rate > 0.0 && std::exp(exp_rate * static_cast<double>(n)) * (c.value + c.truncation_error) > tail_tolerance) {
      return false;
    }
    return true;
  };
  if (const auto* e = model.get_if<DecayModel::Explicit>()) {
    std::size_t n = e->probabilities.size();
    while (n > 0 && ok(n - 1)) --n;
    return n;
  }
  require(tail_tolerance > 0.0, ErrorKind::truncation, "an infinite model needs a positive tail tolerance");
  std::size_t hi = 1;
  while (!ok(hi)) {
    require(hi < (std::size_t{1} << 32), ErrorKind::truncation, "truncation index exceeds 2^32; loosen the tolerance");
    hi *= 2;
  }
  std::size_t lo = 0;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

enum class FamilyKind { independent, nested, union_dominated };

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::independent: return "independent";
    case FamilyKind::nested: return "nested";
    case FamilyKind::union_dominated: return "union_dominated";
  }
  return "unknown";
}

inline FamilyKind parse_family(std::string_view s) {
  if (s == "independent") return FamilyKind::independent;
  if (s == "nested") return FamilyKind::nested;
  if (s == "union_dominated" || s == "union") return FamilyKind::union_dominated;
  fail(ErrorKind::input, "unknown family '" + std::string(s) + "' (independent|nested|union_dominated)");
}

struct EventFamilySpec {
  FamilyKind kind = FamilyKind::independent;
  DecayModel model = DecayModel::explicit_list({});
  std::size_t truncation = 0;
  double tail_tolerance = kDefaultTailTolerance;

  /// Spec with the minimal valid truncation for the tolerance.
  static EventFamilySpec make(FamilyKind kind, DecayModel model, double tail_tolerance = kDefaultTailTolerance,
                              double exp_rate = 0.0) {
    const std::size_t n = choose_truncation(model, tail_tolerance, exp_rate);
    return EventFamilySpec{kind, std::move(model), n, tail_tolerance};
  }

  json to_json() const {
    return json{{"family", to_string(kind)}, {"model", model.describe()}, {"truncation", truncation}, {"tail_tolerance", tail_tolerance}};
  }
};

struct OverlapSample {
  std::vector<std::uint32_t> counts;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::size_t truncation = 0;
  double tail_tolerance = 0.0;
  json family = json::object();
};

inline constexpr std::uint64_t kAuxIndex = std::uint64_t{1} << 63;

namespace detail {

struct PreparedFamily {
  FamilyKind kind;
  std::vector<double> p;         // p[n], n = 1..N (p[0] unused)
  std::vector<double> survival;  // P(L >= n) for the last occurring independent index L, n = 1..N+1
  std::vector<double> dominant;  // max(min(1, C_n), survival[n]), n = 1..N
};

inline PreparedFamily prepare(const EventFamilySpec& spec) {
  const std::size_t n_max = spec.truncation;
  const SeriesValue beyond = tail_sum(spec.model, n_max + 1);
  require(beyond.value + beyond.truncation_error <= spec.tail_tolerance * (1.0 + 1e-12), ErrorKind::truncation,
          "truncation N=" + std::to_string(n_max) + " leaves C_{N+1}=" + detail::format_double(beyond.value) +
              " above the tail tolerance " + detail::format_double(spec.tail_tolerance));
  PreparedFamily f;
  f.kind = spec.kind;
  f.p.assign(n_max + 1, 0.0);
  for (std::size_t n = 1; n <= n_max; ++n) f.p[n] = eval_decay(spec.model, n);
  if (spec.kind == FamilyKind::nested) {
    for (std::size_t n = 2; n <= n_max; ++n) {
      require(f.p[n] <= f.p[n - 1], ErrorKind::domain, "nested family needs nonincreasing probabilities");
    }
  }
  if (spec.kind == FamilyKind::union_dominated) {
    f.survival.assign(n_max + 2, 0.0);
    double log_none = 0.0;  // ln P(no event among n..N)
    for (std::size_t n = n_max; n >= 1; --n) {
      log_none += std::log1p(-std::min(f.p[n], 1.0));
      f.survival[n] = f.p[n] >= 1.0 ? 1.0 : -std::expm1(log_none);
      if (f.p[n] >= 1.0) log_none = -std::numeric_limits<double>::infinity();
    }
    f.dominant.assign(n_max + 1, 0.0);
    for (std::size_t n = 1; n <= n_max; ++n) {
      f.dominant[n] = std::max(std::min(1.0, tail_sum(spec.model, n).value), f.survival[n]);
    }
  }
  return f;
}

inline std::uint32_t draw_count(const PreparedFamily& f, const CounterStream& stream) {
  const std::size_t n_max = f.p.size() - 1;
  switch (f.kind) {
    case FamilyKind::independent: {
      std::uint32_t count = 0;
      for (std::size_t n = 1; n <= n_max; ++n) {
        if (f.p[n] > 0.0 && stream.uniform(n) < f.p[n]) ++count;
      }
      return count;
    }
    case FamilyKind::nested: {
      const double u = stream.uniform(0);
      // p nonincreasing: count = #{n : p_n > u}
      const auto it = std::partition_point(f.p.begin() + 1, f.p.end(), [u](double p) { return p > u; });
      return static_cast<std::uint32_t>(it - (f.p.begin() + 1));
    }
    case FamilyKind::union_dominated: {
      std::size_t last = 0;
      for (std::size_t n = n_max; n >= 1; --n) {
        if (f.p[n] > 0.0 && stream.uniform(n) < f.p[n]) {
          last = n;
          break;
        }
      }
      // Quantile coupling: u' is uniform on (0,1) and lies in
      // [P(L > last), P(L >= last)), the slot that L occupies.
      const double v = stream.uniform(kAuxIndex);
      double u;
      if (last == 0) {
        u = f.survival[1] + v * (1.0 - f.survival[1]);
      } else {
        const double above = f.survival[last + 1];
        u = above + (1.0 - v) * (f.survival[last] - above);
        u = std::min(u, std::nextafter(f.survival[last], 0.0));
      }
      const auto it = std::partition_point(f.dominant.begin() + 1, f.dominant.end(), [u](double g) { return g > u; });
      return static_cast<std::uint32_t>(it - (f.dominant.begin() + 1));
    }
  }
  return 0;
}

}  // namespace detail

inline OverlapSample simulate_overlap(const EventFamilySpec& spec, std::size_t reps, std::uint64_t seed,
                                      const ExecutionOptions& options = {}) {
  require(reps >= 1, ErrorKind::domain, "reps must be >= 1");
  const detail::PreparedFamily family = detail::prepare(spec);
  OverlapSample out;
  out.reps = reps;
  out.seed = seed;
  out.truncation = spec.truncation;
  out.tail_tolerance = spec.tail_tolerance;
  out.family = spec.to_json();
  out.counts = parallel_generate<std::uint32_t>(reps, options, [&](std::size_t rep) {
    return detail::draw_count(family, CounterStream(seed, rep));
  });
  return out;
}

struct EmpiricalMoment {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t reps = 0;
  std::string functional;

  json to_json() const {
    return json{{"functional", functional}, {"estimate", estimate}, {"stderr", stderr_}, {"reps", reps}};
  }
};

/// Sample mean and standard error (sample standard deviation / sqrt(n)).
inline EmpiricalMoment mean_with_stderr(const std::vector<double>& values, std::string functional) {
  require(!values.empty(), ErrorKind::domain, "empirical moment needs a nonempty sample");
  long double sum = 0.0L;
  for (double v : values) sum += v;
  const long double mean = sum / values.size();
  long double ss = 0.0L;
  for (double v : values) ss += (v - mean) * (v - mean);
  EmpiricalMoment m;
  m.estimate = static_cast<double>(mean);
  m.reps = values.size();
  m.stderr_ = values.size() > 1 ? static_cast<double>(std::sqrt(ss / (values.size() - 1) / values.size())) : 0.0;
  m.functional = std::move(functional);
  require(std::isfinite(m.estimate), ErrorKind::overflow, "empirical moment is not finite");
  return m;
}

struct Functional {
  enum class Kind { power, exp, tail };
  Kind kind;
  double parameter;

  static Functional power(double p) { return {Kind::power, p}; }
  static Functional exp(double r) { return {Kind::exp, r}; }
  static Functional tail(double k) { return {Kind::tail, k}; }

  std::string describe() const {
    switch (kind) {
      case Kind::power: return "E[O^" + detail::format_double(parameter) + "]";
      case Kind::exp: return "E[exp(" + detail::format_double(parameter) + " O)]";
      case Kind::tail: return "P(O >= " + detail::format_double(parameter) + ")";
    }
    return "";
  }

  double operator()(double count) const {
    switch (kind) {
      case Kind::power: return std::pow(count, parameter);
      case Kind::exp: return std::exp(parameter * count);
      case Kind::tail: return count >= parameter ? 1.0 : 0.0;
    }
    return 0.0;
  }
};

template <typename Count>
EmpiricalMoment empirical_moment(const std::vector<Count>& counts, const Functional& functional) {
  require(!counts.empty(), ErrorKind::domain, "empirical moment needs a nonempty sample");
  if (functional.kind == Functional::Kind::exp) {
    const double top = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
    require(functional.parameter * top < 700.0, ErrorKind::overflow,
            "exp(r O) overflows for r=" + detail::format_double(functional.parameter) + " and max count " +
                detail::format_double(top) + "; use a smaller r");
  }
  std::vector<double> values(counts.size());
  std::transform(counts.begin(), counts.end(), values.begin(), [&](Count c) { return functional(static_cast<double>(c)); });
  return mean_with_stderr(values, functional.describe());
}

inline EmpiricalMoment empirical_moment(const OverlapSample& sample, const Functional& functional) {
  return empirical_moment(sample.counts, functional);
}

}  // namespace bcmoments
