#pragma once

// Decay models for P(E_n), their tail sums C_m = sum_{n>=m} P(E_n), weight
// sequences a_n with partial sums S(N), and the weighted tail series
// sum_n a_n C_n that every moment bound is built from.
//
// Indexing: the overlap count runs over n >= 1. A model may define an n = 0
// term (Geometric: c * b^0); it only enters C_0, which matters for weight
// sequences starting at 0 (Exponential).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bcmoments/error.hpp"
#include "bcmoments/optimize.hpp"
#include "bcmoments/special.hpp"

namespace bcmoments {

using json = nlohmann::json;

/// A nonincreasing, invertible tail m -> L(m) on [domain_lo, domain_hi].
struct TailFunction {
  std::function<double(double)> evaluate;
  std::function<double(double)> inverse;  // optional; bisection when empty
  double domain_lo = 1.0;
  double domain_hi = 1e300;
  std::string description = "custom";

  double operator()(double m) const { return evaluate(m); }

  /// L^{-1}(s). Values of s above L(domain_lo) map to domain_lo and values
  /// below L(domain_hi) map to domain_hi.
  double inv(double s) const {
    if (inverse) return inverse(s);
    if (s >= evaluate(domain_lo)) return domain_lo;
    if (s <= evaluate(domain_hi)) return domain_hi;
    double lo = domain_lo;
    double hi = std::min(domain_hi, std::max(2.0 * domain_lo, 2.0));
    while (evaluate(hi) > s && hi < domain_hi) hi = std::min(domain_hi, hi * 2.0);
    return bisect_root([&](double m) { return evaluate(m) - s; }, lo, hi, 1e-15);
  }
};

/// L(m) = c / m^p.
inline TailFunction power_tail(double c, double p) {
  require(c > 0.0 && p > 0.0, ErrorKind::domain, "power tail requires c > 0 and p > 0");
  TailFunction t;
  t.evaluate = [c, p](double m) { return c / std::pow(m, p); };
  t.inverse = [c, p](double s) { return std::pow(c / s, 1.0 / p); };
  t.domain_lo = 0.0;
  std::ostringstream os;
  os.precision(17);
  os << "power_tail(c=" << c << ",p=" << p << ")";
  t.description = os.str();
  return t;
}

/// L(m) = c * b^m.
inline TailFunction geometric_tail(double c, double b) {
  require(c > 0.0 && b > 0.0 && b < 1.0, ErrorKind::domain, "geometric tail requires c > 0 and 0 < b < 1");
  TailFunction t;
  t.evaluate = [c, b](double m) { return c * std::pow(b, m); };
  t.inverse = [c, b](double s) { return std::log(s / c) / std::log(b); };
  t.domain_lo = -1e300;
  std::ostringstream os;
  os.precision(17);
  os << "geometric_tail(c=" << c << ",b=" << b << ")";
  t.description = os.str();
  return t;
}

namespace detail {
/// Shortest representation that round-trips.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!item.empty()) {
      std::string owned(item);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(owned, &used);
      } catch (const std::exception&) {
        fail(ErrorKind::input, "not a number: '" + owned + "'");
      }
      require(used == owned.size(), ErrorKind::input, "not a number: '" + owned + "'");
      out.push_back(v);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}
}  // namespace detail

class DecayModel {
 public:
  struct Explicit {
    std::vector<double> probabilities;  // P(E_1), P(E_2), ...
  };
  struct PowerLaw {
    double c;
    double q;
  };
  struct Geometric {
    double c;
    double b;
  };
  struct CustomTail {
    TailFunction tail;  // C_m = L(m), P(E_n) = L(n) - L(n+1)
  };
  using Variant = std::variant<Explicit, PowerLaw, Geometric, CustomTail>;

  static DecayModel explicit_list(std::vector<double> probabilities) {
    for (double p : probabilities) {
      require(p >= 0.0 && p <= 1.0, ErrorKind::domain, "explicit probabilities must lie in [0,1]");
    }
    return DecayModel(Explicit{std::move(probabilities)});
  }
  static DecayModel power_law(double c, double q) {
    require(c > 0.0 && q > 0.0, ErrorKind::domain, "power law requires c > 0 and q > 0");
    return DecayModel(PowerLaw{c, q});
  }
  static DecayModel geometric(double c, double b) {
    require(c > 0.0, ErrorKind::domain, "geometric decay requires c > 0");
    require(b > 0.0 && b < 1.0, ErrorKind::domain, "geometric decay requires 0 < b < 1");
    return DecayModel(Geometric{c, b});
  }
  static DecayModel custom_tail(TailFunction tail) { return DecayModel(CustomTail{std::move(tail)}); }

  /// Parses "explicit:p1,p2,...", "powerlaw:c,q" or "geometric:c,b".
  static DecayModel parse(std::string_view text) {
    const auto colon = text.find(':');
    require(colon != std::string_view::npos, ErrorKind::input, "decay spec must look like kind:args");
    const std::string_view kind = text.substr(0, colon);
    const auto args = detail::parse_number_list(text.substr(colon + 1));
    if (kind == "explicit") return explicit_list(args);
    if (kind == "powerlaw") {
      require(args.size() == 2, ErrorKind::input, "powerlaw:c,q takes two numbers");
      return power_law(args[0], args[1]);
    }
    if (kind == "geometric") {
      require(args.size() == 2, ErrorKind::input, "geometric:c,b takes two numbers");
      return geometric(args[0], args[1]);
    }
    fail(ErrorKind::input, "unknown decay kind '" + std::string(kind) + "'");
  }

  const Variant& variant() const noexcept { return model_; }

  template <typename T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&model_);
  }

  std::string describe() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, Explicit>) {
            std::string out = "explicit:";
            for (std::size_t i = 0; i < m.probabilities.size(); ++i) {
              if (i) out += ',';
              out += detail::format_double(m.probabilities[i]);
            }
            return out;
          } else if constexpr (std::is_same_v<M, PowerLaw>) {
            return "powerlaw:" + detail::format_double(m.c) + "," + detail::format_double(m.q);
          } else if constexpr (std::is_same_v<M, Geometric>) {
            return "geometric:" + detail::format_double(m.c) + "," + detail::format_double(m.b);
          } else {
            return "custom:" + m.tail.description;
          }
        },
        model_);
  }

 private:
  explicit DecayModel(Variant v) : model_(std::move(v)) {}
  Variant model_;
};

/// Unclamped model value at n >= 0 (the majorant used in bound arithmetic).
inline double decay_term(const DecayModel& model, std::size_t n) {
  return std::visit(
      [n](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DecayModel::Explicit>) {
          return (n >= 1 && n <= m.probabilities.size()) ? m.probabilities[n - 1] : 0.0;
        } else if constexpr (std::is_same_v<M, DecayModel::PowerLaw>) {
          return n == 0 ? 0.0 : m.c / std::pow(static_cast<double>(n), m.q);
        } else if constexpr (std::is_same_v<M, DecayModel::Geometric>) {
          return m.c * std::pow(m.b, static_cast<double>(n));
        } else {
          if (n == 0) return 0.0;
          const double x = static_cast<double>(n);
          return std::max(0.0, m.tail(x) - m.tail(x + 1.0));
        }
      },
      model.variant());
}

/// P(E_n) for n >= 1, clamped into [0, 1].
inline double eval_decay(const DecayModel& model, std::size_t n) {
  require(n >= 1, ErrorKind::domain, "event index must be >= 1");
  return std::clamp(decay_term(model, n), 0.0, 1.0);
}

inline bool is_summable(const DecayModel& model) {
  if (const auto* pl = model.get_if<DecayModel::PowerLaw>()) return pl->q > 1.0;
  return true;
}

/// C_m = sum_{n>=m} P(E_n) from the unclamped model, m >= 0.
inline SeriesValue tail_sum(const DecayModel& model, std::size_t m) {
  return std::visit(
      [m, &model](const auto& d) -> SeriesValue {
        using M = std::decay_t<decltype(d)>;
        SeriesValue out;
        if constexpr (std::is_same_v<M, DecayModel::Explicit>) {
          long double acc = 0.0L;
          for (std::size_t n = std::max<std::size_t>(m, 1); n <= d.probabilities.size(); ++n) {
            acc += d.probabilities[n - 1];
            ++out.terms_used;
          }
          out.value = static_cast<double>(acc);
        } else if constexpr (std::is_same_v<M, DecayModel::PowerLaw>) {
          require(d.q > 1.0, ErrorKind::divergence, "power-law tail sum requires q > 1 (model " + model.describe() + ")");
          out = hurwitz_tail(d.q, std::max<std::size_t>(m, 1));
          out.value *= d.c;
          out.truncation_error *= d.c;
        } else if constexpr (std::is_same_v<M, DecayModel::Geometric>) {
          out.value = d.c * std::pow(d.b, static_cast<double>(m)) / (1.0 - d.b);
        } else {
          out.value = d.tail(static_cast<double>(std::max<std::size_t>(m, 1)));
        }
        return out;
      },
      model.variant());
}

class WeightSequence {
 public:
  struct Monomial {
    double p;  // a_n = n^p, n >= 1
  };
  struct Exponential {
    double rate;  // a_n = e^{rate n}, n >= 0
  };
  struct Custom {
    std::function<double(std::size_t)> weight;
    std::size_t start = 0;
    std::optional<std::size_t> last_nonzero;  // finite support when set
    std::string name = "custom";
  };
  using Variant = std::variant<Monomial, Exponential, Custom>;

  static WeightSequence monomial(double p) {
    require(p >= 0.0, ErrorKind::domain, "monomial weight power must be >= 0");
    return WeightSequence(Monomial{p});
  }
  static WeightSequence exponential(double rate) {
    require(rate > 0.0, ErrorKind::domain, "exponential weight rate must be > 0");
    return WeightSequence(Exponential{rate});
  }
  static WeightSequence custom(std::function<double(std::size_t)> weight, std::size_t start,
                               std::optional<std::size_t> last_nonzero = std::nullopt, std::string name = "custom") {
    return WeightSequence(Custom{std::move(weight), start, last_nonzero, std::move(name)});
  }

  /// Parses "monomial:p" or "exponential:p".
  static WeightSequence parse(std::string_view text) {
    const auto colon = text.find(':');
    require(colon != std::string_view::npos, ErrorKind::input, "weight spec must look like kind:p");
    const std::string_view kind = text.substr(0, colon);
    const auto args = detail::parse_number_list(text.substr(colon + 1));
    require(args.size() == 1, ErrorKind::input, "weight spec takes one number");
    if (kind == "monomial") return monomial(args[0]);
    if (kind == "exponential") return exponential(args[0]);
    fail(ErrorKind::input, "unknown weight kind '" + std::string(kind) + "'");
  }

  const Variant& variant() const noexcept { return weights_; }

  std::size_t start_index() const {
    return std::visit(
        [](const auto& w) -> std::size_t {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, Monomial>) return 1;
          else if constexpr (std::is_same_v<W, Exponential>) return 0;
          else return w.start;
        },
        weights_);
  }

  double operator()(std::size_t n) const {
    if (n < start_index()) return 0.0;
    return std::visit(
        [n](const auto& w) -> double {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, Monomial>) return std::pow(static_cast<double>(n), w.p);
          else if constexpr (std::is_same_v<W, Exponential>) return std::exp(w.rate * static_cast<double>(n));
          else return w.weight(n);
        },
        weights_);
  }

  /// S(N) = sum_{n=start}^{N} a_n.
  double partial_sum(std::size_t big_n) const {
    if (const auto* m = std::get_if<Monomial>(&weights_)) {
      if (m->p == std::floor(m->p) && m->p <= kMaxExactPower) {
        return faulhaber_sum(static_cast<unsigned>(m->p), big_n).convert_to<double>();
      }
    }
    if (const auto* e = std::get_if<Exponential>(&weights_)) {
      return std::expm1(e->rate * (static_cast<double>(big_n) + 1.0)) / std::expm1(e->rate);
    }
    long double acc = 0.0L;
    for (std::size_t n = start_index(); n <= big_n; ++n) acc += (*this)(n);
    return static_cast<double>(acc);
  }

  std::string describe() const {
    return std::visit(
        [](const auto& w) -> std::string {
          using W = std::decay_t<decltype(w)>;
          if constexpr (std::is_same_v<W, Monomial>) return "monomial:" + detail::format_double(w.p);
          else if constexpr (std::is_same_v<W, Exponential>) return "exponential:" + detail::format_double(w.rate);
          else return "custom:" + w.name;
        },
        weights_);
  }

 private:
  explicit WeightSequence(Variant v) : weights_(std::move(v)) {}
  Variant weights_;
};

/// sum_{n>=start} a_n C_n with a certified truncation error, plus a closed
/// form where one exists. Geometric decay with exponential weights: the exact
/// value C / ((1-b)(1-e^p b)). Power law with monomial weights: the upper
/// bound c (zeta(q-1-p)/(q-1) + zeta(q-p)) from C_n <= c(n^{-q} + n^{1-q}/(q-1)),
/// and the leading-order estimate c zeta(q-1-p)/(q-1), which replaces C_n by
/// its integral lower bound and is not an upper bound.
struct WeightedTailSeries {
  SeriesValue series;
  std::optional<double> closed_form;
  std::optional<double> integral_estimate;
};

namespace detail {

// Geometric-type sum: terms t_n for n >= start, with a ratio bound rho(n) on
// t_{k+1}/t_k valid for all k >= n.
template <typename Term, typename Ratio>
SeriesValue ratio_bounded_sum(std::size_t start, Term&& term, Ratio&& ratio_bound) {
  SeriesValue out;
  long double acc = 0.0L;
  for (std::size_t n = start;; ++n) {
    const double t = term(n);
    acc += t;
    ++out.terms_used;
    const double rho = ratio_bound(n);
    if (rho < 1.0) {
      const double tail = t * rho / (1.0 - rho);
      if (tail <= series_tolerance(static_cast<double>(acc))) {
        out.value = static_cast<double>(acc);
        out.truncation_error = tail;
        return out;
      }
    }
    if (out.terms_used > 50'000'000) {
      out.value = static_cast<double>(acc);
      out.truncation_error = std::numeric_limits<double>::infinity();
      out.converged = false;
      return out;
    }
  }
}

inline SeriesValue uncertified_sum(std::size_t start, const std::function<double(std::size_t)>& term) {
  SeriesValue out;
  long double acc = 0.0L;
  int small_run = 0;
  for (std::size_t n = start; n < start + 10'000'000; ++n) {
    const double t = term(n);
    acc += t;
    ++out.terms_used;
    small_run = (std::abs(t) <= 1e-3 * series_tolerance(static_cast<double>(acc))) ? small_run + 1 : 0;
    if (small_run >= 1000) break;
  }
  out.value = static_cast<double>(acc);
  out.truncation_error = std::numeric_limits<double>::infinity();
  out.converged = false;
  return out;
}

}  // namespace detail

inline WeightedTailSeries weighted_tail_series(const WeightSequence& weights, const DecayModel& model) {
  WeightedTailSeries result;
  const std::size_t start = weights.start_index();
  const auto* custom_w = std::get_if<WeightSequence::Custom>(&weights.variant());

  // Finite support on either side: direct finite sum.
  const auto* expl = model.get_if<DecayModel::Explicit>();
  std::optional<std::size_t> last;
  if (expl) last = expl->probabilities.size();
  if (custom_w && custom_w->last_nonzero) last = last ? std::min(*last, *custom_w->last_nonzero) : *custom_w->last_nonzero;
  if (last) {
    long double acc = 0.0L;
    double err = 0.0;
    for (std::size_t n = start; n <= *last; ++n) {
      const double a = weights(n);
      if (a == 0.0) continue;
      const SeriesValue c = tail_sum(model, n);
      acc += static_cast<long double>(a) * c.value;
      err += a * c.truncation_error;
      ++result.series.terms_used;
    }
    result.series.value = static_cast<double>(acc);
    result.series.truncation_error = err;
    return result;
  }

  if (const auto* geo = model.get_if<DecayModel::Geometric>()) {
    const double c = geo->c;
    const double b = geo->b;
    const double scale = c / (1.0 - b);
    if (const auto* ew = std::get_if<WeightSequence::Exponential>(&weights.variant())) {
      require(ew->rate < -std::log(b), ErrorKind::divergence,
              "exponential weights over geometric decay require p < |ln b| (p=" + detail::format_double(ew->rate) +
                  ", |ln b|=" + detail::format_double(-std::log(b)) + ")");
      const double rho = std::exp(ew->rate) * b;
      result.series = detail::ratio_bounded_sum(
          start, [&](std::size_t n) { return scale * std::pow(rho, static_cast<double>(n)); },
          [rho](std::size_t) { return rho; });
      result.closed_form = c / ((1.0 - b) * (1.0 - rho));
      return result;
    }
    if (const auto* mw = std::get_if<WeightSequence::Monomial>(&weights.variant())) {
      const double p = mw->p;
      result.series = detail::ratio_bounded_sum(
          start, [&](std::size_t n) { return std::pow(static_cast<double>(n), p) * scale * std::pow(b, static_cast<double>(n)); },
          [p, b](std::size_t n) { return std::pow(1.0 + 1.0 / static_cast<double>(n), p) * b; });
      return result;
    }
    result.series = detail::uncertified_sum(start, [&](std::size_t n) { return weights(n) * scale * std::pow(b, static_cast<double>(n)); });
    return result;
  }

  if (const auto* pl = model.get_if<DecayModel::PowerLaw>()) {
    require(pl->q > 1.0, ErrorKind::divergence, "power-law decay requires q > 1 for summability");
    const auto* mw = std::get_if<WeightSequence::Monomial>(&weights.variant());
    require(mw != nullptr, ErrorKind::divergence,
            "weighted tail series over a power law needs monomial weights (exponential weights diverge)");
    const double p = mw->p;
    const double q = pl->q;
    const double c = pl->c;
    require(p < q - 2.0, ErrorKind::divergence,
            "monomial weights over power-law decay require p < q - 2 (p=" + detail::format_double(p) +
                ", q=" + detail::format_double(q) + ")");
    // head: n < cut with C_n accumulated backwards from zeta(q, cut); tail:
    // Euler–Maclaurin expansion of C_n = c zeta(q, n) summed against n^p.
    for (std::size_t cut = 64;; cut *= 4) {
      const SeriesValue at_cut = hurwitz_tail(q, cut);
      long double cn = at_cut.value;
      long double head = 0.0L;
      long double weight_sum = 0.0L;
      for (std::size_t n = cut; n-- > 1;) {
        cn += std::pow(static_cast<long double>(n), -static_cast<long double>(q));
        const long double a = std::pow(static_cast<long double>(n), static_cast<long double>(p));
        head += a * cn;
        weight_sum += a;
      }
      const SeriesValue h0 = hurwitz_tail(q - 1.0 - p, cut);
      const SeriesValue h1 = hurwitz_tail(q - p, cut);
      const SeriesValue h2 = hurwitz_tail(q + 1.0 - p, cut);
      const SeriesValue h3 = hurwitz_tail(q + 3.0 - p, cut);
      const double tail = h0.value / (q - 1.0) + 0.5 * h1.value + q / 12.0 * h2.value;
      const double remainder = q * (q + 1.0) * (q + 2.0) / 720.0 * (h3.value + h3.truncation_error);
      const double head_err = at_cut.truncation_error * static_cast<double>(weight_sum);
      const double err = remainder + h0.truncation_error / (q - 1.0) + 0.5 * h1.truncation_error +
                         q / 12.0 * h2.truncation_error + head_err;
      const double value = static_cast<double>(head) + tail;
      if (c * err <= series_tolerance(c * value) || cut > (std::size_t{1} << 22)) {
        result.series.value = c * value;
        result.series.truncation_error = c * err;
        result.series.terms_used = cut - 1;
        result.series.converged = c * err <= series_tolerance(c * value);
        break;
      }
    }
    const double z = zeta(q - 1.0 - p).value;
    result.closed_form = c * (z / (q - 1.0) + zeta(q - p).value);
    result.integral_estimate = c * z / (q - 1.0);
    return result;
  }

  // CustomTail model
  result.series = detail::uncertified_sum(start, [&](std::size_t n) { return weights(n) * tail_sum(model, n).value; });
  return result;
}

}  // namespace bcmoments
