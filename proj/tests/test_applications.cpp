#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include "bcmoments/glivenko.hpp"
#include "bcmoments/lil.hpp"
#include "bcmoments/mdf.hpp"
#include "bcmoments/rates.hpp"
#include "bcmoments/segments.hpp"
#include "bcmoments/slln.hpp"

using namespace bcmoments;

TEST(MdfFirstOrder, Examples) {
  EXPECT_DOUBLE_EQ(mdf_first_order(DecayModel::explicit_list({0.5, 0.25})).value, 0.75);
  EXPECT_NEAR(mdf_first_order(DecayModel::geometric(1, 0.5)).value, 1.0, 1e-15);
  long double direct = 0.0L;
  const std::size_t big = 2'000'000;
  for (std::size_t n = big; n >= 1; --n) direct += 1.0L / (static_cast<long double>(n) * n);
  const auto z2 = mdf_first_order(DecayModel::power_law(1, 2));
  EXPECT_NEAR(z2.value, static_cast<double>(direct) + 1.0 / (big + 0.5), 1e-12);
  EXPECT_NEAR(z2.value, std::numbers::pi * std::numbers::pi / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(mdf_tail_bound(z2, 4.0), z2.value / 4.0);
  try {
    mdf_first_order(DecayModel::power_law(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
  }
}

TEST(MdfBounds, RelabelledMomentBounds) {
  const auto m = DecayModel::geometric(1, 0.5);
  const auto poly = mdf_polynomial(1.0, m);
  EXPECT_EQ(poly.formula_id, "cor3.4");
  EXPECT_DOUBLE_EQ(poly.value, poly_moment_bound(1.0, m).value);
  EXPECT_NEAR(mdf_tail_bound(poly, 3.0), poly.value / 9.0, 1e-15);
  const auto ex = mdf_exponential(0.5, m);
  EXPECT_EQ(ex.formula_id, "cor3.5");
  EXPECT_DOUBLE_EQ(ex.value, exp_moment_bound(0.5, m).value);
  EXPECT_NEAR(mdf_tail_bound(ex, 2.0), ex.value * std::exp(-1.0), 1e-15);
}

TEST(Hoeffding, Examples) {
  EXPECT_NEAR(hoeffding_bound(100, 0.1), 2.0 * std::exp(-2.0), 1e-15);
  EXPECT_DOUBLE_EQ(hoeffding_bound(100, 0.0), 2.0);
  EXPECT_NEAR(hoeffding_bound(50, 0.2), 2.0 * std::exp(-4.0), 1e-15);
  EXPECT_THROW(hoeffding_bound(0, 0.1), Error);
}

TEST(LdpMdf, Examples) {
  EXPECT_NEAR(ldp_mdf_bound(std::log(2.0), 1e-12, 1.0).value, 4.0, 1e-10);
  EXPECT_NEAR(ldp_mdf_bound(1.0, 0.5, 1.0).value, 1.0 / ((1 - std::exp(-1.0)) * (1 - std::exp(-0.5))), 1e-13);
  EXPECT_THROW(ldp_mdf_bound(1.0, 1.0, 1.0), Error);
  // exponential moment bound for Geometric(C, e^{-rate}) minus its additive 1
  for (auto [rate, p, c] : {std::tuple{1.0, 0.5, 1.0}, std::tuple{2.0, 0.3, 0.4}, std::tuple{0.7, 0.1, 0.9}}) {
    const double k2 = exp_moment_bound(p, DecayModel::geometric(c, std::exp(-rate))).value - 1.0;
    const double ldp = ldp_mdf_bound(rate, p, c).value;
    EXPECT_NEAR(k2, ldp, 1e-9 * ldp);
  }
}

TEST(Vc, BoundExamples) {
  const GrowthFunction linear = [](double x) { return x + 1.0; };
  EXPECT_NEAR(vc_bound(800, 0.2, linear), 4.0 * 1601.0 * std::exp(-4.0), 1e-12);
  EXPECT_THROW(vc_bound(199, 0.1, linear), Error);
  EXPECT_NEAR(vc_bound(300, 0.1, [](double) { return 1.0; }), 4.0 * std::exp(-0.01 * 300 / 8.0), 1e-15);
}

TEST(Vc, LambdaSeriesDiverges) {
  const GrowthFunction linear = [](double x) { return x + 1.0; };
  const auto s = vc_lambda_series(10, 0.5, 0.5, linear, 2000);
  EXPECT_TRUE(s.divergent);
  EXPECT_FALSE(s.series.converged);
  EXPECT_NEAR(s.partial_sums.front(), std::exp(0.25 * 10 / 8.0) / (std::pow(10.0, 1.5) * 21.0), 1e-15);
  EXPECT_TRUE(std::is_sorted(s.partial_sums.begin(), s.partial_sums.end()));
  // terms eventually grow without bound
  double prev = 0.0;
  for (std::size_t h : {500u, 1000u, 2000u}) {
    const double v = vc_lambda_series(10, 0.5, 0.5, linear, h).series.value;
    EXPECT_GT(v, 10.0 * std::max(prev, 1.0));
    prev = v;
  }
}

TEST(Cramer, GaussianMatchesClosedForm) {
  const auto cgf = gaussian_cgf();
  EXPECT_NEAR(cramer_rate(cgf, 1.0).rate, 0.5, 1e-8);
  EXPECT_EQ(cramer_rate(cgf, 0.0).rate, 0.0);
  for (double x = -3.0; x <= 3.0; x += 0.125) {
    EXPECT_NEAR(legendre_transform(cgf, x).first, 0.5 * x * x, 1e-8) << x;
  }
  const auto shifted = gaussian_cgf(1.0, 2.0);
  EXPECT_NEAR(cramer_rate(shifted, 1.0).rate, 1.0 / 8.0, 1e-8);
}

TEST(Cramer, RademacherAndBernoulli) {
  const auto rad = rademacher_cgf();
  EXPECT_NEAR(cramer_rate(rad, 1.0).rate, std::log(2.0), 1e-8);
  // Lambda*(x) = ((1+x)/2) ln(1+x) + ((1-x)/2) ln(1-x)
  for (double x : {0.1, 0.5, 0.9}) {
    const double exact = 0.5 * (1 + x) * std::log1p(x) + 0.5 * (1 - x) * std::log1p(-x);
    EXPECT_NEAR(cramer_rate(rad, x).rate, exact, 1e-9);
  }
  for (double p : {0.2, 0.5}) {
    for (double t : {p + 0.1, 0.9}) {
      EXPECT_NEAR(legendre_transform(bernoulli_cgf(p), t).first, bernoulli_kl(t, p), 1e-9);
    }
  }
  const auto asym = cramer_rate(bernoulli_cgf(0.2), 0.15);
  EXPECT_NEAR(asym.rate, std::min(bernoulli_kl(0.35, 0.2), bernoulli_kl(0.05, 0.2)), 1e-9);
}

TEST(Cramer, RejectsInfiniteCgf) {
  Cgf bad{[](double l) { return l > 0.05 ? std::numeric_limits<double>::infinity() : 0.0; }, 0.0};
  EXPECT_THROW(cramer_rate(bad, 1.0), Error);
}

TEST(Sanov, BinaryClosedForm) {
  const auto r = sanov_rate({0.5, 0.5}, 0, 0.6);
  EXPECT_NEAR(r.rate, 0.6 * std::log(1.2) + 0.4 * std::log(0.8), 1e-12);
  EXPECT_NEAR(r.rate, 0.020136, 1e-6);
  EXPECT_EQ(sanov_rate({0.5, 0.5}, 0, 0.5).rate, 0.0);
  EXPECT_THROW(sanov_rate({0.5, 0.5}, 0, 1.1), Error);
  EXPECT_NEAR(sanov_rate({0.25, 0.75}, 0, 1.0).rate, std::log(4.0), 1e-15);
}

TEST(Sanov, TiltingMatchesSimplexGrid) {
  for (const auto& [mu, t] : std::vector<std::pair<std::vector<double>, double>>{
           {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.5}, {{0.2, 0.5, 0.3}, 0.45}, {{0.1, 0.6, 0.3}, 0.7}}) {
    const auto r = sanov_rate(mu, 0, t);
    // grid search over nu(a) in [t, 1], nu(b) free, nu(c) = rest
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    const int steps = 2000;
    for (int i = 0; i <= steps; ++i) {
      const double a = t + (1.0 - t) * i / steps;
      for (int j = 0; j <= steps; ++j) {
        const double b = (1.0 - a) * j / steps;
        const std::vector<double> nu{a, b, std::max(0.0, 1.0 - a - b)};
        const double d = kl_divergence(nu, mu);
        if (d < best) {
          best = d;
          arg = nu;
        }
      }
    }
    EXPECT_NEAR(r.rate, best, 1e-4);
    EXPECT_LE(r.rate, best + 1e-12);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.argmin[i], arg[i], 1e-3);
  }
  const auto u = sanov_rate({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0, 0.5);
  EXPECT_NEAR(u.argmin[1], 0.25, 1e-12);
  EXPECT_NEAR(u.rate, kl_divergence({0.5, 0.25, 0.25}, {1.0 / 3, 1.0 / 3, 1.0 / 3}), 1e-12);
}

TEST(Glivenko, KolmogorovDistance) {
  EXPECT_DOUBLE_EQ(kolmogorov_distance({0.3}), 0.7);
  EXPECT_DOUBLE_EQ(kolmogorov_distance({0.8}), 0.8);
  // brute force over a fine grid of x
  const std::vector<double> u{0.05, 0.2, 0.21, 0.7, 0.9};
  double brute = 0.0;
  for (double x : u) {
    for (double side : {-1e-12, 0.0}) {
      const double at = x + side;
      const double fn = static_cast<double>(std::count_if(u.begin(), u.end(), [&](double v) { return v <= at; })) / 5.0;
      brute = std::max(brute, std::abs(fn - at));
    }
  }
  EXPECT_NEAR(kolmogorov_distance(u), brute, 1e-11);
}

TEST(Glivenko, SinglePointAndLargeEps) {
  GcConfig one;
  one.eps = {0.5};
  one.eta = 0.1;
  one.n_max = 1;
  one.tested_n = {1};
  one.reps = 2000;
  const auto r1 = gc_simulate(one);
  EXPECT_DOUBLE_EQ(r1.exceedance[0][0], 1.0);

  GcConfig big;
  big.eps = {0.9};
  big.eta = 0.1;
  big.n_max = 100;
  big.tested_n = {};
  big.reps = 5000;
  const auto r2 = gc_simulate(big);
  // D_1 = max(U, 1-U) >= 0.9 with probability 0.2; later n add O(n 0.1^{0.9n})
  const auto zero = std::count(r2.counts[0].begin(), r2.counts[0].end(), 0u);
  const double se = std::sqrt(0.8 * 0.2 / big.reps);
  EXPECT_NEAR(static_cast<double>(zero) / big.reps, 0.8, 4.0 * se);
}

TEST(Glivenko, SkippingMatchesFullRecomputation) {
  GcConfig cfg;
  cfg.eps = {0.1, 0.2, 0.3};
  cfg.eta = 0.05;
  cfg.n_max = 300;
  cfg.tested_n = {7, 200};
  cfg.reps = 50;
  cfg.seed = 99;
  for (const auto& dist : {uniform01(), exponential_distribution(2.0)}) {
    cfg.dist = dist;
    const auto res = gc_simulate(cfg);
    for (std::size_t r = 0; r < cfg.reps; ++r) {
      const CounterStream stream(cfg.seed, r);
      std::vector<double> u;
      std::vector<std::uint32_t> count(3, 0);
      for (std::size_t n = 1; n <= cfg.n_max; ++n) {
        u.push_back(dist.cdf(dist.quantile(stream.uniform(n))));
        std::vector<double> s = u;
        std::sort(s.begin(), s.end());
        const double d = kolmogorov_distance(s);
        for (int e = 0; e < 3; ++e) count[e] += d >= cfg.eps[e];
      }
      for (int e = 0; e < 3; ++e) EXPECT_EQ(res.counts[e][r], count[e]) << dist.name << " rep " << r;
    }
  }
}

TEST(Glivenko, PerNExceedanceBelowCellBound) {
  GcConfig cfg;
  cfg.eps = {0.2};
  cfg.eta = 0.1;
  cfg.n_max = 200;
  cfg.tested_n = {50, 100, 200};
  cfg.reps = 4000;
  const auto res = gc_simulate(cfg);
  for (std::size_t t = 0; t < res.tested_n.size(); ++t) {
    EXPECT_LE(res.exceedance[0][t], res.exceedance_bound[0][t]);
  }
  EXPECT_NEAR(res.exceedance_bound[0][2], 5.0 * 2.0 * std::exp(-2.0 * 200 * 0.04), 1e-18);
  EXPECT_TRUE(res.report.consistent());
}

TEST(Glivenko, ChainConstantAndDomain) {
  const double eps = 0.2;
  const double eta = 0.1;
  const double expected = 1.0 + 10.0 / ((1.0 - std::exp(-0.08)) * (1.0 - std::exp(-0.06)));
  EXPECT_NEAR(gc_chain_constant(eps, eta), expected, 1e-9);
  // equals 1 + sum_{n>=1} e^{2 eta^2 n} C_n with the cell-bound tails, up to the dropped first factor
  double series = 0.0;
  for (int n = 1; n < 20000; ++n) {
    series += std::exp(2 * eta * eta * n) * gc_cell_bound(n, eps) / (1.0 - std::exp(-2 * eps * eps));
  }
  EXPECT_LE(1.0 + series, gc_chain_constant(eps, eta));
  EXPECT_THROW(gc_chain_constant(0.2, 0.2), Error);
  GcConfig bad;
  bad.eta = 0.3;
  EXPECT_THROW(gc_simulate(bad), Error);
}

TEST(Partitions, CountMatchesBruteForce) {
  // brute force: count multisets of parts >= 2 summing to m via compositions deduplicated
  const std::function<long(int, int)> count = [&](int m, int max_part) -> long {
    if (m == 0) return 1;
    long c = 0;
    for (int p = 2; p <= std::min(m, max_part); ++p) c += count(m - p, p);
    return c;
  };
  for (int q = 1; q <= 8; ++q) {
    std::set<std::vector<int>> seen;
    // enumerate all compositions of 2q with parts >= 2 and sort each
    const std::function<void(int, std::vector<int>&)> compose = [&](int m, std::vector<int>& cur) {
      if (m == 0) {
        auto s = cur;
        std::sort(s.rbegin(), s.rend());
        seen.insert(s);
        return;
      }
      for (int p = 2; p <= m; ++p) {
        cur.push_back(p);
        compose(m - p, cur);
        cur.pop_back();
      }
    };
    std::vector<int> cur;
    compose(2 * q, cur);
    const auto parts = integer_partitions(2 * q, 2);
    EXPECT_EQ(parts.size(), seen.size()) << q;
    EXPECT_EQ(static_cast<long>(parts.size()), count(2 * q, 2 * q));
    for (const auto& p : parts) EXPECT_TRUE(seen.count(p));
  }
  EXPECT_EQ(integer_partitions(4, 2), (std::vector<std::vector<int>>{{4}, {2, 2}}));
}

namespace {
// E[S_k^{2q}] for Rademacher by full enumeration of sign vectors
double rademacher_even_moment(int k, int q) {
  long double acc = 0.0L;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    const int s = 2 * std::popcount(mask) - k;
    acc += std::pow(static_cast<long double>(s), 2 * q);
  }
  return static_cast<double>(acc / (1u << k));
}
}  // namespace

TEST(SllnPartition, Examples) {
  for (int k = 1; k <= 12; ++k) {
    EXPECT_DOUBLE_EQ(slln_partition_bound(2, {1, 0, 1}, k), 12.0 * k * k);
    EXPECT_DOUBLE_EQ(rademacher_even_moment(k, 2), 3.0 * k * k - 2.0 * k);
    EXPECT_DOUBLE_EQ(slln_partition_bound(1, {1}, k), rademacher_even_moment(k, 1));
    EXPECT_DOUBLE_EQ(slln_partition_bound(1, {2.5}, k), 2.5 * k);
    EXPECT_DOUBLE_EQ(slln_partition_bound(3, {1, 0, 3, 0, 15}, k), 1710.0 * k * k * k);
  }
  EXPECT_THROW(slln_partition_bound(3, {1, 0, 3}, 2), Error);
}

TEST(SllnPartition, DominatesExactRademacherMoments) {
  for (int q = 1; q <= 3; ++q) {
    const auto m = sampler_moments(SllnSampler::rademacher, q);
    for (int k = 2; k <= 12; ++k) {
      const double exact = rademacher_even_moment(k, q);
      const double bound = slln_partition_bound(q, m, k);
      EXPECT_LE(exact, bound) << "q=" << q << " k=" << k;
      if (q == 1) EXPECT_DOUBLE_EQ(exact, bound);
    }
  }
}

TEST(SllnPartition, DominatesGaussianSixthMoment) {
  // S_k ~ N(0, k): E[S_k^6] = 15 k^3
  const auto m = sampler_moments(SllnSampler::normal, 3);
  EXPECT_EQ(m, (std::vector<double>{1, 0, 3, 0, 15}));
  for (int k = 1; k <= 50; ++k) EXPECT_LE(15.0 * k * k * k, slln_partition_bound(3, m, k));
}

TEST(SllnReport, PropertiesAndDomain) {
  SllnConfig cfg;
  cfg.sampler = SllnSampler::rademacher;
  cfg.eps = {0.5};
  cfg.n_max = 10000;
  cfg.reps = 200;
  const auto res = slln_mdf_report(cfg);
  EXPECT_TRUE(res.tails_nonincreasing);
  for (auto c : res.counts[0]) EXPECT_LT(c, cfg.n_max);
  EXPECT_FALSE(res.report.rows[0].theoretical.has_value());

  cfg.sampler = SllnSampler::zero;
  const auto zero = slln_mdf_report(cfg);
  for (auto c : zero.counts[0]) EXPECT_EQ(c, 0u);

  cfg.p = 2.0;
  EXPECT_THROW(slln_mdf_report(cfg), Error);
}

TEST(Lil, BridgeMaxInvertsCrossingProbability) {
  for (auto [a, b, dt] : {std::tuple{0.0, 0.5, 1.0}, std::tuple{1.0, -2.0, 4.0}, std::tuple{0.3, 0.3, 0.1}}) {
    for (double u : {0.9, 0.5, 0.1, 1e-6}) {
      const double m = bridge_max(a, b, dt, u);
      EXPECT_GE(m, std::max(a, b) - 1e-12);
      EXPECT_NEAR(bridge_crossing_probability(a, b, dt, m), u, 1e-12);
    }
    EXPECT_NEAR(bridge_max(a, b, dt, 1.0), std::max(a, b), 1e-12);
  }
}

TEST(Lil, BridgeSamplerMatchesClosedForm) {
  const double a = 0.0, b = 0.5, dt = 1.0, level = 1.0;
  const std::size_t n = 100000;
  const double p = bridge_crossing_probability(a, b, dt, level);
  double hits = 0.0;
  for (std::size_t i = 0; i < n; ++i) hits += bridge_max(a, b, dt, CounterStream(7, 0).uniform(i)) >= level;
  const double est = hits / n;
  const double se = std::sqrt(p * (1 - p) / n);
  EXPECT_LE(std::abs(est - p), 4.0 * se);
}

TEST(Lil, BridgeClosedFormAgainstFineGridEuler) {
  // discretized bridge from a to b; the grid maximum approaches the closed form from below
  const double a = 0.0, b = 0.5, dt = 1.0, level = 1.0;
  const int steps = 2000;
  const std::size_t paths = 4000;
  StreamCursor cur(CounterStream(11, 0));
  double hits = 0.0;
  std::vector<double> w(steps + 1);
  for (std::size_t i = 0; i < paths; ++i) {
    w[0] = 0.0;
    for (int j = 1; j <= steps; ++j) w[j] = w[j - 1] + std::sqrt(dt / steps) * cur.normal();
    double mx = -1e300;
    for (int j = 0; j <= steps; ++j) {
      const double s = dt * j / steps;
      mx = std::max(mx, a + w[j] - (s / dt) * (w[steps] - (b - a)));
    }
    hits += mx >= level;
  }
  const double p = bridge_crossing_probability(a, b, dt, level);
  const double est = hits / paths;
  const double se = std::sqrt(p * (1 - p) / paths);
  EXPECT_LE(est, p + 4 * se);
  EXPECT_GE(est, p - 4 * se - 0.03);  // grid bias ~ 0.58 sqrt(dt/steps) in level
}

TEST(Lil, FirstIndexRule) {
  EXPECT_EQ(lil_first_index(2.0), 2);   // 2^1 < e < 2^2
  EXPECT_EQ(lil_first_index(3.0), 1);   // 3 > e
  EXPECT_EQ(lil_first_index(1.5), 3);   // 1.5^2 = 2.25, 1.5^3 = 3.375
  for (double alpha : {1.1, 1.5, 2.0, 2.718, 3.0, 10.0}) {
    const int n0 = lil_first_index(alpha);
    EXPECT_GT(std::pow(alpha, n0), std::numbers::e);
    if (n0 > 1) EXPECT_LE(std::pow(alpha, n0 - 1), std::numbers::e);
  }
  EXPECT_THROW(lil_first_index(1.0), Error);
}

TEST(Lil, MeanCountDecreasesInAlpha) {
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1.5, 2.0, 3.0, 10.0}) {
    LilConfig cfg;
    cfg.alpha = alpha;
    cfg.reps = 2000;
    const auto res = lil_simulate(cfg);
    const double mean = res.report.rows[0].empirical.estimate;
    EXPECT_TRUE(std::isfinite(mean));
    EXPECT_LE(mean, prev) << alpha;
    EXPECT_TRUE(res.report.consistent());
    prev = mean;
  }
}

TEST(Segments, FastScanMatchesQuadraticOracle) {
  for (double p : {0.3, 0.5, 0.8}) {
    for (double t : {1.0, 0.75, 0.6, 0.9}) {
      if (t <= p) continue;
      for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const CounterStream s(5, rep);
        std::vector<std::uint8_t> x(500);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.uniform(i + 1) < p;
        EXPECT_EQ(longest_segments(x, t), longest_segments_reference(x, t)) << p << " " << t;
      }
    }
  }
  EXPECT_EQ(longest_segments({1}, 1.0), std::vector<std::uint32_t>{1});
  EXPECT_EQ(longest_segments({0}, 1.0), std::vector<std::uint32_t>{0});
  EXPECT_EQ(longest_segments({1, 1, 0, 1, 1, 1, 0}, 1.0), (std::vector<std::uint32_t>{1, 2, 2, 2, 2, 3, 3}));
}

TEST(Segments, DualityOnSampledPaths) {
  for (std::uint64_t rep = 0; rep < 10000; ++rep) {
    const CounterStream s(17, rep);
    std::vector<std::uint8_t> x(200);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.uniform(i + 1) < 0.5;
    const auto r = longest_segments(x, 0.8);
    const auto tau = first_occurrence_times(r);
    ASSERT_TRUE(std::is_sorted(tau.begin(), tau.end()));
    for (std::uint32_t len = 1; len <= r.back() + 1; ++len) {
      for (std::size_t n = 1; n <= x.size(); n += 13) {
        const bool lhs = r[n - 1] >= len;
        const bool rhs = len <= tau.size() && tau[len - 1] <= n;
        ASSERT_EQ(lhs, rhs);
      }
    }
  }
}

TEST(Segments, LongestRunLaw) {
  SegmentsConfig cfg;
  cfg.p_head = 0.5;
  cfg.threshold = 1.0;
  cfg.n_max = 100000;
  cfg.reps = 200;
  const auto res = rare_segments(cfg);
  EXPECT_NEAR(res.rate, std::log(2.0), 1e-15);
  EXPECT_NEAR(res.report.rows[0].theoretical.value(), 1.0 / std::log(2.0), 1e-12);
  // E[R_n] = log2(n/2) + gamma/ln 2 - 1/2 + o(1) for the longest head run
  double mean_r = 0.0;
  for (double v : res.normalized) mean_r += v * std::log(1e5);
  mean_r /= res.normalized.size();
  EXPECT_NEAR(mean_r, std::log2(0.5e5) + 0.5772156649 / std::log(2.0) - 0.5, 0.5);
  EXPECT_THROW(rare_segments({.p_head = 0.5, .threshold = 0.5}), Error);
}

TEST(Segments, RateMatchesCramer) {
  for (auto [p, t] : {std::pair{0.5, 0.7}, std::pair{0.2, 0.5}}) {
    EXPECT_NEAR(legendre_transform(bernoulli_cgf(p), t).first, bernoulli_kl(t, p), 1e-9);
  }
}

TEST(Reports, CsvAndJson) {
  MDFReport rep;
  rep.application = "gc";
  rep.seed = 3;
  rep.reps = 2;
  std::vector<std::uint32_t> counts{0, 2};
  add_tail_rows(rep, 0.2, counts, 2, [](int k) -> std::optional<double> { return 1.0 / k; });
  EXPECT_EQ(mdf_csv_header(), "application,epsilon,order,theoretical,empirical,stderr,reps,seed");
  const std::string csv = mdf_csv_rows(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_EQ(csv.substr(0, 7), "gc,0.2,");
  const json j = to_json(rep);
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["rows"][0]["empirical"].get<double>(), 0.5);
  EXPECT_TRUE(rep.consistent());
}
