#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "oracles.hpp"
#include "pmorder/abc.hpp"
#include "pmorder/error.hpp"
#include "pmorder/generators.hpp"
#include "pmorder/normal.hpp"

using namespace pmorder;
using doctest::Approx;

namespace {

const boost::math::normal_distribution<long double> kStdNormal;

long double reference_quantile(long double u) { return boost::math::quantile(kStdNormal, u); }

// g-and-k formula evaluated in long double from the reference quantile.
long double reference_gk(long double u, const GandKParams& p) {
  const long double z = reference_quantile(u);
  const long double e = std::exp(-static_cast<long double>(p.g) * z);
  return p.A + p.B * (1.0L + p.c * (1.0L - e) / (1.0L + e)) * std::pow(1.0L + z * z, static_cast<long double>(p.k)) * z;
}

void check_law(const DiscreteDistribution& q, std::vector<double> atoms, std::vector<double> probs) {
  REQUIRE(q.size() == atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    CHECK(q.atom(i) == Approx(atoms[i]));
    CHECK(q.prob(i) == Approx(probs[i]));
  }
}

}  // namespace

TEST_CASE("normal quantile against an independent implementation") {
  for (double u : {1e-300, 1e-100, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1 - 1e-10}) {
    const double ref = static_cast<double>(reference_quantile(u));
    CHECK(std::abs(normal_quantile(u) - ref) < 1e-9 * std::max(1.0, std::abs(ref)));
  }
  for (int i = 1; i < 1000; ++i) {
    const double u = i / 1000.0;
    CHECK(std::abs(normal_quantile(u) - static_cast<double>(reference_quantile(u))) < 1e-12);
    CHECK(normal_cdf(normal_quantile(u)) == Approx(u).epsilon(1e-14));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("g-and-k inverse cdf") {
  const GandKParams skewed{3.0, 1.0, 0.8, 2.0, 0.5};
  CHECK(gk_inverse_cdf(0.5, skewed) == Approx(3.0));
  const GandKParams gauss{1.5, 2.0, 0.8, 0.0, 0.0};
  for (double u : {0.01, 0.2, 0.5, 0.8, 0.99})
    CHECK(gk_inverse_cdf(u, gauss) == Approx(1.5 + 2.0 * static_cast<double>(reference_quantile(u))).epsilon(1e-12));
  CHECK(std::abs(gk_inverse_cdf(0.8413, skewed) - static_cast<double>(reference_gk(0.8413L, skewed))) < 1e-6);
  Engine gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const double u = uniform01(gen);
    const GandKParams p{uniform01(gen), 0.5 + uniform01(gen), 0.8, 4.0 * uniform01(gen) - 2.0, uniform01(gen)};
    CHECK(std::abs(gk_inverse_cdf(u, p) - static_cast<double>(reference_gk(u, p))) < 1e-8);
  }
  CHECK_THROWS_AS(gk_inverse_cdf(0.0, skewed), Error);
  CHECK_THROWS_AS(gk_inverse_cdf(1.0, skewed), Error);
}

TEST_CASE("g-and-k parameter validation") {
  CHECK_NOTHROW(GandKParams{}.validate());
  CHECK_THROWS_AS((GandKParams{0.0, 0.0, 0.8, 0.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((GandKParams{0.0, 1.0, 0.8, 0.0, -0.6}.validate()), Error);
  // Large c with strong skew folds the curve back on itself.
  CHECK_THROWS_AS((GandKParams{0.0, 1.0, 3.0, 4.0, 0.0}.validate()), Error);
}

TEST_CASE("acceptance region") {
  const GandKParams gauss{};
  for (double eps : {0.1, 0.5, 2.0}) {
    const Interval r = acceptance_region({0.0, 1.0, 0.8, 0.0, 0.0}, 0.0, eps);
    CHECK(r.lo == Approx(static_cast<double>(boost::math::cdf(kStdNormal, -eps))).epsilon(1e-12));
    CHECK(r.hi == Approx(static_cast<double>(boost::math::cdf(kStdNormal, eps))).epsilon(1e-12));
  }
  const Interval all = acceptance_region(gauss, 0.0, 1e6);
  CHECK(all.lo == 0.0);
  CHECK(all.hi == 1.0);
  const Interval none = acceptance_region(gauss, 100.0, 0.5);
  CHECK(none.length() == 0.0);
  CHECK_THROWS_AS(acceptance_region(gauss, 0.0, 0.0), Error);

  Engine gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const GandKParams p{uniform01(gen), 0.5 + uniform01(gen), 0.8, 2.0 * uniform01(gen) - 1.0, 0.3 * uniform01(gen)};
    const double ystar = p.A + 0.5 * (uniform01(gen) - 0.5);
    const double eps = 0.05 + 0.5 * uniform01(gen);
    const Interval r = acceptance_region(p, ystar, eps);
    REQUIRE(r.lo > 0.0);
    REQUIRE(r.hi < 1.0);
    CHECK(std::abs(gk_inverse_cdf(r.lo, p) - (ystar - eps)) < 1e-9);
    CHECK(std::abs(gk_inverse_cdf(r.hi, p) - (ystar + eps)) < 1e-9);
  }
}

TEST_CASE("Poisson-binomial law") {
  Engine gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q(1 + trial % 10);
    for (double& v : q) v = uniform01(gen);
    const auto dp = poisson_binomial(q);
    const auto brute = oracle::bernoulli_sum_enumerated(q);
    REQUIRE(dp.size() == brute.size());
    double total = 0.0, mean = 0.0, target = 0.0;
    for (std::size_t k = 0; k < dp.size(); ++k) {
      CHECK(dp[k] == Approx(brute[k]).epsilon(1e-12));
      total += dp[k];
      mean += k * dp[k];
    }
    for (double v : q) target += v;
    CHECK(total == Approx(1.0).epsilon(1e-14));
    CHECK(mean == Approx(target).epsilon(1e-12));
  }
  const auto bin = poisson_binomial(std::vector<double>(20, 0.3));
  for (int k = 0; k <= 20; ++k) CHECK(bin[k] == Approx(oracle::binomial_pmf(20, k, 0.3)).epsilon(1e-12));
  // Dyadic inputs give exact sums.
  const auto dy = poisson_binomial(std::vector<double>{0.25, 0.5, 0.75});
  CHECK(dy[0] == 0.09375);
  CHECK(dy[3] == 0.09375);
  CHECK_THROWS_AS(poisson_binomial(std::vector<double>{1.5}), Error);
}

TEST_CASE("estimator law examples") {
  const auto even = estimator_laws(2, {0.25, 0.75}, StrataSpec{2});
  CHECK(even.p_bar == 0.5);
  check_law(even.plain, {0.0, 0.5, 1.0}, {0.25, 0.5, 0.25});
  check_law(even.stratified, {0.0, 0.5, 1.0}, {0.25, 0.5, 0.25});

  const auto skew = estimator_laws(2, {0.375, 0.875}, StrataSpec{2});
  CHECK(skew.q[0] == Approx(0.25));
  CHECK(skew.q[1] == Approx(0.75));
  check_law(skew.stratified, {0.0, 0.5, 1.0}, {0.1875, 0.625, 0.1875});
  check_law(skew.plain, {0.0, 0.5, 1.0}, {0.25, 0.5, 0.25});

  const auto single = estimator_laws(1, {0.1, 0.4}, StrataSpec{1});
  CHECK(single.plain == single.stratified);

  CHECK_THROWS_AS(estimator_laws(3, {0.1, 0.4}, StrataSpec{2}), Error);
  CHECK_THROWS_AS(estimator_laws(2, {-0.1, 0.4}, StrataSpec{2}), Error);
}

TEST_CASE("stratified estimator is cx-below the plain one") {
  Engine gen(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + gen() % 10;
    double a = uniform01(gen), b = uniform01(gen);
    if (a > b) std::swap(a, b);
    const auto laws = estimator_laws(n, {a, b}, StrataSpec{n});
    CHECK(laws.plain.mean() == Approx(laws.p_bar).epsilon(1e-12));
    CHECK(laws.stratified.mean() == Approx(laws.p_bar).epsilon(1e-12));
    CHECK(cx_leq(laws.stratified, laws.plain));
    CHECK(majorizes(SimplexWeights(std::vector<double>(n, 1.0 / n)), [&] {
      std::vector<double> e(n);
      double s = 0.0;
      for (double v : laws.q) s += v;
      for (std::size_t i = 0; i < n; ++i) e[i] = s > 0.0 ? laws.q[i] / s : 1.0 / n;
      return SimplexWeights(e);
    }()));
  }
}

TEST_CASE("Bernoulli sums inherit the majorization order") {
  Engine gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 6;
    const auto [lam, mu] = random_majorized_pair(gen, n);
    double top = 0.0;
    for (double v : mu.entries()) top = std::max(top, v);
    const double scale = uniform01(gen) / top;
    std::vector<double> p, q;
    for (double v : lam.entries()) p.push_back(scale * v);
    for (double v : mu.entries()) q.push_back(scale * v);
    auto law = [n](const std::vector<double>& pmf) {
      std::vector<double> atoms(pmf.size());
      for (std::size_t k = 0; k < pmf.size(); ++k) atoms[k] = static_cast<double>(k) / n;
      return DiscreteDistribution(atoms, pmf);
    };
    // The more spread Bernoulli vector gives the less dispersed sum.
    CHECK(cx_leq(law(poisson_binomial(q)), law(poisson_binomial(p))));
  }
}

TEST_CASE("ABC comparison on a location grid") {
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(-1.5 + 0.25 * i);
  const GandKParams p{0.0, 1.0, 0.8, 0.5, 0.1};

  SUBCASE("huge tolerance gives the marginal chain") {
    const auto rep = run_abc_comparison(p, grid, 0.0, 1e6, 4, 0, {});
    CHECK(rep.excluded.empty());
    CHECK(rep.alpha_plain == Approx(rep.alpha_strat));
    CHECK(rep.var_plain == Approx(rep.var_strat));
    for (const auto& s : rep.states) CHECK(s.weight_var_plain == Approx(0.0));
  }
  SUBCASE("single draw makes the two estimators equal") {
    const auto rep = run_abc_comparison(p, grid, 0.3, 0.4, 1, 0, {});
    CHECK(rep.var_plain == Approx(rep.var_strat).epsilon(1e-12));
    CHECK(rep.gap_plain == Approx(rep.gap_strat).epsilon(1e-12));
  }
  SUBCASE("stratification helps") {
    for (std::size_t n : {2, 4, 8}) {
      const auto rep = run_abc_comparison(p, grid, 0.3, 0.4, n, 20000, {1, 0});
      CHECK(rep.var_strat <= rep.var_plain + 1e-10);
      CHECK(rep.alpha_strat >= rep.alpha_plain - 1e-12);
      CHECK(rep.gap_strat >= std::min(rep.gap_plain, 1.0 - rep.rho_star_plain) - 1e-9);
      for (const auto& s : rep.states) {
        CHECK(s.strat_leq_plain);
        CHECK(s.weight_var_strat <= s.weight_var_plain + 1e-12);
      }
      CHECK(rep.emp_accept_plain > 0.0);
      CHECK(rep.emp_var_plain.batch_length == 100);
    }
  }
  SUBCASE("grid values without data support are excluded") {
    std::vector<double> wide = grid;
    wide.push_back(50.0);
    const auto rep = run_abc_comparison(p, wide, 0.3, 0.4, 2, 0, {});
    REQUIRE(rep.excluded.size() == 1);
    CHECK(rep.excluded[0] == 50.0);
    CHECK(rep.states.size() == grid.size());
  }
}

TEST_CASE("ABC MCMC early rejection leaves the chain unchanged") {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(-1.0 + 0.25 * i);
  const GandKParams p{0.0, 1.0, 0.8, 0.5, 0.1};
  for (bool strat : {false, true}) {
    const auto full = run_abc_mcmc(p, grid, 0.2, 0.3, 8, strat, false, 3000, {2, 1}, 4);
    const auto fast = run_abc_mcmc(p, grid, 0.2, 0.3, 8, strat, true, 3000, {2, 1}, 4);
    CHECK(full.trace.states == fast.trace.states);
    CHECK(full.trace.accepted == fast.trace.accepted);
    CHECK(fast.evaluations < full.evaluations);
    if (strat) CHECK(full.pattern_breaks == 0);
  }
}
