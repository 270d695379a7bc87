#include "pmorder/abc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmorder/error.hpp"
#include "pmorder/normal.hpp"
#include "pmorder/spectral.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("abc", what); }

double gk_from_z(double z, const GandKParams& p) {
  const double e = std::exp(-p.g * z);
  const double skew = std::isinf(e) ? -1.0 : (1.0 - e) / (1.0 + e);
  return p.A + p.B * (1.0 + p.c * skew) * std::pow(1.0 + z * z, p.k) * z;
}

// Smallest u in [0, 1] with F^{-1}(u) >= target, to machine precision.
double first_at_least(const GandKParams& p, double target) {
  constexpr double umin = std::numeric_limits<double>::min();
  const double umax = std::nextafter(1.0, 0.0);
  if (gk_inverse_cdf(umin, p) >= target) return 0.0;
  if (gk_inverse_cdf(umax, p) < target) return 1.0;
  double lo = umin, hi = umax;  // F(lo) < target <= F(hi)
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (gk_inverse_cdf(mid, p) >= target) hi = mid;
    else lo = mid;
  }
  return hi;
}

// Largest u in [0, 1] with F^{-1}(u) <= target.
double last_at_most(const GandKParams& p, double target) {
  constexpr double umin = std::numeric_limits<double>::min();
  const double umax = std::nextafter(1.0, 0.0);
  if (gk_inverse_cdf(umax, p) <= target) return 1.0;
  if (gk_inverse_cdf(umin, p) > target) return 0.0;
  double lo = umin, hi = umax;  // F(lo) <= target < F(hi)
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (gk_inverse_cdf(mid, p) <= target) lo = mid;
    else hi = mid;
  }
  return lo;
}

DiscreteDistribution count_law(const std::vector<double>& pmf, std::size_t n) {
  std::vector<double> atoms(pmf.size());
  for (std::size_t k = 0; k < pmf.size(); ++k) atoms[k] = static_cast<double>(k) / static_cast<double>(n);
  double total = 0.0;
  for (double v : pmf) total += v;
  std::vector<double> probs = pmf;
  for (double& v : probs) v /= total;
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

}  // namespace

void GandKParams::validate() const {
  if (!(B > 0.0)) fail("g-and-k scale B must be positive");
  if (!(k > -0.5)) fail("g-and-k kurtosis k must exceed -1/2");
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 10000; ++i) {
    const double v = gk_from_z(normal_quantile(i * 1e-4), *this);
    if (v < prev) fail("g-and-k inverse cdf is not monotone near u = " + std::to_string(i * 1e-4));
    prev = v;
  }
}

double gk_inverse_cdf(double u, const GandKParams& p) {
  if (!(u > 0.0 && u < 1.0)) fail("g-and-k inverse cdf needs u in (0, 1)");
  return gk_from_z(normal_quantile(u), p);
}

Interval acceptance_region(const GandKParams& p, double ystar, double eps) {
  if (!(eps > 0.0)) fail("eps must be positive");
  p.validate();
  Interval r;
  r.lo = first_at_least(p, ystar - eps);
  r.hi = last_at_most(p, ystar + eps);
  if (r.hi < r.lo) r.hi = r.lo;
  return r;
}

Interval StrataSpec::stratum(std::size_t i) const {
  if (i >= n) fail("stratum index out of range");
  const double N = static_cast<double>(n);
  return {static_cast<double>(i) / N, static_cast<double>(i + 1) / N};
}

std::vector<double> poisson_binomial(std::span<const double> q) {
  std::vector<double> pmf{1.0};
  for (double qi : q) {
    if (!(qi >= 0.0 && qi <= 1.0)) fail("Bernoulli parameter outside [0, 1]: " + std::to_string(qi));
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      next[k] += pmf[k] * (1.0 - qi);
      next[k + 1] += pmf[k] * qi;
    }
    pmf = std::move(next);
  }
  return pmf;
}

EstimatorLaws estimator_laws(std::size_t n, Interval region, StrataSpec strata) {
  if (n == 0) fail("need at least one draw");
  if (strata.n != n) fail("strata count does not match N");
  if (region.lo < 0.0 || region.hi > 1.0) fail("region must lie in [0, 1]");
  EstimatorLaws out{0.0, {}, DiscreteDistribution::point_mass(0.0), DiscreteDistribution::point_mass(0.0)};
  out.p_bar = region.length();
  const double N = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Interval a = strata.stratum(i);
    double qi = N * Interval{std::max(a.lo, region.lo), std::min(a.hi, region.hi)}.length();
    if (qi > 1.0 + 1e-12) fail("stratum probability above one");
    out.q.push_back(std::min(qi, 1.0));
  }
  out.plain = count_law(poisson_binomial(std::vector<double>(n, out.p_bar)), n);
  out.stratified = count_law(poisson_binomial(out.q), n);
  return out;
}

Eigen::MatrixXd random_walk_proposal(std::size_t n) {
  if (n == 0) fail("empty grid");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (n == 1) {
    q(0, 0) = 1.0;
    return q;
  }
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    q(x, x == 0 ? 0 : x - 1) += 0.5;
    q(x, x + 1 == q.rows() ? x : x + 1) += 0.5;
  }
  return q;
}

AbcComparison run_abc_comparison(const GandKParams& p, std::span<const double> thetas, double ystar,
                                 double eps, std::size_t n, std::size_t m, RngSpec rng) {
  if (thetas.empty()) fail("empty parameter grid");
  AbcComparison out;
  std::vector<double> kept;
  std::vector<EstimatorLaws> laws;
  for (double theta : thetas) {
    GandKParams pt = p;
    pt.A = theta;
    EstimatorLaws l = estimator_laws(n, acceptance_region(pt, ystar, eps), StrataSpec{n});
    if (l.p_bar <= 0.0) {
      out.excluded.push_back(theta);
      continue;
    }
    kept.push_back(theta);
    laws.push_back(std::move(l));
  }
  if (kept.empty()) fail("every grid value has an empty acceptance region");

  const std::size_t s = kept.size();
  Eigen::VectorXd pi(static_cast<Eigen::Index>(s));
  for (std::size_t x = 0; x < s; ++x) pi(static_cast<Eigen::Index>(x)) = laws[x].p_bar;
  pi /= pi.sum();
  std::vector<std::string> labels;
  for (double t : kept) labels.push_back(std::to_string(t));
  const MarginalChain chain(labels, pi, random_walk_proposal(s));

  std::vector<DiscreteDistribution> wp, ws;
  for (const EstimatorLaws& l : laws) {
    wp.push_back(l.plain.scaled(1.0 / l.p_bar));
    ws.push_back(l.stratified.scaled(1.0 / l.p_bar));
  }
  const WeightAssignment plain(wp), strat(ws);
  const FiniteKernel kp = pseudo_marginal_kernel(chain, plain);
  const FiniteKernel ks = pseudo_marginal_kernel(chain, strat);
  const AcceptanceRates ap = acceptance_rates(chain, plain);
  const AcceptanceRates as = acceptance_rates(chain, strat);

  Eigen::VectorXd f(static_cast<Eigen::Index>(s));
  for (std::size_t x = 0; x < s; ++x) f(static_cast<Eigen::Index>(x)) = kept[x];

  out.alpha_plain = ap.alpha;
  out.alpha_strat = as.alpha;
  out.var_plain = asymptotic_variance(kp, lift_state_function(kp, f));
  out.var_strat = asymptotic_variance(ks, lift_state_function(ks, f));
  out.gap_plain = spectral_gaps(kp).right_gap;
  out.gap_strat = spectral_gaps(ks).right_gap;
  out.rho_star_plain = kp.max_rejection();

  const Eigen::MatrixXd& q = chain.q();
  for (std::size_t x = 0; x < s; ++x) {
    AbcStateSummary st;
    st.theta = kept[x];
    st.p_bar = laws[x].p_bar;
    st.q = laws[x].q;
    st.weight_var_plain = wp[x].variance();
    st.weight_var_strat = ws[x].variance();
    const auto xi = static_cast<Eigen::Index>(x);
    st.alpha_plain = q.row(xi).dot(ap.alpha_xy.row(xi));
    st.alpha_strat = q.row(xi).dot(as.alpha_xy.row(xi));
    st.strat_leq_plain = cx_leq(ws[x], wp[x]);
    out.states.push_back(std::move(st));
  }

  if (m > 0) {
    std::vector<WeightSampler> sp, ss;
    for (std::size_t x = 0; x < s; ++x) {
      sp.push_back(WeightSampler::discrete(wp[x]));
      ss.push_back(WeightSampler::discrete(ws[x]));
    }
    std::size_t init = 0;
    pi.maxCoeff(&init);
    const std::vector<double> fv(f.data(), f.data() + f.size());
    const std::size_t batches = std::max<std::size_t>(2, std::min<std::size_t>(1000, m / 100));
    const ChainTrace tp = run_pseudo_marginal(chain, sp, m, rng, init);
    const ChainTrace ts = run_pseudo_marginal(chain, ss, m, rng, init);
    out.emp_accept_plain = tp.acceptance_rate();
    out.emp_accept_strat = ts.acceptance_rate();
    out.emp_var_plain = batch_means(tp.values(fv), batches);
    out.emp_var_strat = batch_means(ts.values(fv), batches);
  }
  return out;
}

AbcMcmcRun run_abc_mcmc(const GandKParams& p, std::span<const double> thetas, double ystar,
                        double eps, std::size_t n, bool stratified, bool early_rejection,
                        std::size_t m, RngSpec spec, std::size_t init) {
  if (thetas.empty()) fail("empty parameter grid");
  if (init >= thetas.size()) fail("initial state out of range");
  if (n == 0) fail("need at least one draw");
  p.validate();
  const Eigen::MatrixXd q = random_walk_proposal(thetas.size());
  std::vector<std::vector<double>> rows(thetas.size(), std::vector<double>(thetas.size()));
  for (std::size_t x = 0; x < thetas.size(); ++x)
    for (std::size_t y = 0; y < thetas.size(); ++y)
      rows[x][y] = q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));

  Rng rng(spec);
  AbcMcmcRun run;
  std::vector<double> us(n);
  const double N = static_cast<double>(n);

  auto draw_uniforms = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.open_uniform();
      us[i] = stratified ? (static_cast<double>(i) + u) / N : u;
    }
  };
  auto hit = [&](std::size_t theta_idx, std::size_t i) {
    GandKParams pt = p;
    pt.A = thetas[theta_idx];
    ++run.evaluations;
    const double v = std::min(us[i], std::nextafter(1.0, 0.0));
    return std::abs(gk_inverse_cdf(std::max(v, std::numeric_limits<double>::min()), pt) - ystar) <= eps;
  };
  auto full_count = [&](std::size_t y) {
    std::size_t c = 0;
    int phase = 0;  // 0: before hits, 1: inside, 2: after
    for (std::size_t i = 0; i < n; ++i) {
      const bool h = hit(y, i);
      c += h;
      if (h && phase == 2) ++run.pattern_breaks;
      if (h && phase == 0) phase = 1;
      if (!h && phase == 1) phase = 2;
    }
    return c;
  };

  std::size_t x = init;
  draw_uniforms();
  double tx = static_cast<double>(full_count(x)) / N;
  for (std::size_t step = 0; step < m; ++step) {
    const std::size_t y = rng.categorical(rows[x]);
    draw_uniforms();
    const double v = rng.uniform();
    const double qxy = q(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    const double qyx = q(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
    // Accept iff v * T_x * q(x,y) < T_y * q(y,x), i.e. hits > need.
    const double need = v * tx * qxy / qyx * N;
    std::size_t hits = 0;
    bool decided_reject = false;
    if (!early_rejection) {
      hits = full_count(y);
    } else {
      bool seen_hit = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<double>(hits + (n - i)) <= need) {
          decided_reject = true;
          break;
        }
        const bool h = hit(y, i);
        if (stratified && seen_hit && !h) break;  // remaining strata lie past the region
        seen_hit |= h;
        hits += h;
      }
    }
    const double ty = static_cast<double>(hits) / N;
    const bool acc = !decided_reject && static_cast<double>(hits) > need;
    if (acc) {
      x = y;
      tx = ty;
    }
    run.trace.states.push_back(static_cast<std::uint32_t>(x));
    run.trace.weights.push_back(tx);
    run.trace.accepted.push_back(acc);
  }
  return run;
}

}  // namespace pmorder
