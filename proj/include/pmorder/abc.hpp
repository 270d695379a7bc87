#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "pmorder/chains.hpp"
#include "pmorder/samplers.hpp"
#include "pmorder/weightdist.hpp"

namespace pmorder {

struct GandKParams {
  double A = 0.0;
  double B = 1.0;
  double c = 0.8;
  double g = 0.0;
  double k = 0.0;

  // B > 0, k > -1/2 and u -> F^{-1}(u) nondecreasing on a 1e-4 grid.
  void validate() const;
};

double gk_inverse_cdf(double u, const GandKParams& p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi > lo ? hi - lo : 0.0; }
};

/// {u : |F^{-1}(u) - ystar| <= eps}, an interval since F^{-1} is monotone.
/// Endpoints are found by bisection to machine precision in u.
Interval acceptance_region(const GandKParams& p, double ystar, double eps);

/// Equal-measure strata A_i = [(i-1)/N, i/N) of the unit interval.
struct StrataSpec {
  std::size_t n = 1;
  Interval stratum(std::size_t i) const;  // 0-based
};

// Pmf of the number of successes among independent Bernoulli(q_i).
std::vector<double> poisson_binomial(std::span<const double> q);

struct EstimatorLaws {
  double p_bar = 0.0;
  std::vector<double> q;            // N |A_i ∩ region|
  DiscreteDistribution plain;       // Binomial(N, p_bar) / N
  DiscreteDistribution stratified;  // Poisson-binomial(q) / N
};

EstimatorLaws estimator_laws(std::size_t n, Interval region, StrataSpec strata);

/// Random-walk proposal on a path of n states: +-1 with probability 1/2,
/// holding at the ends.
Eigen::MatrixXd random_walk_proposal(std::size_t n);

struct AbcStateSummary {
  double theta = 0.0;
  double p_bar = 0.0;
  std::vector<double> q;
  double weight_var_plain = 0.0;
  double weight_var_strat = 0.0;
  double alpha_plain = 0.0;  // sum_y q(x,y) alpha_xy
  double alpha_strat = 0.0;
  bool strat_leq_plain = false;
};

struct AbcComparison {
  std::vector<AbcStateSummary> states;
  std::vector<double> excluded;  // grid values with an empty acceptance region
  double alpha_plain = 0.0;
  double alpha_strat = 0.0;
  double var_plain = 0.0;
  double var_strat = 0.0;
  double gap_plain = 0.0;
  double gap_strat = 0.0;
  double rho_star_plain = 0.0;
  // Simulation of the same two kernels with discrete weight samplers.
  double emp_accept_plain = 0.0;
  double emp_accept_strat = 0.0;
  BatchMeans emp_var_plain;
  BatchMeans emp_var_strat;
};

/// Location grid theta -> g-and-k with A = theta; uniform prior, so
/// pi(theta) is proportional to the ABC likelihood p_bar(theta). The test
/// function is f(theta) = theta. M = 0 skips the simulation.
AbcComparison run_abc_comparison(const GandKParams& p, std::span<const double> thetas, double ystar,
                                 double eps, std::size_t n, std::size_t m, RngSpec rng);

struct AbcMcmcRun {
  ChainTrace trace;                  // weights hold T = hits / N
  std::uint64_t evaluations = 0;     // inverse-cdf calls
  std::uint64_t pattern_breaks = 0;  // stratified draws whose hit pattern is not 0..01..10..0
};

/// ABC pseudo-marginal MCMC simulating g-and-k data. Each step draws the
/// proposal, all N uniforms, then the acceptance uniform, so the random stream
/// does not depend on `early_rejection`. With early rejection the indicators
/// are evaluated lazily and a proposal is rejected as soon as the remaining
/// strata cannot reach the acceptance threshold; in the stratified case a hit
/// followed by a miss settles the remaining strata.
AbcMcmcRun run_abc_mcmc(const GandKParams& p, std::span<const double> thetas, double ystar,
                        double eps, std::size_t n, bool stratified, bool early_rejection,
                        std::size_t m, RngSpec rng, std::size_t init);

}  // namespace pmorder
