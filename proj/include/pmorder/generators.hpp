#pragma once

// Random instances for property sweeps and experiments. Every generator draws
// only from the engine it is handed, so a seed fixes the instance.

#include <Eigen/Dense>
#include <optional>
#include <random>

#include "pmorder/chains.hpp"
#include "pmorder/weightdist.hpp"

namespace pmorder {

using Engine = std::mt19937_64;

double uniform01(Engine& gen);

// Unit-mean law on `support` distinct positive atoms.
DiscreteDistribution random_unit_mean_law(Engine& gen, std::size_t support);

/// Splits one atom w into w -/+ d (d < w) with half of its mass each. The
/// result dominates q in the convex order.
DiscreteDistribution mean_preserving_spread(Engine& gen, const DiscreteDistribution& q);

// Unit-mean law on [a, b], a <= 1 <= b, with up to `support` atoms.
DiscreteDistribution random_law_on(Engine& gen, double a, double b, std::size_t support);

// Strictly positive target and dense strictly positive proposal.
MarginalChain random_chain(Engine& gen, std::size_t n);

/// Random law on [a, b] with the given mean and variance: three random atoms
/// whose probabilities solve the moment equations, redrawn until they are
/// nonnegative. Empty when `attempts` draws all fail.
std::optional<DiscreteDistribution> random_law_with_moments(Engine& gen, double mu, double sigma2, double a,
                                                            double b, int attempts = 1000);

SimplexWeights random_simplex(Engine& gen, std::size_t n);

// mu at random and lambda = mu D for a random doubly stochastic D, so lambda ≺ mu.
std::pair<SimplexWeights, SimplexWeights> random_majorized_pair(Engine& gen, std::size_t n);

Eigen::VectorXd random_function(Engine& gen, std::size_t n);

struct AugmentInstance {
  FiniteKernel base;
  Eigen::MatrixXd offdiag;
  Eigen::MatrixXd nu;
};

/// Reversible base kernel offdiag + diag(r) on n states with r(x) in (0, 1),
/// plus a random auxiliary kernel nu onto `labels` labels.
AugmentInstance random_augment_instance(Engine& gen, std::size_t n, std::size_t labels);

}  // namespace pmorder
