#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pmorder/chains.hpp"

namespace pmorder {

inline constexpr double kReversibilityTol = 1e-9;
inline constexpr double kUnitEigenTol = 1e-10;

// max_ij |mu_i K_ij - mu_j K_ji|
double check_reversibility(const FiniteKernel& k);

/// E_K(f) = 1/2 sum_ij mu_i K_ij (f_i - f_j)^2, cross-checked against
/// <f, (I - K) f>_mu.
double dirichlet_form(const FiniteKernel& k, const Eigen::VectorXd& f);

struct SpectralReport {
  double right_gap = 0.0;
  double left_gap = 0.0;
  double absolute_gap = 0.0;
  Eigen::VectorXd eigenvalues;  // descending
};

SpectralReport spectral_gaps(const FiniteKernel& k);

double mean_of(const FiniteKernel& k, const Eigen::VectorXd& f);
double inner(const FiniteKernel& k, const Eigen::VectorXd& f, const Eigen::VectorXd& g);
Eigen::VectorXd centered(const FiniteKernel& k, const Eigen::VectorXd& f);

/// var(f, lambda K) = <fbar, (I - lambda K)^{-1} (I + lambda K) fbar>_mu for
/// lambda in [0, 1]. At lambda = 1 the spectral form is used; a unit
/// eigenvalue beyond the constants that carries mass of fbar is an error.
double asymptotic_variance(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda = 1.0);

/// Solves (I - lambda K) g = f for centered f and lambda < 1.
Eigen::VectorXd resolvent_solve(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda);

struct BellmanReport {
  double optimum = 0.0;         // <f, A^{-1} f>
  double attained = 0.0;        // objective at g = A^{-1} f
  double at_zero = 0.0;         // objective at g = 0
  double best_perturbed = 0.0;  // largest objective over perturbations
  int trials = 0;
  int beaten = 0;  // perturbations reaching the optimum
  bool passed = false;
};

/// Checks sup_g [2<f,g> - <g,Ag>] = <f, A^{-1} f> with A = I - lambda K.
BellmanReport bellman_check(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda,
                            int trials, std::uint64_t seed = 0);

struct BracketReport {
  double lower = 0.0;   // E_{lK1}(f1) - E_{lK2}(f1)
  double middle = 0.0;  // (var(f, lK2) - var(f, lK1)) / 2
  double upper = 0.0;   // E_{lK1}(f2) - E_{lK2}(f2)
  bool passed = false;
};

inline constexpr double kBracketTol = 1e-9;

BracketReport peskun_bracket_check(const FiniteKernel& k1, const FiniteKernel& k2,
                                   const Eigen::VectorXd& f, double lambda);

struct MixtureReport {
  std::vector<double> betas;
  std::vector<double> mixed;  // var(f, beta K1 + (1 - beta) K2)
  std::vector<double> chord;  // beta var(f, K1) + (1 - beta) var(f, K2)
  bool passed = false;
};

MixtureReport mixture_convexity_check(const FiniteKernel& k1, const FiniteKernel& k2,
                                      const Eigen::VectorXd& f, const std::vector<double>& betas);

// beta K1 + (1 - beta) K2 on a shared state space and invariant.
FiniteKernel mix_kernels(const FiniteKernel& k1, const FiniteKernel& k2, double beta);

/// var_mu(f) + 2 sum_{k=1}^{lag_max} <fbar, K^k fbar>_mu.
double truncated_acf_variance(const FiniteKernel& k, const Eigen::VectorXd& f, int lag_max);

}  // namespace pmorder
