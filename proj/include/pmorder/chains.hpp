#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmorder/coupling.hpp"
#include "pmorder/weightdist.hpp"

namespace pmorder {

inline constexpr double kRowSumTol = 1e-12;

/// Finite-state Metropolis-Hastings setup: target pi and proposal q.
class MarginalChain {
 public:
  MarginalChain(std::vector<std::string> labels, Eigen::VectorXd pi, Eigen::MatrixXd q);
  MarginalChain(Eigen::VectorXd pi, Eigen::MatrixXd q);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Eigen::VectorXd& pi() const noexcept { return pi_; }
  const Eigen::MatrixXd& q() const noexcept { return q_; }

  // pi(y) q(y,x) / (pi(x) q(x,y)) on {q(x,y) > 0, q(y,x) > 0}, zero elsewhere.
  double ratio(std::size_t x, std::size_t y) const;

 private:
  std::vector<std::string> labels_;
  Eigen::VectorXd pi_;
  Eigen::MatrixXd q_;
};

/// Row-stochastic matrix over composite states, with its invariant law.
///
/// `coords[i]` holds the composite coordinates of state i: the base state
/// index followed by atom indices (one per weight level). `rejection` is the
/// holding mass added on the diagonal on top of the accepted proposals, i.e.
/// matrix = accept + diag(rejection).
struct FiniteKernel {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> coords;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd invariant;
  Eigen::VectorXd rejection;

  std::size_t size() const noexcept { return labels.size(); }
  // Largest rejection probability over states charged by the invariant law.
  double max_rejection() const;
  double min_rejection() const;
  Eigen::MatrixXd accept_part() const;
};

/// Unit-mean weight law for every base state.
class WeightAssignment {
 public:
  explicit WeightAssignment(std::vector<DiscreteDistribution> laws);
  static WeightAssignment constant(std::size_t n, const DiscreteDistribution& q);

  std::size_t size() const noexcept { return laws_.size(); }
  const DiscreteDistribution& operator[](std::size_t x) const { return laws_.at(x); }
  const std::vector<DiscreteDistribution>& laws() const noexcept { return laws_; }
  // True when some state's law charges w = 0 (those atoms carry no invariant mass).
  bool has_zero_atoms() const;

 private:
  std::vector<DiscreteDistribution> laws_;
};

/// Per ordered pair (x, y) law of the multiplicative noise on r(x, y); pairs
/// never set default to the point mass at one.
class RingWeightAssignment {
 public:
  explicit RingWeightAssignment(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void set(std::size_t x, std::size_t y, DiscreteDistribution law);
  // Sets Q_xy = Q_yx = (delta_a + a delta_{1/a}) / (1 + a).
  void set_symmetric_diatomic(std::size_t x, std::size_t y, double a);
  const DiscreteDistribution& at(std::size_t x, std::size_t y) const;

 private:
  std::size_t n_;
  std::vector<std::optional<DiscreteDistribution>> laws_;
  DiscreteDistribution unit_;
};

DiscreteDistribution symmetric_diatomic(double a);

struct RingConditionReport {
  double max_violation = 0.0;
  std::size_t worst_x = 0;
  std::size_t worst_y = 0;
  bool passed = true;
};

inline constexpr double kRingConditionTol = 1e-10;

FiniteKernel marginal_mh_kernel(const MarginalChain& chain);

/// Exact pseudo-marginal kernel on pairs (x, w) with w > 0, ordered by state
/// then atom index.
FiniteKernel pseudo_marginal_kernel(const MarginalChain& chain, const WeightAssignment& weights);

RingConditionReport check_ring_condition(const RingWeightAssignment& ring);

FiniteKernel ring_kernel(const MarginalChain& chain, const RingWeightAssignment& ring);

/// Coupled kernels (P1, P2) on triples (x, w, v) sharing the invariant
/// pi(x) R_x(w, v) v. One verified coupling per base state.
std::pair<FiniteKernel, FiniteKernel> breve_kernels(const MarginalChain& chain,
                                                    std::span<const MartingaleCoupling> couplings);

/// n-level generalization: one kernel per level i, all reversible with respect
/// to pi(x) R_x(w_1..w_n) w_n, where R_x is the Markovian-martingale path law.
std::vector<FiniteKernel> breve_kernel_family(const MarginalChain& chain,
                                              std::span<const PathLaw> path_laws);

/// Kernel on pairs (x, u) with rows offdiag(x, y) nu(y, u) plus the holding
/// mass r(x) = 1 - sum_y offdiag(x, y) on the diagonal. `base` must equal
/// offdiag + diag(r).
FiniteKernel augment_kernel(const FiniteKernel& base, const Eigen::MatrixXd& offdiag,
                            const Eigen::MatrixXd& nu);

struct AcceptanceRates {
  Eigen::MatrixXd alpha_xy;
  double alpha = 0.0;
};

AcceptanceRates acceptance_rates(const MarginalChain& chain, const WeightAssignment& weights);

// f(x) viewed as a function of the composite state: out[i] = f(coords[i][0]).
Eigen::VectorXd lift_state_function(const FiniteKernel& k, const Eigen::VectorXd& f);

// Invariant mass summed over each base state.
Eigen::VectorXd base_marginal(const FiniteKernel& k, std::size_t base_states);

}  // namespace pmorder
