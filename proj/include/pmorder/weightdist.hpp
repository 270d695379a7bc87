#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmorder {

inline constexpr double kAtomMergeTol = 1e-12;
inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kUnitMeanTol = 1e-10;
inline constexpr double kMeanMatchTol = 1e-9;
inline constexpr double kStopLossTol = 1e-12;

/// Finite-support probability law on the nonnegative reals.
///
/// Construction canonicalizes: atoms are sorted ascending, atoms closer than
/// kAtomMergeTol are merged (probability-weighted position), and atoms with
/// zero probability are dropped. Probabilities must be nonnegative and sum to
/// one within kProbSumTol.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<double> atoms, std::vector<double> probs);

  static DiscreteDistribution point_mass(double x);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  double atom(std::size_t i) const { return atoms_.at(i); }
  double prob(std::size_t i) const { return probs_.at(i); }

  double min_atom() const noexcept { return atoms_.front(); }
  double max_atom() const noexcept { return atoms_.back(); }
  double mean() const noexcept;
  double variance() const noexcept;
  bool is_unit_mean(double tol = kUnitMeanTol) const noexcept;

  // Law of c*W for c > 0.
  DiscreteDistribution scaled(double c) const;

  bool operator==(const DiscreteDistribution&) const = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> probs_;
};

/// A point of the probability simplex S_N.
class SimplexWeights {
 public:
  explicit SimplexWeights(std::vector<double> entries);

  // u_k in S_N: first k entries equal 1/k, the rest zero.
  static SimplexWeights uniform(std::size_t n, std::size_t k);

  std::span<const double> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<double> entries_;
};

// E[(W - t)_+].
double stop_loss(const DiscreteDistribution& q, double t);

enum class CxVerdict { holds, fails, means_differ };

const char* to_string(CxVerdict v);

/// Q1 <=cx Q2, decided by comparing stop-loss functions at the union of the
/// atoms (both functions are piecewise linear with kinks only there).
CxVerdict convex_order_leq(const DiscreteDistribution& q1,
                           const DiscreteDistribution& q2);

inline bool cx_leq(const DiscreteDistribution& q1,
                   const DiscreteDistribution& q2) {
  return convex_order_leq(q1, q2) == CxVerdict::holds;
}

struct AveragingCaps {
  std::size_t max_terms = 8;
  std::size_t max_enumeration = 1'000'000;
};

/// Exact law of sum_i lambda_i Z_i with Z_i iid ~ q.
DiscreteDistribution averaged_law(const DiscreteDistribution& q,
                                  const SimplexWeights& lambda,
                                  AveragingCaps caps = {});

/// lambda ≺ mu: every descending partial sum of lambda is at most mu's.
bool majorizes(const SimplexWeights& lambda, const SimplexWeights& mu);

struct ExtremalPair {
  DiscreteDistribution min;
  DiscreteDistribution max;
};

/// Convex-order extremes among laws on [a, b] with mean mu.
ExtremalPair extremal_bounded(double mu, double a, double b);

struct StopLossMax {
  double value;
  DiscreteDistribution law;
  int row;  // 1-based row of the four-case table that was selected (0: t outside [a, b])
};

/// Maximal E[(W - t)_+] over laws on [a, b] with mean mu and variance sigma2,
/// with the diatomic law attaining it.
StopLossMax extremal_var_constrained(double mu, double sigma2, double a,
                                     double b, double t);

/// Cdf at t of the supremal unit-mean law on [0, inf) with variance bound sigma2.
double supremal_cdf(double sigma2, double t);

}  // namespace pmorder
