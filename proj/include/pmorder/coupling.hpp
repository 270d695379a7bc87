#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmorder/weightdist.hpp"

namespace pmorder {

inline constexpr double kCouplingTol = 1e-9;

/// Joint law R of (W, V) on support(Q1) x support(Q2) with E[V | W] = W.
class MartingaleCoupling {
 public:
  MartingaleCoupling(std::vector<double> row_atoms, std::vector<double> col_atoms,
                     Eigen::MatrixXd joint);

  // R[i][i] = p_i; a valid martingale coupling of Q with itself.
  static MartingaleCoupling identity(const DiscreteDistribution& q);

  const std::vector<double>& row_atoms() const noexcept { return row_atoms_; }
  const std::vector<double>& col_atoms() const noexcept { return col_atoms_; }
  const Eigen::MatrixXd& joint() const noexcept { return joint_; }
  Eigen::Index rows() const noexcept { return joint_.rows(); }
  Eigen::Index cols() const noexcept { return joint_.cols(); }

  Eigen::VectorXd row_marginal() const { return joint_.rowwise().sum(); }
  Eigen::VectorXd col_marginal() const { return joint_.colwise().sum().transpose(); }

  // K(w_i, v_j) = R[i][j] / sum_j R[i][j]; rows without mass are left zero.
  Eigen::MatrixXd conditional_kernel() const;

 private:
  std::vector<double> row_atoms_;
  std::vector<double> col_atoms_;
  Eigen::MatrixXd joint_;
};

struct CouplingReport {
  double marginal = 0.0;       // max |row/col sum - target prob|
  double martingale = 0.0;     // max_i |sum_j R_ij v_j - w_i sum_j R_ij|
  double nonnegativity = 0.0;  // max(0, -min R_ij)
  bool passed() const noexcept {
    return marginal < kCouplingTol && martingale < kCouplingTol && nonnegativity < kCouplingTol;
  }
};

/// Finds a martingale coupling of Q1 <=cx Q2 by phase-1 simplex on the
/// marginal and conditional-mean constraints. With `vertex_seed` set, a
/// phase-2 pass minimizes a random linear cost so that different seeds land
/// on different feasible vertices of degenerate programs.
MartingaleCoupling build_martingale_coupling(const DiscreteDistribution& q1,
                                             const DiscreteDistribution& q2,
                                             std::optional<std::uint64_t> vertex_seed = std::nullopt);

CouplingReport verify_martingale_coupling(const MartingaleCoupling& r,
                                          const DiscreteDistribution& q1,
                                          const DiscreteDistribution& q2);

/// Pairwise couplings R^(2), ..., R^(n) for Q_1 <=cx ... <=cx Q_n.
std::vector<MartingaleCoupling> chain_couplings(std::span<const DiscreteDistribution> qs);

/// Joint law of the Markovian martingale W_1, ..., W_n built from chained
/// couplings: each path lists one atom index per level.
struct PathLaw {
  std::vector<std::vector<double>> level_atoms;
  std::vector<std::vector<std::uint32_t>> paths;
  std::vector<double> probs;

  std::size_t levels() const noexcept { return level_atoms.size(); }
  double value(std::size_t path, std::size_t level) const {
    return level_atoms[level][paths[path][level]];
  }
  Eigen::VectorXd marginal(std::size_t level) const;
};

PathLaw compose_couplings(std::span<const MartingaleCoupling> couplings);

// The n-level law with a single coupling, i.e. R itself as a two-level path law.
PathLaw as_path_law(const MartingaleCoupling& r);

/// Marginals obtained by pushing Q_1 through the conditional kernels.
std::vector<Eigen::VectorXd> push_marginals(std::span<const MartingaleCoupling> couplings);

}  // namespace pmorder
