#pragma once

// Dense revised simplex for small equality-constrained programs
//   find x >= 0 with A x = b   (optionally minimizing c'x over that set).
// Bland's rule throughout, so degenerate programs terminate. The basis is
// refactorized at every iteration, trading speed for accuracy.

#include <Eigen/Dense>
#include <optional>

namespace pmorder::detail {

struct SimplexResult {
  bool feasible = false;
  double infeasibility = 0.0;  // phase-1 optimum (sum of artificials)
  Eigen::VectorXd x;
};

inline constexpr double kPivotTol = 1e-11;

SimplexResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const std::optional<Eigen::VectorXd>& cost = std::nullopt);

}  // namespace pmorder::detail
