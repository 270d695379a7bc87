#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pmorder::detail {
namespace {

using Index = Eigen::Index;

// Columns 0..n-1 are structural, n..n+m-1 artificial (identity).
class Revised {
 public:
  Revised(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
      : m_(a.rows()), n_(a.cols()), a_(a.rows(), a.cols() + a.rows()), b_(b), basis_(a.rows()) {
    a_.leftCols(n_) = a;
    a_.rightCols(m_).setIdentity();
    // Equilibrate rows and make the right-hand side nonnegative.
    for (Index i = 0; i < m_; ++i) {
      double s = a.row(i).cwiseAbs().maxCoeff();
      if (s == 0.0) s = 1.0;
      if (b_(i) < 0.0) s = -s;
      a_.row(i).head(n_) /= s;
      b_(i) /= s;
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
  }

  Index structural() const { return n_; }

  // Minimizes c'x with entering columns restricted to [0, allowed).
  void optimize(const Eigen::VectorXd& c, Index allowed) {
    const double ctol = 1e-11 * std::max(1.0, c.cwiseAbs().maxCoeff());
    for (int it = 0; it < 100000; ++it) {
      factor();
      Eigen::VectorXd cb(m_);
      for (Index i = 0; i < m_; ++i) cb(i) = c(basis_[static_cast<std::size_t>(i)]);
      const Eigen::VectorXd y = lu_.transpose().solve(cb);
      std::vector<bool> in_basis(static_cast<std::size_t>(n_ + m_), false);
      for (Index j : basis_) in_basis[static_cast<std::size_t>(j)] = true;
      Index enter = -1;
      for (Index j = 0; j < allowed; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (c(j) - y.dot(a_.col(j)) < -ctol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;
      const Eigen::VectorXd u = lu_.solve(a_.col(enter));
      const double utol = kPivotTol * std::max(1.0, u.cwiseAbs().maxCoeff());
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m_; ++i) {
        if (u(i) <= utol) continue;
        const double ratio = std::max(xb_(i), 0.0) / u(i);
        const bool tie = leave >= 0 && std::abs(ratio - best) <= 1e-14 * std::max(1.0, best);
        if ((!tie && ratio < best) ||
            (tie && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return;  // unbounded; the coupling programs are bounded
      basis_[static_cast<std::size_t>(leave)] = enter;
    }
  }

  double artificial_mass() {
    factor();
    double s = 0.0;
    for (Index i = 0; i < m_; ++i)
      if (basis_[static_cast<std::size_t>(i)] >= n_) s += std::max(xb_(i), 0.0);
    return s;
  }

  // Swaps zero-level artificials for structural columns where the row allows it.
  void expel_artificials() {
    for (Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      factor();
      std::vector<bool> in_basis(static_cast<std::size_t>(n_), false);
      for (Index j : basis_)
        if (j < n_) in_basis[static_cast<std::size_t>(j)] = true;
      Index best_j = -1;
      double best_v = 1e-7;
      for (Index j = 0; j < n_; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        const double v = std::abs(lu_.solve(a_.col(j))(i));
        if (v > best_v) {
          best_v = v;
          best_j = j;
        }
      }
      if (best_j >= 0) basis_[static_cast<std::size_t>(i)] = best_j;
    }
  }

  Eigen::VectorXd solution() {
    factor();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) x(j) = std::max(xb_(i), 0.0);
    }
    return x;
  }

 private:
  void factor() {
    Eigen::MatrixXd bm(m_, m_);
    for (Index i = 0; i < m_; ++i) bm.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
    lu_.compute(bm);
    xb_ = lu_.solve(b_);
  }

  Index m_, n_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  std::vector<Index> basis_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd xb_;
};

}  // namespace

SimplexResult simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            const std::optional<Eigen::VectorXd>& cost) {
  Revised rs(a, b);
  const Index n = rs.structural();
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + a.rows());
  phase1.tail(a.rows()).setOnes();
  rs.optimize(phase1, n + a.rows());

  SimplexResult out;
  out.infeasibility = rs.artificial_mass();
  out.feasible = out.infeasibility <= 1e-9;
  if (!out.feasible) return out;

  rs.expel_artificials();
  if (cost) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + a.rows());
    c.head(n) = *cost;
    rs.optimize(c, n);
  }
  out.x = rs.solution();
  const double residual = (a * out.x - b).cwiseAbs().maxCoeff();
  out.feasible = residual <= 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());
  out.infeasibility = std::max(out.infeasibility, residual);
  return out;
}

}  // namespace pmorder::detail
