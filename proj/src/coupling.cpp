#include "pmorder/coupling.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pmorder/error.hpp"
#include "simplex.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("coupling", what); }

bool same_atoms(const std::vector<double>& xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) return false;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(xs[i] - ys[i]) > 1e-9 * std::max(1.0, std::abs(ys[i]))) return false;
  return true;
}

}  // namespace

MartingaleCoupling::MartingaleCoupling(std::vector<double> row_atoms,
                                       std::vector<double> col_atoms, Eigen::MatrixXd joint)
    : row_atoms_(std::move(row_atoms)), col_atoms_(std::move(col_atoms)), joint_(std::move(joint)) {
  if (joint_.rows() != static_cast<Eigen::Index>(row_atoms_.size()) ||
      joint_.cols() != static_cast<Eigen::Index>(col_atoms_.size()))
    fail("joint matrix is " + std::to_string(joint_.rows()) + "x" +
         std::to_string(joint_.cols()) + " but atoms give " +
         std::to_string(row_atoms_.size()) + "x" + std::to_string(col_atoms_.size()));
}

MartingaleCoupling MartingaleCoupling::identity(const DiscreteDistribution& q) {
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) r(i, i) = q.prob(static_cast<std::size_t>(i));
  std::vector<double> xs(q.atoms().begin(), q.atoms().end());
  return MartingaleCoupling(xs, xs, std::move(r));
}

Eigen::MatrixXd MartingaleCoupling::conditional_kernel() const {
  Eigen::MatrixXd k = joint_;
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    const double mass = k.row(i).sum();
    if (mass > 0.0) k.row(i) /= mass;
  }
  return k;
}

MartingaleCoupling build_martingale_coupling(const DiscreteDistribution& q1,
                                             const DiscreteDistribution& q2,
                                             std::optional<std::uint64_t> vertex_seed) {
  const CxVerdict order = convex_order_leq(q1, q2);
  if (order != CxVerdict::holds)
    fail(std::string("laws are not convex ordered (verdict ") + to_string(order) + ")");

  const auto m = static_cast<Eigen::Index>(q1.size());
  const auto n = static_cast<Eigen::Index>(q2.size());
  const Eigen::Index vars = m * n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * m + n, vars);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * m + n);
  auto var = [n](Eigen::Index i, Eigen::Index j) { return i * n + j; };
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = q1.atom(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, var(i, j)) = 1.0;
      a(m + j, var(i, j)) = 1.0;
      a(m + n + i, var(i, j)) = q2.atom(static_cast<std::size_t>(j)) - w;
    }
    b(i) = q1.prob(static_cast<std::size_t>(i));
  }
  for (Eigen::Index j = 0; j < n; ++j) b(m + j) = q2.prob(static_cast<std::size_t>(j));

  std::optional<Eigen::VectorXd> cost;
  if (vertex_seed) {
    std::mt19937_64 gen(*vertex_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    cost = Eigen::VectorXd(vars);
    for (Eigen::Index k = 0; k < vars; ++k) (*cost)(k) = unif(gen);
  }

  const detail::SimplexResult sol = detail::simplex_solve(a, b, cost);
  if (!sol.feasible)
    fail("martingale coupling program infeasible (phase-1 residual " +
         std::to_string(sol.infeasibility) + ")");

  Eigen::MatrixXd joint(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) joint(i, j) = sol.x(var(i, j));
  return MartingaleCoupling(std::vector<double>(q1.atoms().begin(), q1.atoms().end()),
                            std::vector<double>(q2.atoms().begin(), q2.atoms().end()),
                            std::move(joint));
}

CouplingReport verify_martingale_coupling(const MartingaleCoupling& r,
                                          const DiscreteDistribution& q1,
                                          const DiscreteDistribution& q2) {
  if (!same_atoms(r.row_atoms(), q1.atoms()) || !same_atoms(r.col_atoms(), q2.atoms()))
    fail("coupling support does not match the laws (" + std::to_string(r.rows()) + "x" +
         std::to_string(r.cols()) + " vs " + std::to_string(q1.size()) + "x" +
         std::to_string(q2.size()) + ")");
  CouplingReport rep;
  const Eigen::MatrixXd& joint = r.joint();
  rep.nonnegativity = std::max(0.0, -joint.minCoeff());
  const Eigen::VectorXd rows = r.row_marginal();
  const Eigen::VectorXd cols = r.col_marginal();
  for (Eigen::Index i = 0; i < joint.rows(); ++i) {
    rep.marginal = std::max(rep.marginal, std::abs(rows(i) - q1.prob(static_cast<std::size_t>(i))));
    double cond = 0.0;
    for (Eigen::Index j = 0; j < joint.cols(); ++j)
      cond += joint(i, j) * r.col_atoms()[static_cast<std::size_t>(j)];
    rep.martingale = std::max(rep.martingale, std::abs(cond - r.row_atoms()[static_cast<std::size_t>(i)] * rows(i)));
  }
  for (Eigen::Index j = 0; j < joint.cols(); ++j)
    rep.marginal = std::max(rep.marginal, std::abs(cols(j) - q2.prob(static_cast<std::size_t>(j))));
  return rep;
}

std::vector<MartingaleCoupling> chain_couplings(std::span<const DiscreteDistribution> qs) {
  if (qs.size() < 2) fail("chain needs at least two laws");
  std::vector<MartingaleCoupling> out;
  out.reserve(qs.size() - 1);
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
    if (!cx_leq(qs[i], qs[i + 1]))
      fail("laws " + std::to_string(i) + " and " + std::to_string(i + 1) +
           " are not convex ordered");
    out.push_back(build_martingale_coupling(qs[i], qs[i + 1]));
  }
  return out;
}

Eigen::VectorXd PathLaw::marginal(std::size_t level) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(level_atoms.at(level).size()));
  for (std::size_t p = 0; p < paths.size(); ++p) m(paths[p][level]) += probs[p];
  return m;
}

PathLaw compose_couplings(std::span<const MartingaleCoupling> couplings) {
  if (couplings.empty()) fail("no couplings to compose");
  PathLaw law;
  law.level_atoms.push_back(couplings.front().row_atoms());
  const Eigen::VectorXd first = couplings.front().row_marginal();
  for (Eigen::Index i = 0; i < first.size(); ++i) {
    if (first(i) <= 0.0) continue;
    law.paths.push_back({static_cast<std::uint32_t>(i)});
    law.probs.push_back(first(i));
  }
  for (std::size_t k = 0; k < couplings.size(); ++k) {
    const MartingaleCoupling& r = couplings[k];
    if (!same_atoms(law.level_atoms.back(), r.row_atoms()))
      fail("coupling " + std::to_string(k) + " does not start where the previous one ends");
    const Eigen::MatrixXd kern = r.conditional_kernel();
    PathLaw next;
    next.level_atoms = law.level_atoms;
    next.level_atoms.push_back(r.col_atoms());
    for (std::size_t p = 0; p < law.paths.size(); ++p) {
      const auto i = static_cast<Eigen::Index>(law.paths[p].back());
      for (Eigen::Index j = 0; j < kern.cols(); ++j) {
        const double mass = law.probs[p] * kern(i, j);
        if (mass <= 0.0) continue;
        auto path = law.paths[p];
        path.push_back(static_cast<std::uint32_t>(j));
        next.paths.push_back(std::move(path));
        next.probs.push_back(mass);
      }
    }
    law = std::move(next);
  }
  return law;
}

PathLaw as_path_law(const MartingaleCoupling& r) {
  return compose_couplings(std::span<const MartingaleCoupling>(&r, 1));
}

std::vector<Eigen::VectorXd> push_marginals(std::span<const MartingaleCoupling> couplings) {
  if (couplings.empty()) fail("no couplings to push through");
  std::vector<Eigen::VectorXd> out;
  out.push_back(couplings.front().row_marginal());
  for (const MartingaleCoupling& r : couplings) {
    const Eigen::VectorXd next = (out.back().transpose() * r.conditional_kernel()).transpose();
    out.push_back(next);
  }
  return out;
}

}  // namespace pmorder
