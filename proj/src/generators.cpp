#include "pmorder/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmorder/error.hpp"

namespace pmorder {

double uniform01(Engine& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

DiscreteDistribution random_unit_mean_law(Engine& gen, std::size_t support) {
  if (support == 0) throw Error("weightdist", "support size must be positive");
  if (support == 1) return DiscreteDistribution::point_mass(1.0);
  std::vector<double> atoms(support), probs(support);
  double total = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    atoms[i] = 0.05 + 3.0 * uniform01(gen);
    probs[i] = 0.05 + uniform01(gen);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  const DiscreteDistribution q(atoms, probs);
  return q.scaled(1.0 / q.mean());
}

DiscreteDistribution mean_preserving_spread(Engine& gen, const DiscreteDistribution& q) {
  const std::size_t i = static_cast<std::size_t>(uniform01(gen) * static_cast<double>(q.size()));
  const double w = q.atom(i);
  const double d = (0.05 + 0.9 * uniform01(gen)) * w;
  std::vector<double> atoms(q.atoms().begin(), q.atoms().end());
  std::vector<double> probs(q.probs().begin(), q.probs().end());
  const double p = probs[i];
  atoms[i] = w - d;
  probs[i] = 0.5 * p;
  atoms.push_back(w + d);
  probs.push_back(0.5 * p);
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

DiscreteDistribution random_law_on(Engine& gen, double a, double b, std::size_t support) {
  if (!(a <= 1.0 && 1.0 <= b)) throw Error("weightdist", "interval must contain the mean 1");
  if (a == b || support <= 1) return DiscreteDistribution::point_mass(1.0);
  // Mix diatomic laws with mean one: each pairs a point below 1 with one above.
  std::vector<double> atoms, probs;
  const std::size_t pairs = std::max<std::size_t>(1, support / 2);
  double total = 0.0;
  std::vector<double> mix(pairs);
  for (double& m : mix) {
    m = 0.05 + uniform01(gen);
    total += m;
  }
  for (std::size_t k = 0; k < pairs; ++k) {
    const double lo = a + (1.0 - a) * uniform01(gen);
    const double hi = 1.0 + (b - 1.0) * uniform01(gen);
    const double m = mix[k] / total;
    if (hi - lo <= 0.0) {
      atoms.push_back(1.0);
      probs.push_back(m);
      continue;
    }
    atoms.push_back(lo);
    probs.push_back(m * (hi - 1.0) / (hi - lo));
    atoms.push_back(hi);
    probs.push_back(m * (1.0 - lo) / (hi - lo));
  }
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

MarginalChain random_chain(Engine& gen, std::size_t n) {
  Eigen::VectorXd pi(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < pi.size(); ++i) pi(i) = 0.1 + uniform01(gen);
  pi /= pi.sum();
  Eigen::MatrixXd q(pi.size(), pi.size());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) q(i, j) = 0.05 + uniform01(gen);
    q.row(i) /= q.row(i).sum();
  }
  return MarginalChain(pi, q);
}

std::optional<DiscreteDistribution> random_law_with_moments(Engine& gen, double mu, double sigma2, double a,
                                                            double b, int attempts) {
  const double m2 = sigma2 + mu * mu;
  for (int t = 0; t < attempts; ++t) {
    Eigen::Vector3d x(a + (b - a) * uniform01(gen), a + (b - a) * uniform01(gen), a + (b - a) * uniform01(gen));
    Eigen::Matrix3d m;
    m.row(0).setOnes();
    m.row(1) = x.transpose();
    m.row(2) = x.cwiseProduct(x).transpose();
    const Eigen::Vector3d p = m.fullPivLu().solve(Eigen::Vector3d(1.0, mu, m2));
    if (!p.allFinite() || p.minCoeff() < 0.0) continue;
    if ((m * p - Eigen::Vector3d(1.0, mu, m2)).cwiseAbs().maxCoeff() > 1e-12) continue;
    return DiscreteDistribution({x(0), x(1), x(2)}, {p(0), p(1), p(2)});
  }
  return std::nullopt;
}

SimplexWeights random_simplex(Engine& gen, std::size_t n) {
  std::vector<double> e(n);
  double total = 0.0;
  for (double& v : e) {
    v = -std::log(1.0 - uniform01(gen));
    total += v;
  }
  for (double& v : e) v /= total;
  return SimplexWeights(std::move(e));
}

std::pair<SimplexWeights, SimplexWeights> random_majorized_pair(Engine& gen, std::size_t n) {
  const SimplexWeights mu = random_simplex(gen, n);
  std::vector<double> lambda(n, 0.0);
  const std::size_t perms = 3;
  std::vector<double> c(perms);
  double total = 0.0;
  for (double& v : c) {
    v = 0.05 + uniform01(gen);
    total += v;
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < perms; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i)
      std::swap(perm[i - 1], perm[static_cast<std::size_t>(uniform01(gen) * static_cast<double>(i))]);
    for (std::size_t i = 0; i < n; ++i) lambda[perm[i]] += c[k] / total * mu.entries()[i];
  }
  const double s = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  for (double& v : lambda) v /= s;
  return {SimplexWeights(std::move(lambda)), mu};
}

Eigen::VectorXd random_function(Engine& gen, std::size_t n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = normal(gen);
  return f;
}

AugmentInstance random_augment_instance(Engine& gen, std::size_t n, std::size_t labels) {
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::VectorXd mu(N);
  for (Eigen::Index i = 0; i < N; ++i) mu(i) = 0.1 + uniform01(gen);
  mu /= mu.sum();
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = i + 1; j < N; ++j) flow(i, j) = flow(j, i) = uniform01(gen);
  // Scale so every state keeps a holding probability r(x) in (0, 1).
  double worst = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) worst = std::max(worst, flow.row(i).sum() / mu(i));
  const double target = 0.3 + 0.65 * uniform01(gen);
  if (worst > 0.0) flow *= target / worst;

  AugmentInstance inst;
  inst.offdiag = mu.cwiseInverse().asDiagonal() * flow;
  Eigen::VectorXd hold = Eigen::VectorXd::Ones(N) - inst.offdiag.rowwise().sum();
  FiniteKernel& k = inst.base;
  for (std::size_t x = 0; x < n; ++x) {
    k.labels.push_back(std::to_string(x));
    k.coords.push_back({x});
  }
  k.matrix = inst.offdiag;
  k.matrix.diagonal() += hold;
  k.invariant = mu;
  k.rejection = hold;

  inst.nu = Eigen::MatrixXd::Zero(N, static_cast<Eigen::Index>(labels));
  for (Eigen::Index x = 0; x < N; ++x) {
    for (Eigen::Index u = 0; u < inst.nu.cols(); ++u) inst.nu(x, u) = uniform01(gen) < 0.2 ? 0.0 : uniform01(gen);
    if (inst.nu.row(x).sum() <= 0.0) inst.nu(x, 0) = 1.0;
    inst.nu.row(x) /= inst.nu.row(x).sum();
  }
  return inst;
}

}  // namespace pmorder
