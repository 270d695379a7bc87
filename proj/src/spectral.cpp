#include "pmorder/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "pmorder/error.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("spectral", what); }

void require_shape(const FiniteKernel& k, const Eigen::VectorXd& f) {
  if (f.size() != k.matrix.rows()) fail("function has " + std::to_string(f.size()) +
                                        " entries for " + std::to_string(k.matrix.rows()) + " states");
}

void require_reversible(const FiniteKernel& k) {
  if (k.invariant.size() == 0) fail("empty kernel");
  if (k.invariant.minCoeff() <= 0.0) fail("invariant law must charge every state");
  const double v = check_reversibility(k);
  if (v > kReversibilityTol) fail("kernel is not reversible (violation " + std::to_string(v) + ")");
}

void require_same_invariant(const FiniteKernel& a, const FiniteKernel& b) {
  if (a.matrix.rows() != b.matrix.rows() ||
      (a.invariant - b.invariant).cwiseAbs().maxCoeff() > 1e-12)
    fail("kernels do not share an invariant law");
}

struct Eigensystem {
  Eigen::VectorXd values;   // ascending, as returned by Eigen
  Eigen::MatrixXd vectors;  // orthonormal in the Euclidean sense
  Eigen::VectorXd sqrt_mu;
};

Eigensystem symmetric_eigen(const FiniteKernel& k) {
  require_reversible(k);
  Eigensystem es;
  es.sqrt_mu = k.invariant.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt = es.sqrt_mu.cwiseInverse();
  Eigen::MatrixXd s = es.sqrt_mu.asDiagonal() * k.matrix * inv_sqrt.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) fail("eigensolver did not converge");
  es.values = solver.eigenvalues();
  es.vectors = solver.eigenvectors();
  return es;
}

double mu_norm2(const FiniteKernel& k, const Eigen::VectorXd& f) { return inner(k, f, f); }

Eigen::VectorXd require_centered(const FiniteKernel& k, const Eigen::VectorXd& f) {
  require_shape(k, f);
  const double m = mean_of(k, f);
  if (std::abs(m) > 1e-10 * std::max(1.0, f.cwiseAbs().maxCoeff()))
    fail("function is not centered (mean " + std::to_string(m) + ")");
  return f;
}

double quad_resolvent(const FiniteKernel& k, const Eigen::VectorXd& g, double lambda) {
  return inner(k, g, g - lambda * (k.matrix * g));
}

}  // namespace

double check_reversibility(const FiniteKernel& k) {
  const Eigen::MatrixXd flow = k.invariant.asDiagonal() * k.matrix;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

double mean_of(const FiniteKernel& k, const Eigen::VectorXd& f) {
  require_shape(k, f);
  return k.invariant.dot(f);
}

double inner(const FiniteKernel& k, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  require_shape(k, f);
  require_shape(k, g);
  return (k.invariant.array() * f.array() * g.array()).sum();
}

Eigen::VectorXd centered(const FiniteKernel& k, const Eigen::VectorXd& f) {
  return f.array() - mean_of(k, f);
}

double dirichlet_form(const FiniteKernel& k, const Eigen::VectorXd& f) {
  require_shape(k, f);
  require_reversible(k);
  const Eigen::Index n = f.size();
  double pairwise = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = f(i) - f(j);
      pairwise += k.invariant(i) * k.matrix(i, j) * d * d;
    }
  pairwise *= 0.5;
  const double quadratic = inner(k, f, f - k.matrix * f);
  const double scale = std::max(1.0, mu_norm2(k, f));
  if (std::abs(pairwise - quadratic) > 1e-10 * scale)
    fail("Dirichlet form cross-check failed: " + std::to_string(pairwise) + " vs " +
         std::to_string(quadratic));
  return pairwise;
}

SpectralReport spectral_gaps(const FiniteKernel& k) {
  const Eigensystem es = symmetric_eigen(k);
  SpectralReport rep;
  rep.eigenvalues = es.values.reverse();
  const Eigen::Index n = rep.eigenvalues.size();
  rep.right_gap = n > 1 ? 1.0 - rep.eigenvalues(1) : 1.0;
  rep.left_gap = 1.0 + rep.eigenvalues(n - 1);
  rep.right_gap = std::clamp(rep.right_gap, 0.0, 2.0);
  rep.left_gap = std::clamp(rep.left_gap, 0.0, 2.0);
  rep.absolute_gap = std::min(rep.right_gap, rep.left_gap);
  return rep;
}

double asymptotic_variance(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda) {
  require_shape(k, f);
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  const Eigensystem es = symmetric_eigen(k);
  const Eigen::VectorXd fbar = centered(k, f);
  const Eigen::VectorXd c = es.vectors.transpose() * es.sqrt_mu.cwiseProduct(fbar);
  const double norm2 = mu_norm2(k, fbar);

  double spectral = 0.0;
  double stuck = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double ev = lambda * es.values(i);
    if (ev >= 1.0 - kUnitEigenTol) {
      stuck += c(i) * c(i);
      continue;
    }
    spectral += (1.0 + ev) / (1.0 - ev) * c(i) * c(i);
  }
  if (stuck > 1e-12 * std::max(norm2, 1e-300) && stuck > 1e-300)
    fail("infinite/ill-defined variance: the function charges a non-constant unit eigenvector");
  if (lambda == 1.0) return spectral;

  const Eigen::VectorXd g = resolvent_solve(k, fbar, lambda);
  const double direct = 2.0 * inner(k, fbar, g) - norm2;
  if (std::abs(direct - spectral) > 1e-9 * std::max(1.0, std::abs(direct)))
    fail("variance cross-check failed: solve " + std::to_string(direct) + " vs spectral " +
         std::to_string(spectral));
  return direct;
}

Eigen::VectorXd resolvent_solve(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) fail("resolvent needs lambda in [0, 1)");
  require_centered(k, f);
  const Eigen::Index n = f.size();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - lambda * k.matrix;
  return a.partialPivLu().solve(f);
}

BellmanReport bellman_check(const FiniteKernel& k, const Eigen::VectorXd& f, double lambda,
                            int trials, std::uint64_t seed) {
  require_reversible(k);
  const Eigen::VectorXd g = resolvent_solve(k, f, lambda);
  auto objective = [&](const Eigen::VectorXd& h) {
    return 2.0 * inner(k, f, h) - quad_resolvent(k, h, lambda);
  };
  BellmanReport rep;
  rep.trials = trials;
  rep.optimum = inner(k, f, g);
  rep.attained = objective(g);
  rep.at_zero = objective(Eigen::VectorXd::Zero(f.size()));
  rep.best_perturbed = -std::numeric_limits<double>::infinity();

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> expo(-2.0, 0.0);
  const double scale = std::max(std::sqrt(mu_norm2(k, g)), 1e-6);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd h(f.size());
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = normal(gen);
    h *= scale * std::pow(10.0, expo(gen)) / std::max(std::sqrt(mu_norm2(k, h)), 1e-300);
    const double val = objective(g + h);
    rep.best_perturbed = std::max(rep.best_perturbed, val);
    if (val >= rep.optimum) ++rep.beaten;
  }
  rep.passed = std::abs(rep.attained - rep.optimum) <= 1e-10 * std::max(1.0, std::abs(rep.optimum)) &&
               rep.beaten == 0 && rep.at_zero <= rep.optimum;
  return rep;
}

BracketReport peskun_bracket_check(const FiniteKernel& k1, const FiniteKernel& k2,
                                   const Eigen::VectorXd& f, double lambda) {
  require_same_invariant(k1, k2);
  require_reversible(k1);
  require_reversible(k2);
  const Eigen::VectorXd fbar = centered(k1, f);
  const Eigen::VectorXd g1 = resolvent_solve(k1, fbar, lambda);
  const Eigen::VectorXd g2 = resolvent_solve(k2, fbar, lambda);
  BracketReport rep;
  rep.lower = quad_resolvent(k1, g1, lambda) - quad_resolvent(k2, g1, lambda);
  rep.upper = quad_resolvent(k1, g2, lambda) - quad_resolvent(k2, g2, lambda);
  rep.middle = 0.5 * (asymptotic_variance(k2, fbar, lambda) - asymptotic_variance(k1, fbar, lambda));
  const double tol = kBracketTol * std::max(1.0, std::abs(rep.middle));
  rep.passed = rep.lower <= rep.middle + tol && rep.middle <= rep.upper + tol;
  return rep;
}

FiniteKernel mix_kernels(const FiniteKernel& k1, const FiniteKernel& k2, double beta) {
  require_same_invariant(k1, k2);
  if (!(beta >= 0.0 && beta <= 1.0)) fail("mixture weight must lie in [0, 1]");
  FiniteKernel k = k1;
  k.matrix = beta * k1.matrix + (1.0 - beta) * k2.matrix;
  k.rejection = beta * k1.rejection + (1.0 - beta) * k2.rejection;
  return k;
}

MixtureReport mixture_convexity_check(const FiniteKernel& k1, const FiniteKernel& k2,
                                      const Eigen::VectorXd& f, const std::vector<double>& betas) {
  require_same_invariant(k1, k2);
  const double v1 = asymptotic_variance(k1, f);
  const double v2 = asymptotic_variance(k2, f);
  MixtureReport rep;
  rep.passed = true;
  for (double beta : betas) {
    const double mixed = asymptotic_variance(mix_kernels(k1, k2, beta), f);
    const double chord = beta * v1 + (1.0 - beta) * v2;
    const double tol = 1e-9 * std::max(1.0, std::abs(chord));
    const bool endpoint = beta == 0.0 || beta == 1.0;
    rep.passed = rep.passed && mixed <= chord + tol && (!endpoint || std::abs(mixed - chord) <= tol);
    rep.betas.push_back(beta);
    rep.mixed.push_back(mixed);
    rep.chord.push_back(chord);
  }
  return rep;
}

double truncated_acf_variance(const FiniteKernel& k, const Eigen::VectorXd& f, int lag_max) {
  require_shape(k, f);
  if (lag_max < 0) fail("lag_max must be nonnegative");
  const Eigen::VectorXd fbar = centered(k, f);
  double total = mu_norm2(k, fbar);
  Eigen::VectorXd g = fbar;
  for (int lag = 1; lag <= lag_max; ++lag) {
    g = k.matrix * g;
    total += 2.0 * inner(k, fbar, g);
  }
  return total;
}

}  // namespace pmorder
