#include <doctest.h>

#include "oracles.hpp"
#include "pmorder/error.hpp"
#include "pmorder/generators.hpp"
#include "pmorder/spectral.hpp"

using namespace pmorder;
using doctest::Approx;

namespace {

FiniteKernel make_kernel(const Eigen::MatrixXd& m, const Eigen::VectorXd& mu) {
  FiniteKernel k;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    k.labels.push_back(std::to_string(i));
    k.coords.push_back({static_cast<std::size_t>(i)});
  }
  k.matrix = m;
  k.invariant = mu;
  k.rejection = Eigen::VectorXd::Zero(m.rows());
  return k;
}

FiniteKernel two_state(double p) {
  return make_kernel(Eigen::Matrix2d{{1 - p, p}, {p, 1 - p}}, Eigen::Vector2d(0.5, 0.5));
}

FiniteKernel iid(const Eigen::VectorXd& mu) {
  return make_kernel(Eigen::VectorXd::Ones(mu.size()) * mu.transpose(), mu);
}

std::pair<FiniteKernel, FiniteKernel> random_breve_pair(Engine& gen, std::size_t n) {
  const auto chain = random_chain(gen, n);
  std::vector<MartingaleCoupling> cs;
  for (std::size_t x = 0; x < n; ++x) {
    const auto q1 = random_unit_mean_law(gen, 1 + gen() % 3);
    cs.push_back(build_martingale_coupling(q1, mean_preserving_spread(gen, q1)));
  }
  return breve_kernels(chain, cs);
}

}  // namespace

TEST_CASE("reversibility check") {
  Engine gen(1);
  const auto chain = random_chain(gen, 4);
  CHECK(check_reversibility(marginal_mh_kernel(chain)) < 1e-12);
  const auto cyc = make_kernel(Eigen::Matrix3d{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}},
                               Eigen::Vector3d::Constant(1.0 / 3));
  CHECK(check_reversibility(cyc) > 0.1);
  CHECK_THROWS_AS(spectral_gaps(cyc), Error);
  CHECK_THROWS_AS(dirichlet_form(cyc, Eigen::Vector3d(1, 2, 3)), Error);
}

TEST_CASE("Dirichlet form examples") {
  const Eigen::Vector3d mu(0.2, 0.3, 0.5);
  const Eigen::Vector3d f(1.0, -2.0, 4.0);
  CHECK(dirichlet_form(make_kernel(Eigen::Matrix3d::Identity(), mu), f) == Approx(0.0));
  const double m = mu.dot(f);
  const double var = mu.dot((f.array() - m).square().matrix());
  CHECK(dirichlet_form(iid(mu), f) == Approx(var));
  CHECK(dirichlet_form(two_state(0.25), Eigen::Vector2d(-1.0, 1.0)) == Approx(0.5));
}

TEST_CASE("spectral gaps") {
  const auto id = make_kernel(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Constant(1.0 / 3));
  CHECK(spectral_gaps(id).right_gap == Approx(0.0));

  const auto rep = spectral_gaps(iid(Eigen::Vector3d(0.2, 0.3, 0.5)));
  CHECK(rep.right_gap == Approx(1.0));
  CHECK(rep.left_gap == Approx(1.0));
  CHECK(rep.absolute_gap == Approx(1.0));

  const auto two = spectral_gaps(two_state(0.25));
  CHECK(two.eigenvalues(0) == Approx(1.0));
  CHECK(two.eigenvalues(1) == Approx(0.5));
  CHECK(two.right_gap == Approx(0.5));
  CHECK(two.left_gap == Approx(1.5));

  Engine gen(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pm = pseudo_marginal_kernel(random_chain(gen, 3),
                                           WeightAssignment::constant(3, random_unit_mean_law(gen, 3)));
    const auto s = spectral_gaps(pm);
    const auto raw = oracle::raw_eigenvalues(pm.matrix);
    REQUIRE(raw.size() == static_cast<std::size_t>(s.eigenvalues.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(s.eigenvalues(i) == Approx(raw[i]).epsilon(1e-8));
    CHECK(s.right_gap >= 0.0);
    CHECK(s.left_gap <= 2.0);
    CHECK(s.absolute_gap == std::min(s.right_gap, s.left_gap));
  }
}

TEST_CASE("asymptotic variance") {
  const Eigen::Vector3d mu(0.2, 0.3, 0.5);
  const Eigen::Vector3d f(1.0, -2.0, 4.0);
  const double m = mu.dot(f);
  CHECK(asymptotic_variance(iid(mu), f) == Approx(mu.dot((f.array() - m).square().matrix())));
  CHECK(asymptotic_variance(two_state(0.25), Eigen::Vector2d(-1.0, 1.0)) == Approx(3.0));

  Engine gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pm = pseudo_marginal_kernel(random_chain(gen, 4),
                                           WeightAssignment::constant(4, random_unit_mean_law(gen, 2)));
    const Eigen::VectorXd g = random_function(gen, pm.size());
    const double exact = asymptotic_variance(pm, g);
    CHECK(exact == Approx(oracle::fundamental_variance(pm.matrix, pm.invariant, g)).epsilon(1e-9));
    CHECK(asymptotic_variance(pm, g, 1.0 - 1e-6) == Approx(exact).epsilon(1e-5));
    CHECK(truncated_acf_variance(pm, g, 2000) == Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("reducible kernels have no finite variance") {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<2, 2>() = Eigen::Matrix2d::Constant(0.5);
  m.bottomRightCorner<2, 2>() = Eigen::Matrix2d::Constant(0.5);
  const auto k = make_kernel(m, Eigen::Vector4d::Constant(0.25));
  CHECK_THROWS_AS(asymptotic_variance(k, Eigen::Vector4d(1, 1, -1, -1)), Error);
  // A function orthogonal to the block indicators is fine.
  CHECK(asymptotic_variance(k, Eigen::Vector4d(1, -1, 1, -1)) == Approx(1.0));
}

TEST_CASE("resolvent") {
  Engine gen(6);
  const Eigen::Vector3d mu(0.2, 0.3, 0.5);
  const auto k = iid(mu);
  const Eigen::VectorXd f = centered(k, Eigen::Vector3d(1.0, -2.0, 4.0));
  CHECK(resolvent_solve(k, f, 0.0).isApprox(f));
  CHECK(resolvent_solve(k, f, 0.7).isApprox(f));
  CHECK_THROWS_AS(resolvent_solve(k, f, 1.0), Error);
  CHECK_THROWS_AS(resolvent_solve(k, Eigen::Vector3d(1.0, 1.0, 1.0), 0.5), Error);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mh = marginal_mh_kernel(random_chain(gen, 5));
    const Eigen::VectorXd h = centered(mh, random_function(gen, 5));
    const Eigen::VectorXd g = resolvent_solve(mh, h, 0.99);
    CHECK((g - 0.99 * mh.matrix * g - h).norm() < 1e-11);
    CHECK(std::abs(mean_of(mh, g)) < 1e-12);
  }
}

TEST_CASE("Bellman identity") {
  Engine gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mh = marginal_mh_kernel(random_chain(gen, 4));
    const Eigen::VectorXd f = centered(mh, random_function(gen, 4));
    const auto rep = bellman_check(mh, f, 0.9, 200, static_cast<std::uint64_t>(trial));
    CHECK(rep.passed);
    CHECK(rep.attained == Approx(rep.optimum).epsilon(1e-10));
    CHECK(rep.at_zero == 0.0);
    CHECK(rep.beaten == 0);
    CHECK(rep.best_perturbed < rep.optimum);
  }
}

TEST_CASE("variational bracket") {
  Engine gen(8);
  const auto mh = marginal_mh_kernel(random_chain(gen, 3));
  const Eigen::VectorXd f = centered(mh, random_function(gen, 3));
  const auto same = peskun_bracket_check(mh, mh, f, 0.9);
  CHECK(same.passed);
  CHECK(same.lower == Approx(0.0));
  CHECK(same.middle == Approx(0.0));
  CHECK(same.upper == Approx(0.0));

  for (int trial = 0; trial < 20; ++trial) {
    const auto [b1, b2] = random_breve_pair(gen, 3);
    const Eigen::VectorXd g = centered(b1, lift_state_function(b1, random_function(gen, 3)));
    for (double lambda : {0.0, 0.5, 0.99}) {
      const auto rep = peskun_bracket_check(b1, b2, g, lambda);
      CHECK(rep.passed);
      CHECK(rep.lower <= rep.middle + 1e-9);
      CHECK(rep.middle <= rep.upper + 1e-9);
      if (lambda == 0.0) CHECK(std::abs(rep.middle) < 1e-12);
    }
  }

  const auto other = marginal_mh_kernel(random_chain(gen, 3));
  CHECK_THROWS_AS(peskun_bracket_check(mh, other, f, 0.5), Error);
}

TEST_CASE("mixture convexity") {
  Engine gen(9);
  const std::vector<double> betas{0.0, 0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 20; ++trial) {
    const auto [b1, b2] = random_breve_pair(gen, 3);
    const Eigen::VectorXd f = centered(b1, lift_state_function(b1, random_function(gen, 3)));
    const auto rep = mixture_convexity_check(b1, b2, f, betas);
    CHECK(rep.passed);
    CHECK(rep.mixed.front() == Approx(rep.chord.front()).epsilon(1e-10));
    CHECK(rep.mixed.back() == Approx(rep.chord.back()).epsilon(1e-10));
    const auto self = mixture_convexity_check(b1, b1, f, betas);
    for (std::size_t i = 0; i < betas.size(); ++i) CHECK(self.mixed[i] == Approx(self.chord[i]).epsilon(1e-10));
  }
}

TEST_CASE("truncated autocorrelation sum") {
  const Eigen::Vector3d mu(0.2, 0.3, 0.5);
  const Eigen::Vector3d f(1.0, -2.0, 4.0);
  const double var = asymptotic_variance(iid(mu), f);
  CHECK(truncated_acf_variance(iid(mu), f, 0) == Approx(var));
  CHECK(truncated_acf_variance(iid(mu), f, 17) == Approx(var));

  const auto pm = pseudo_marginal_kernel(
      MarginalChain(Eigen::Vector2d(0.5, 0.5), Eigen::Matrix2d::Constant(0.5)),
      WeightAssignment::constant(2, oracle::diatomic_unit(0.9208, 3.0046)));
  const Eigen::VectorXd g = lift_state_function(pm, Eigen::Vector2d(-1.0, 1.0));
  CHECK(truncated_acf_variance(pm, g, 200) == Approx(asymptotic_variance(pm, g)).epsilon(1e-8));
}

TEST_CASE("Peskun ordering on same-target pairs") {
  Engine gen(10);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mh = marginal_mh_kernel(random_chain(gen, 4));
    // Lazier version: dominated off the diagonal by the original.
    const auto lazy = mix_kernels(mh, make_kernel(Eigen::Matrix4d::Identity(), mh.invariant), 0.6);
    const Eigen::VectorXd f = random_function(gen, 4);
    CHECK(asymptotic_variance(mh, f) <= asymptotic_variance(lazy, f) + 1e-12);
    CHECK(spectral_gaps(mh).right_gap >= spectral_gaps(lazy).right_gap - 1e-12);
  }
}
