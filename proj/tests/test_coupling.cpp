#include <doctest.h>

#include "pmorder/coupling.hpp"
#include "pmorder/error.hpp"
#include "pmorder/generators.hpp"

using namespace pmorder;
using doctest::Approx;

namespace {

DiscreteDistribution law_from(std::span<const double> atoms, const Eigen::VectorXd& probs) {
  return DiscreteDistribution(std::vector<double>(atoms.begin(), atoms.end()),
                              std::vector<double>(probs.data(), probs.data() + probs.size()));
}

}  // namespace

TEST_CASE("coupling from a point mass is the product law") {
  const auto q = DiscreteDistribution({0.2, 1.0, 2.6}, {0.5, 0.2, 0.3}).scaled(1.0 / 1.08);
  const auto r = build_martingale_coupling(DiscreteDistribution::point_mass(1.0), q);
  REQUIRE(r.rows() == 1);
  for (Eigen::Index j = 0; j < r.cols(); ++j) CHECK(r.joint()(0, j) == Approx(q.prob(j)));
}

TEST_CASE("identity coupling is accepted for equal laws") {
  const auto q = DiscreteDistribution({0.5, 2.0}, {2.0 / 3, 1.0 / 3});
  CHECK(verify_martingale_coupling(MartingaleCoupling::identity(q), q, q).passed());
  CHECK(verify_martingale_coupling(build_martingale_coupling(q, q), q, q).passed());
}

TEST_CASE("unique coupling of two diatomic laws") {
  const auto q1 = DiscreteDistribution({0.5, 2.0}, {2.0 / 3, 1.0 / 3});
  const auto q2 = DiscreteDistribution({0.0, 3.0}, {2.0 / 3, 1.0 / 3});
  const auto r = build_martingale_coupling(q1, q2);
  CHECK(r.joint()(0, 0) == Approx(5.0 / 9));
  CHECK(r.joint()(0, 1) == Approx(1.0 / 9));
  CHECK(r.joint()(1, 0) == Approx(1.0 / 9));
  CHECK(r.joint()(1, 1) == Approx(2.0 / 9));
}

TEST_CASE("verifier rejects wrong marginals and biased rows") {
  const auto q1 = DiscreteDistribution({0.5, 2.0}, {2.0 / 3, 1.0 / 3});
  const auto q2 = DiscreteDistribution({0.0, 3.0}, {2.0 / 3, 1.0 / 3});
  // Diagonal coupling of q1 placed on q2's support: marginals right, atoms wrong.
  const MartingaleCoupling diag(std::vector<double>{0.5, 2.0}, std::vector<double>{0.5, 2.0},
                                Eigen::Matrix2d{{2.0 / 3, 0.0}, {0.0, 1.0 / 3}});
  CHECK_THROWS_AS(verify_martingale_coupling(diag, q1, q2), Error);
  const auto q3 = DiscreteDistribution({0.25, 1.75}, {0.5, 0.5});
  const MartingaleCoupling wrong(std::vector<double>{0.5, 2.0}, std::vector<double>{0.25, 1.75},
                                 Eigen::Matrix2d{{2.0 / 3, 0.0}, {0.0, 1.0 / 3}});
  const auto rep = verify_martingale_coupling(wrong, q1, q3);
  CHECK(rep.marginal > 0.1);
  CHECK_FALSE(rep.passed());

  auto good = build_martingale_coupling(q1, q2);
  Eigen::MatrixXd shifted = good.joint();
  shifted(0, 1) += shifted(0, 0);
  shifted(0, 0) = 0.0;
  const auto bad = verify_martingale_coupling(
      MartingaleCoupling(good.row_atoms(), good.col_atoms(), shifted), q1, q2);
  CHECK(bad.martingale > 0.1);
  CHECK_FALSE(bad.passed());
}

TEST_CASE("couplings of random ordered pairs verify") {
  Engine gen(101);
  for (int trial = 0; trial < 500; ++trial) {
    const auto q1 = random_unit_mean_law(gen, 1 + trial % 5);
    auto q2 = mean_preserving_spread(gen, q1);
    if (trial % 2) q2 = mean_preserving_spread(gen, q2);
    const auto r = build_martingale_coupling(q1, q2);
    const auto rep = verify_martingale_coupling(r, q1, q2);
    REQUIRE(rep.passed());
    // Column law sits above the row law; conditional rows have mean w.
    CHECK(cx_leq(law_from(r.row_atoms(), r.row_marginal()), law_from(r.col_atoms(), r.col_marginal())));
    const Eigen::MatrixXd k = r.conditional_kernel();
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      double m = 0.0;
      for (Eigen::Index j = 0; j < k.cols(); ++j) m += k(i, j) * r.col_atoms()[j];
      CHECK(m == Approx(r.row_atoms()[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("different vertex seeds give verified couplings") {
  Engine gen(5);
  const auto q1 = random_unit_mean_law(gen, 3);
  const auto q2 = mean_preserving_spread(gen, mean_preserving_spread(gen, q1));
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    CHECK(verify_martingale_coupling(build_martingale_coupling(q1, q2, seed), q1, q2).passed());
}

TEST_CASE("feasibility survives rescaling both laws") {
  Engine gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q1 = random_unit_mean_law(gen, 2);
    const auto q2 = mean_preserving_spread(gen, q1);
    const double c = 0.1 + 5.0 * uniform01(gen);
    const auto r = build_martingale_coupling(q1.scaled(c), q2.scaled(c));
    CHECK(verify_martingale_coupling(r, q1.scaled(c), q2.scaled(c)).passed());
  }
}

TEST_CASE("unordered laws are refused") {
  const auto q = DiscreteDistribution({0.5, 2.0}, {2.0 / 3, 1.0 / 3});
  CHECK_THROWS_AS(build_martingale_coupling(q, DiscreteDistribution::point_mass(1.0)), Error);
  CHECK_THROWS_AS(chain_couplings(std::vector<DiscreteDistribution>{q, DiscreteDistribution::point_mass(1.0)}), Error);
}

TEST_CASE("chained couplings") {
  const auto q = DiscreteDistribution({0.5, 2.0}, {2.0 / 3, 1.0 / 3});
  const std::vector<DiscreteDistribution> qs{DiscreteDistribution::point_mass(1.0), q, q};
  const auto cs = chain_couplings(qs);
  REQUIRE(cs.size() == 2);
  CHECK(cs[1].joint()(0, 1) == Approx(0.0));
  CHECK(cs[1].joint()(1, 0) == Approx(0.0));

  const std::vector<DiscreteDistribution> two{q, q};
  CHECK(chain_couplings(two).front().joint().isApprox(build_martingale_coupling(q, q).joint()));

  Engine gen(44);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DiscreteDistribution> laws{random_unit_mean_law(gen, 2)};
    for (int i = 0; i < 3; ++i) laws.push_back(mean_preserving_spread(gen, laws.back()));
    const auto chain = chain_couplings(laws);
    const auto pushed = push_marginals(chain);
    const PathLaw path = compose_couplings(chain);
    for (std::size_t i = 0; i < laws.size(); ++i) {
      REQUIRE(pushed[i].size() == static_cast<Eigen::Index>(laws[i].size()));
      const Eigen::VectorXd from_paths = path.marginal(i);
      for (std::size_t j = 0; j < laws[i].size(); ++j) {
        CHECK(pushed[i](j) == Approx(laws[i].prob(j)).epsilon(1e-9));
        CHECK(from_paths(j) == Approx(laws[i].prob(j)).epsilon(1e-9));
      }
    }
  }
}
