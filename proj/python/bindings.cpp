#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pmorder/abc.hpp"
#include "pmorder/coupling.hpp"
#include "pmorder/error.hpp"
#include "pmorder/experiments.hpp"
#include "pmorder/samplers.hpp"
#include "pmorder/spectral.hpp"

namespace py = pybind11;
using namespace pmorder;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

PYBIND11_MODULE(_pmorder, m) {
  m.doc() = "Convex-order comparisons of pseudo-marginal Markov chains";
  py::register_exception<Error>(m, "PmorderError", PyExc_ValueError);

  py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("atoms"), py::arg("probs"))
      .def_static("point_mass", &DiscreteDistribution::point_mass)
      .def_property_readonly("atoms", [](const DiscreteDistribution& q) { return to_vector(q.atoms()); })
      .def_property_readonly("probs", [](const DiscreteDistribution& q) { return to_vector(q.probs()); })
      .def("mean", &DiscreteDistribution::mean)
      .def("variance", &DiscreteDistribution::variance)
      .def("scaled", &DiscreteDistribution::scaled)
      .def("__len__", &DiscreteDistribution::size)
      .def("__repr__", [](const DiscreteDistribution& q) {
        return "DiscreteDistribution(" + to_json(q).dump() + ")";
      });

  py::class_<SimplexWeights>(m, "SimplexWeights")
      .def(py::init<std::vector<double>>())
      .def_static("uniform", &SimplexWeights::uniform, py::arg("n"), py::arg("k"))
      .def_property_readonly("entries", [](const SimplexWeights& s) { return to_vector(s.entries()); });

  m.def("stop_loss", &stop_loss, py::arg("q"), py::arg("t"));
  m.def("cx_leq", &cx_leq, py::arg("q1"), py::arg("q2"));
  m.def("averaged_law", [](const DiscreteDistribution& q, const SimplexWeights& l) { return averaged_law(q, l); });
  m.def("majorizes", &majorizes, py::arg("lam"), py::arg("mu"));
  m.def("supremal_cdf", &supremal_cdf, py::arg("sigma2"), py::arg("t"));
  m.def(
      "extremal_bounded",
      [](double mu, double a, double b) {
        const ExtremalPair p = extremal_bounded(mu, a, b);
        return py::make_tuple(p.min, p.max);
      },
      py::arg("mu"), py::arg("a"), py::arg("b"));
  m.def(
      "extremal_var_constrained",
      [](double mu, double s2, double a, double b, double t) {
        const StopLossMax r = extremal_var_constrained(mu, s2, a, b, t);
        return py::make_tuple(r.value, r.law, r.row);
      },
      py::arg("mu"), py::arg("sigma2"), py::arg("a"), py::arg("b"), py::arg("t"));

  py::class_<MartingaleCoupling>(m, "MartingaleCoupling")
      .def_property_readonly("row_atoms", &MartingaleCoupling::row_atoms)
      .def_property_readonly("col_atoms", &MartingaleCoupling::col_atoms)
      .def_property_readonly("joint", &MartingaleCoupling::joint);
  m.def("build_martingale_coupling", &build_martingale_coupling, py::arg("q1"), py::arg("q2"),
        py::arg("vertex_seed") = std::nullopt);
  m.def(
      "verify_martingale_coupling",
      [](const MartingaleCoupling& r, const DiscreteDistribution& q1, const DiscreteDistribution& q2) {
        const CouplingReport c = verify_martingale_coupling(r, q1, q2);
        return py::dict(py::arg("marginal") = c.marginal, py::arg("martingale") = c.martingale,
                        py::arg("nonnegativity") = c.nonnegativity, py::arg("passed") = c.passed());
      });

  py::class_<MarginalChain>(m, "MarginalChain")
      .def(py::init<Eigen::VectorXd, Eigen::MatrixXd>(), py::arg("pi"), py::arg("q"))
      .def_property_readonly("pi", &MarginalChain::pi)
      .def_property_readonly("q", &MarginalChain::q)
      .def("__len__", &MarginalChain::size);

  py::class_<FiniteKernel>(m, "FiniteKernel")
      .def_readonly("labels", &FiniteKernel::labels)
      .def_readonly("coords", &FiniteKernel::coords)
      .def_readonly("matrix", &FiniteKernel::matrix)
      .def_readonly("invariant", &FiniteKernel::invariant)
      .def_readonly("rejection", &FiniteKernel::rejection)
      .def("__len__", &FiniteKernel::size);

  m.def("marginal_mh_kernel", &marginal_mh_kernel);
  m.def(
      "pseudo_marginal_kernel",
      [](const MarginalChain& c, std::vector<DiscreteDistribution> laws) {
        return pseudo_marginal_kernel(c, WeightAssignment(std::move(laws)));
      },
      py::arg("chain"), py::arg("laws"));
  m.def(
      "acceptance_rates",
      [](const MarginalChain& c, std::vector<DiscreteDistribution> laws) {
        const AcceptanceRates a = acceptance_rates(c, WeightAssignment(std::move(laws)));
        return py::make_tuple(a.alpha_xy, a.alpha);
      },
      py::arg("chain"), py::arg("laws"));
  m.def("lift_state_function", &lift_state_function);
  m.def("check_reversibility", &check_reversibility);
  m.def("dirichlet_form", &dirichlet_form);
  m.def("asymptotic_variance", &asymptotic_variance, py::arg("kernel"), py::arg("f"), py::arg("lam") = 1.0);
  m.def("spectral_gaps", [](const FiniteKernel& k) {
    const SpectralReport s = spectral_gaps(k);
    return py::dict(py::arg("right_gap") = s.right_gap, py::arg("left_gap") = s.left_gap,
                    py::arg("absolute_gap") = s.absolute_gap, py::arg("eigenvalues") = s.eigenvalues);
  });

  m.def(
      "run_pseudo_marginal",
      [](const MarginalChain& c, std::vector<DiscreteDistribution> laws, std::size_t steps, std::uint64_t seed,
         std::size_t init) {
        std::vector<WeightSampler> samplers;
        for (auto& q : laws) samplers.push_back(WeightSampler::discrete(std::move(q)));
        const ChainTrace t = run_pseudo_marginal(c, samplers, steps, RngSpec{seed, 0}, init);
        return py::make_tuple(t.states, t.weights, t.accepted);
      },
      py::arg("chain"), py::arg("laws"), py::arg("steps"), py::arg("seed") = 0, py::arg("init") = 0);
  m.def(
      "batch_means",
      [](const std::vector<double>& v, std::size_t batches) {
        const BatchMeans b = batch_means(v, batches);
        return py::dict(py::arg("mean") = b.mean, py::arg("asvar") = b.asvar, py::arg("std_error") = b.std_error,
                        py::arg("batch_length") = b.batch_length);
      },
      py::arg("values"), py::arg("batches"));

  m.def(
      "estimator_laws",
      [](std::size_t n, double lo, double hi) {
        const EstimatorLaws l = estimator_laws(n, Interval{lo, hi}, StrataSpec{n});
        return py::make_tuple(l.plain, l.stratified);
      },
      py::arg("n"), py::arg("lo"), py::arg("hi"));

  m.def("experiment_kinds", &experiment_kinds);
  m.def(
      "run_experiment_json",
      [](const std::string& config, std::optional<std::uint64_t> seed, unsigned threads) {
        const ExperimentReport r = run_experiment(parse_config(Json::parse(config)), RunOptions{seed, threads});
        return r.to_json().dump();
      },
      py::arg("config"), py::arg("seed") = std::nullopt, py::arg("threads") = 1);
}
