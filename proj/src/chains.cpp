#include "pmorder/chains.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmorder/error.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("chains", what); }

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

// matrix = accept + diag(rejection), with rejection = 1 - row sums of accept
// unless supplied. Rows are checked, never renormalized.
void assemble(FiniteKernel& k, Eigen::MatrixXd accept,
              std::optional<Eigen::VectorXd> rejection = std::nullopt) {
  accept = accept.unaryExpr([](double v) { return (v < 0.0 && v > -1e-15) ? 0.0 : v; });
  if (accept.size() > 0 && accept.minCoeff() < 0.0) fail("negative transition mass");
  const Eigen::VectorXd rows = accept.rowwise().sum();
  if (rejection) {
    k.rejection = *rejection;
  } else {
    k.rejection = Eigen::VectorXd::Ones(rows.size()) - rows;
    for (Index i = 0; i < rows.size(); ++i) {
      if (k.rejection(i) < -kRowSumTol)
        fail("state " + k.labels[static_cast<std::size_t>(i)] + " accepts total mass " +
             std::to_string(rows(i)));
      k.rejection(i) = std::max(0.0, k.rejection(i));
    }
  }
  k.matrix = std::move(accept);
  k.matrix.diagonal() += k.rejection;
  const Eigen::VectorXd sums = k.matrix.rowwise().sum();
  for (Index i = 0; i < sums.size(); ++i)
    if (std::abs(sums(i) - 1.0) > kRowSumTol)
      fail("row " + k.labels[static_cast<std::size_t>(i)] + " sums to " + std::to_string(sums(i)));
}

void normalize_invariant(FiniteKernel& k) {
  const double total = k.invariant.sum();
  if (!(total > 0.0)) fail("invariant law has no mass");
  k.invariant /= total;
}

// P~ rejection at (x, w): 1 - sum_y q(x,y) sum_u Q_y(u) min{1, r(x,y) u / w}.
double pm_rejection(const MarginalChain& chain, std::size_t x, double w,
                    const std::vector<std::vector<double>>& atoms,
                    const std::vector<Eigen::VectorXd>& probs) {
  double acc = 0.0;
  for (std::size_t y = 0; y < chain.size(); ++y) {
    const double qxy = chain.q()(idx(x), idx(y));
    if (qxy <= 0.0) continue;
    const double r = y == x ? 1.0 : chain.ratio(x, y);
    for (std::size_t j = 0; j < atoms[y].size(); ++j)
      acc += qxy * probs[y](idx(j)) * std::min(1.0, r * atoms[y][j] / w);
  }
  return std::max(0.0, 1.0 - acc);
}

}  // namespace

static std::vector<std::string> index_labels(Index n) {
  std::vector<std::string> l;
  for (Index i = 0; i < n; ++i) l.push_back(std::to_string(i));
  return l;
}

MarginalChain::MarginalChain(std::vector<std::string> labels, Eigen::VectorXd pi,
                             Eigen::MatrixXd q)
    : labels_(std::move(labels)), pi_(std::move(pi)), q_(std::move(q)) {
  const Index n = pi_.size();
  if (n == 0) fail("empty state space");
  if (idx(labels_.size()) != n) fail("label count does not match pi");
  if (q_.rows() != n || q_.cols() != n)
    fail("proposal must be " + std::to_string(n) + "x" + std::to_string(n));
  if (pi_.minCoeff() <= 0.0) fail("target must be strictly positive");
  if (std::abs(pi_.sum() - 1.0) > kProbSumTol) fail("target sums to " + std::to_string(pi_.sum()));
  if (q_.minCoeff() < 0.0) fail("proposal has negative entries");
  for (Index i = 0; i < n; ++i)
    if (std::abs(q_.row(i).sum() - 1.0) > kRowSumTol)
      fail("proposal row " + std::to_string(i) + " sums to " + std::to_string(q_.row(i).sum()));
}

MarginalChain::MarginalChain(Eigen::VectorXd pi, Eigen::MatrixXd q)
    : MarginalChain(index_labels(pi.size()), pi, std::move(q)) {}

double MarginalChain::ratio(std::size_t x, std::size_t y) const {
  const double fwd = q_(idx(x), idx(y));
  const double bwd = q_(idx(y), idx(x));
  if (fwd <= 0.0 || bwd <= 0.0) return 0.0;
  return pi_(idx(y)) * bwd / (pi_(idx(x)) * fwd);
}

double FiniteKernel::max_rejection() const {
  double best = -1.0;
  for (Index i = 0; i < rejection.size(); ++i)
    if (invariant(i) > 0.0) best = std::max(best, rejection(i));
  if (best < 0.0) fail("kernel has no charged states");
  return best;
}

double FiniteKernel::min_rejection() const {
  double best = 2.0;
  for (Index i = 0; i < rejection.size(); ++i)
    if (invariant(i) > 0.0) best = std::min(best, rejection(i));
  if (best > 1.0) fail("kernel has no charged states");
  return best;
}

Eigen::MatrixXd FiniteKernel::accept_part() const {
  Eigen::MatrixXd a = matrix;
  a.diagonal() -= rejection;
  return a;
}

WeightAssignment::WeightAssignment(std::vector<DiscreteDistribution> laws)
    : laws_(std::move(laws)) {
  if (laws_.empty()) fail("no weight laws");
  for (std::size_t x = 0; x < laws_.size(); ++x)
    if (!laws_[x].is_unit_mean())
      fail("weight law of state " + std::to_string(x) + " has mean " +
           std::to_string(laws_[x].mean()));
}

WeightAssignment WeightAssignment::constant(std::size_t n, const DiscreteDistribution& q) {
  return WeightAssignment(std::vector<DiscreteDistribution>(n, q));
}

bool WeightAssignment::has_zero_atoms() const {
  return std::any_of(laws_.begin(), laws_.end(),
                     [](const DiscreteDistribution& q) { return q.min_atom() <= 0.0; });
}

RingWeightAssignment::RingWeightAssignment(std::size_t n)
    : n_(n), laws_(n * n), unit_(DiscreteDistribution::point_mass(1.0)) {}

void RingWeightAssignment::set(std::size_t x, std::size_t y, DiscreteDistribution law) {
  if (x >= n_ || y >= n_) fail("ring pair out of range");
  if (law.min_atom() <= 0.0) fail("ring noise must be strictly positive");
  laws_[x * n_ + y] = std::move(law);
}

void RingWeightAssignment::set_symmetric_diatomic(std::size_t x, std::size_t y, double a) {
  set(x, y, symmetric_diatomic(a));
  set(y, x, symmetric_diatomic(a));
}

const DiscreteDistribution& RingWeightAssignment::at(std::size_t x, std::size_t y) const {
  if (x >= n_ || y >= n_) fail("ring pair out of range");
  const auto& slot = laws_[x * n_ + y];
  return slot ? *slot : unit_;
}

DiscreteDistribution symmetric_diatomic(double a) {
  if (!(a > 0.0)) fail("diatomic noise needs a > 0");
  return DiscreteDistribution({a, 1.0 / a}, {1.0 / (1.0 + a), a / (1.0 + a)});
}

FiniteKernel marginal_mh_kernel(const MarginalChain& chain) {
  const std::size_t n = chain.size();
  FiniteKernel k;
  k.labels = chain.labels();
  for (std::size_t x = 0; x < n; ++x) k.coords.push_back({x});
  k.invariant = chain.pi();
  Eigen::MatrixXd accept = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double qxy = chain.q()(idx(x), idx(y));
      if (qxy <= 0.0) continue;
      accept(idx(x), idx(y)) = x == y ? qxy : qxy * std::min(1.0, chain.ratio(x, y));
    }
  assemble(k, std::move(accept));
  return k;
}

FiniteKernel pseudo_marginal_kernel(const MarginalChain& chain, const WeightAssignment& weights) {
  const std::size_t n = chain.size();
  if (weights.size() != n) fail("one weight law per state required");
  struct State {
    std::size_t x, i;
    double w, p;
  };
  std::vector<State> states;
  FiniteKernel k;
  for (std::size_t x = 0; x < n; ++x) {
    const DiscreteDistribution& q = weights[x];
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q.atom(i) <= 0.0) continue;
      states.push_back({x, i, q.atom(i), q.prob(i)});
      k.labels.push_back(chain.labels()[x] + "|w" + std::to_string(i));
      k.coords.push_back({x, i});
    }
  }
  const Index m = idx(states.size());
  k.invariant.resize(m);
  Eigen::MatrixXd accept = Eigen::MatrixXd::Zero(m, m);
  for (Index s = 0; s < m; ++s) {
    const State& a = states[static_cast<std::size_t>(s)];
    k.invariant(s) = chain.pi()(idx(a.x)) * a.p * a.w;
    for (Index t = 0; t < m; ++t) {
      const State& b = states[static_cast<std::size_t>(t)];
      const double qxy = chain.q()(idx(a.x), idx(b.x));
      if (qxy <= 0.0) continue;
      const double r = a.x == b.x ? 1.0 : chain.ratio(a.x, b.x);
      accept(s, t) = qxy * b.p * std::min(1.0, r * b.w / a.w);
    }
  }
  normalize_invariant(k);
  assemble(k, std::move(accept));
  return k;
}

RingConditionReport check_ring_condition(const RingWeightAssignment& ring) {
  RingConditionReport rep;
  const std::size_t n = ring.size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      const DiscreteDistribution& fwd = ring.at(x, y);
      const DiscreteDistribution& bwd = ring.at(y, x);
      // Signed measure varpi Q_xy(d varpi) minus the image of Q_yx under 1/varpi.
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < fwd.size(); ++i) pts.emplace_back(fwd.atom(i), fwd.prob(i) * fwd.atom(i));
      for (std::size_t i = 0; i < bwd.size(); ++i) pts.emplace_back(1.0 / bwd.atom(i), -bwd.prob(i));
      std::sort(pts.begin(), pts.end());
      double worst = 0.0;
      for (std::size_t i = 0; i < pts.size();) {
        const double anchor = pts[i].first;
        double mass = 0.0;
        std::size_t j = i;
        for (; j < pts.size() && pts[j].first - anchor <= 1e-9 * std::max(1.0, anchor); ++j)
          mass += pts[j].second;
        worst = std::max(worst, std::abs(mass));
        i = j;
      }
      if (worst > rep.max_violation) {
        rep.max_violation = worst;
        rep.worst_x = x;
        rep.worst_y = y;
      }
    }
  rep.passed = rep.max_violation <= kRingConditionTol;
  return rep;
}

FiniteKernel ring_kernel(const MarginalChain& chain, const RingWeightAssignment& ring) {
  const std::size_t n = chain.size();
  if (ring.size() != n) fail("ring assignment size does not match the chain");
  const RingConditionReport rep = check_ring_condition(ring);
  if (!rep.passed)
    fail("ring reversibility condition fails at (" + std::to_string(rep.worst_x) + ", " +
         std::to_string(rep.worst_y) + ") by " + std::to_string(rep.max_violation));
  FiniteKernel k;
  k.labels = chain.labels();
  for (std::size_t x = 0; x < n; ++x) k.coords.push_back({x});
  k.invariant = chain.pi();
  Eigen::MatrixXd accept = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double qxy = chain.q()(idx(x), idx(y));
      if (qxy <= 0.0) continue;
      if (x == y) {
        accept(idx(x), idx(y)) = qxy;
        continue;
      }
      const DiscreteDistribution& noise = ring.at(x, y);
      const double r = chain.ratio(x, y);
      double a = 0.0;
      for (std::size_t i = 0; i < noise.size(); ++i)
        a += noise.prob(i) * std::min(1.0, r * noise.atom(i));
      accept(idx(x), idx(y)) = qxy * a;
    }
  assemble(k, std::move(accept));
  return k;
}

std::pair<FiniteKernel, FiniteKernel> breve_kernels(const MarginalChain& chain,
                                                    std::span<const MartingaleCoupling> couplings) {
  if (couplings.size() != chain.size()) fail("one coupling per state required");
  std::vector<PathLaw> laws;
  for (std::size_t x = 0; x < couplings.size(); ++x) {
    const MartingaleCoupling& r = couplings[x];
    const Eigen::VectorXd rm = r.row_marginal(), cm = r.col_marginal();
    const DiscreteDistribution q1(r.row_atoms(), std::vector<double>(rm.data(), rm.data() + rm.size()));
    const DiscreteDistribution q2(r.col_atoms(), std::vector<double>(cm.data(), cm.data() + cm.size()));
    const CouplingReport rep = verify_martingale_coupling(r, q1, q2);
    if (!rep.passed()) fail("coupling of state " + std::to_string(x) + " is not a martingale coupling");
    if (!q1.is_unit_mean() || !q2.is_unit_mean())
      fail("coupling of state " + std::to_string(x) + " has marginals without unit mean");
    laws.push_back(as_path_law(r));
  }
  std::vector<FiniteKernel> family = breve_kernel_family(chain, laws);
  return {std::move(family[0]), std::move(family[1])};
}

std::vector<FiniteKernel> breve_kernel_family(const MarginalChain& chain,
                                              std::span<const PathLaw> path_laws) {
  const std::size_t n = chain.size();
  if (path_laws.size() != n) fail("one path law per state required");
  const std::size_t levels = path_laws.front().levels();
  if (levels < 2) fail("path laws need at least two levels");
  for (const PathLaw& law : path_laws)
    if (law.levels() != levels) fail("path laws have differing depth");

  struct State {
    std::size_t x, path;
    double mass;
  };
  std::vector<State> states;
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> coords;
  for (std::size_t x = 0; x < n; ++x) {
    const PathLaw& law = path_laws[x];
    for (std::size_t p = 0; p < law.paths.size(); ++p) {
      if (law.probs[p] <= 0.0 || law.value(p, levels - 1) <= 0.0) continue;
      bool zero_before = false;
      for (std::size_t l = 0; l + 1 < levels; ++l) zero_before |= law.value(p, l) <= 0.0;
      if (zero_before) {
        // A martingale started at zero stays there; this is roundoff from the coupling.
        if (law.probs[p] > 1e-12) fail("path leaves zero with mass " + std::to_string(law.probs[p]));
        continue;
      }
      states.push_back({x, p, law.probs[p]});
      std::string label = chain.labels()[x] + "|";
      std::vector<std::size_t> c{x};
      for (std::size_t l = 0; l < levels; ++l) {
        if (l) label += ".";
        label += std::to_string(law.paths[p][l]);
        c.push_back(law.paths[p][l]);
      }
      labels.push_back(std::move(label));
      coords.push_back(std::move(c));
    }
  }

  const Index m = idx(states.size());
  Eigen::VectorXd invariant(m);
  for (Index s = 0; s < m; ++s) {
    const State& a = states[static_cast<std::size_t>(s)];
    invariant(s) = chain.pi()(idx(a.x)) * a.mass * path_laws[a.x].value(a.path, levels - 1);
  }

  std::vector<FiniteKernel> out;
  for (std::size_t level = 0; level < levels; ++level) {
    std::vector<std::vector<double>> atoms(n);
    std::vector<Eigen::VectorXd> probs(n);
    for (std::size_t y = 0; y < n; ++y) {
      atoms[y] = path_laws[y].level_atoms[level];
      probs[y] = path_laws[y].marginal(level);
    }
    FiniteKernel k;
    k.labels = labels;
    k.coords = coords;
    k.invariant = invariant;
    Eigen::MatrixXd accept = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rejection(m);
    for (Index s = 0; s < m; ++s) {
      const State& a = states[static_cast<std::size_t>(s)];
      const double w = path_laws[a.x].value(a.path, level);
      rejection(s) = pm_rejection(chain, a.x, w, atoms, probs);
      for (Index t = 0; t < m; ++t) {
        const State& b = states[static_cast<std::size_t>(t)];
        const double qxy = chain.q()(idx(a.x), idx(b.x));
        if (qxy <= 0.0) continue;
        const PathLaw& lb = path_laws[b.x];
        const double u = lb.value(b.path, level);
        const double un = lb.value(b.path, levels - 1);
        const double r = a.x == b.x ? 1.0 : chain.ratio(a.x, b.x);
        accept(s, t) = qxy * b.mass * (un / u) * std::min(1.0, r * u / w);
      }
    }
    normalize_invariant(k);
    assemble(k, std::move(accept), std::move(rejection));
    out.push_back(std::move(k));
  }
  return out;
}

FiniteKernel augment_kernel(const FiniteKernel& base, const Eigen::MatrixXd& offdiag,
                            const Eigen::MatrixXd& nu) {
  const Index n = base.matrix.rows();
  if (offdiag.rows() != n || offdiag.cols() != n) fail("offdiag shape does not match the base kernel");
  if (nu.rows() != n) fail("nu needs one row per base state");
  if (offdiag.minCoeff() < 0.0) fail("offdiag has negative entries");
  const Eigen::VectorXd rows = offdiag.rowwise().sum();
  if (rows.maxCoeff() > 1.0 + kRowSumTol) fail("offdiag rows exceed one");
  Eigen::VectorXd hold = (Eigen::VectorXd::Ones(n) - rows).cwiseMax(0.0);
  Eigen::MatrixXd rebuilt = offdiag;
  rebuilt.diagonal() += hold;
  if ((rebuilt - base.matrix).cwiseAbs().maxCoeff() > kRowSumTol)
    fail("base kernel is not offdiag + diag(1 - row sums)");
  if (nu.minCoeff() < 0.0) fail("nu has negative entries");
  for (Index x = 0; x < n; ++x)
    if (std::abs(nu.row(x).sum() - 1.0) > kRowSumTol) fail("nu row " + std::to_string(x) + " is not a law");

  FiniteKernel k;
  std::vector<std::pair<Index, Index>> states;
  for (Index x = 0; x < n; ++x)
    for (Index u = 0; u < nu.cols(); ++u) {
      if (nu(x, u) <= 0.0) continue;
      states.emplace_back(x, u);
      k.labels.push_back(base.labels[static_cast<std::size_t>(x)] + "|u" + std::to_string(u));
      k.coords.push_back({static_cast<std::size_t>(x), static_cast<std::size_t>(u)});
    }
  const Index m = idx(states.size());
  k.invariant.resize(m);
  Eigen::MatrixXd accept = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rejection(m);
  for (Index s = 0; s < m; ++s) {
    const auto [x, w] = states[static_cast<std::size_t>(s)];
    k.invariant(s) = base.invariant(x) * nu(x, w);
    rejection(s) = hold(x);
    for (Index t = 0; t < m; ++t) {
      const auto [y, u] = states[static_cast<std::size_t>(t)];
      accept(s, t) = offdiag(x, y) * nu(y, u);
    }
  }
  normalize_invariant(k);
  assemble(k, std::move(accept), std::move(rejection));
  return k;
}

AcceptanceRates acceptance_rates(const MarginalChain& chain, const WeightAssignment& weights) {
  const std::size_t n = chain.size();
  if (weights.size() != n) fail("one weight law per state required");
  AcceptanceRates out;
  out.alpha_xy = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      const double r = x == y ? 1.0 : chain.ratio(x, y);
      const DiscreteDistribution& qx = weights[x];
      const DiscreteDistribution& qy = weights[y];
      double a = 0.0;
      for (std::size_t i = 0; i < qx.size(); ++i) {
        const double w = qx.atom(i);
        if (w <= 0.0) continue;
        for (std::size_t j = 0; j < qy.size(); ++j)
          a += qx.prob(i) * w * qy.prob(j) * std::min(1.0, r * qy.atom(j) / w);
      }
      out.alpha_xy(idx(x), idx(y)) = a;
      out.alpha += chain.pi()(idx(x)) * chain.q()(idx(x), idx(y)) * a;
    }
  return out;
}

Eigen::VectorXd lift_state_function(const FiniteKernel& k, const Eigen::VectorXd& f) {
  Eigen::VectorXd out(idx(k.size()));
  for (std::size_t i = 0; i < k.size(); ++i) {
    const std::size_t x = k.coords[i].at(0);
    if (idx(x) >= f.size()) fail("function is shorter than the base space");
    out(idx(i)) = f(idx(x));
  }
  return out;
}

Eigen::VectorXd base_marginal(const FiniteKernel& k, std::size_t base_states) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(idx(base_states));
  for (std::size_t i = 0; i < k.size(); ++i) {
    const std::size_t x = k.coords[i].at(0);
    if (x >= base_states) fail("state index beyond the base space");
    out(idx(x)) += k.invariant(idx(i));
  }
  return out;
}

}  // namespace pmorder
