#include "pmorder/weightdist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmorder/error.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("weightdist", what); }

struct Atom {
  double x;
  double p;
};

// Sort and merge; drops zero-probability atoms. Does not validate the total.
std::vector<Atom> merge_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& l, const Atom& r) { return l.x < r.x; });
  std::vector<Atom> out;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double first = atoms[i].x;
    double mass = 0.0;
    double moment = 0.0;
    std::size_t j = i;
    for (; j < atoms.size() && atoms[j].x - first <= kAtomMergeTol; ++j) {
      mass += atoms[j].p;
      moment += atoms[j].p * atoms[j].x;
    }
    if (mass > 0.0) out.push_back({moment / mass, mass});
    i = j;
  }
  return out;
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> atoms,
                                           std::vector<double> probs) {
  if (atoms.empty()) fail("distribution needs at least one atom");
  if (atoms.size() != probs.size())
    fail("atoms and probs differ in length (" + std::to_string(atoms.size()) +
         " vs " + std::to_string(probs.size()) + ")");
  std::vector<Atom> raw;
  raw.reserve(atoms.size());
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double x = atoms[i];
    double p = probs[i];
    if (!std::isfinite(x) || !std::isfinite(p)) fail("non-finite atom or probability");
    if (x < 0.0) {
      if (x < -kAtomMergeTol) fail("negative atom " + std::to_string(x));
      x = 0.0;
    }
    if (p < 0.0) {
      if (p < -1e-15) fail("negative probability " + std::to_string(p));
      p = 0.0;
    }
    total += p;
    raw.push_back({x, p});
  }
  if (std::abs(total - 1.0) > kProbSumTol)
    fail("probabilities sum to " + std::to_string(total));
  for (const Atom& a : merge_atoms(std::move(raw))) {
    atoms_.push_back(a.x);
    probs_.push_back(a.p);
  }
}

DiscreteDistribution DiscreteDistribution::point_mass(double x) {
  return DiscreteDistribution({x}, {1.0});
}

double DiscreteDistribution::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) m += probs_[i] * atoms_[i];
  return m;
}

double DiscreteDistribution::variance() const noexcept {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const double d = atoms_[i] - m;
    v += probs_[i] * d * d;
  }
  return v;
}

bool DiscreteDistribution::is_unit_mean(double tol) const noexcept {
  return std::abs(mean() - 1.0) <= tol;
}

DiscreteDistribution DiscreteDistribution::scaled(double c) const {
  if (!(c > 0.0)) fail("scale factor must be positive");
  std::vector<double> xs(atoms_);
  for (double& x : xs) x *= c;
  return DiscreteDistribution(std::move(xs), probs_);
}

SimplexWeights::SimplexWeights(std::vector<double> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) fail("simplex point needs at least one entry");
  double total = 0.0;
  for (double& e : entries_) {
    if (!std::isfinite(e)) fail("non-finite simplex entry");
    if (e < 0.0) {
      if (e < -1e-15) fail("negative simplex entry");
      e = 0.0;
    }
    total += e;
  }
  if (std::abs(total - 1.0) > kProbSumTol)
    fail("simplex entries sum to " + std::to_string(total));
}

SimplexWeights SimplexWeights::uniform(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) fail("uniform weights need 1 <= k <= n");
  std::vector<double> e(n, 0.0);
  std::fill_n(e.begin(), k, 1.0 / static_cast<double>(k));
  return SimplexWeights(std::move(e));
}

double stop_loss(const DiscreteDistribution& q, double t) {
  double s = 0.0;
  const auto xs = q.atoms();
  const auto ps = q.probs();
  for (std::size_t i = 0; i < xs.size(); ++i) s += ps[i] * std::max(xs[i] - t, 0.0);
  return s;
}

const char* to_string(CxVerdict v) {
  switch (v) {
    case CxVerdict::holds: return "true";
    case CxVerdict::fails: return "false";
    case CxVerdict::means_differ: return "means_differ";
  }
  return "?";
}

CxVerdict convex_order_leq(const DiscreteDistribution& q1,
                           const DiscreteDistribution& q2) {
  if (std::abs(q1.mean() - q2.mean()) > kMeanMatchTol) return CxVerdict::means_differ;
  std::vector<double> ts(q1.atoms().begin(), q1.atoms().end());
  ts.insert(ts.end(), q2.atoms().begin(), q2.atoms().end());
  for (double t : ts) {
    if (stop_loss(q1, t) > stop_loss(q2, t) + kStopLossTol) return CxVerdict::fails;
  }
  return CxVerdict::holds;
}

DiscreteDistribution averaged_law(const DiscreteDistribution& q,
                                  const SimplexWeights& lambda,
                                  AveragingCaps caps) {
  const std::size_t n = lambda.size();
  if (n > caps.max_terms)
    fail("averaging over " + std::to_string(n) + " terms exceeds cap " +
         std::to_string(caps.max_terms));
  double combos = 1.0;
  for (std::size_t i = 0; i < n; ++i) combos *= static_cast<double>(q.size());
  if (combos > static_cast<double>(caps.max_enumeration))
    fail("enumeration size " + std::to_string(combos) + " exceeds cap " +
         std::to_string(caps.max_enumeration));

  std::vector<Atom> acc{{0.0, 1.0}};
  for (double weight : lambda.entries()) {
    if (weight == 0.0) continue;
    std::vector<Atom> next;
    next.reserve(acc.size() * q.size());
    for (const Atom& a : acc)
      for (std::size_t j = 0; j < q.size(); ++j)
        next.push_back({a.x + weight * q.atom(j), a.p * q.prob(j)});
    acc = merge_atoms(std::move(next));
  }
  std::vector<double> xs, ps;
  for (const Atom& a : acc) {
    xs.push_back(a.x);
    ps.push_back(a.p);
  }
  return DiscreteDistribution(std::move(xs), std::move(ps));
}

bool majorizes(const SimplexWeights& lambda, const SimplexWeights& mu) {
  if (lambda.size() != mu.size())
    fail("majorization needs equal lengths (" + std::to_string(lambda.size()) +
         " vs " + std::to_string(mu.size()) + ")");
  std::vector<double> l(lambda.entries().begin(), lambda.entries().end());
  std::vector<double> m(mu.entries().begin(), mu.entries().end());
  std::sort(l.begin(), l.end(), std::greater<>());
  std::sort(m.begin(), m.end(), std::greater<>());
  double sl = 0.0, sm = 0.0;
  for (std::size_t k = 0; k < l.size(); ++k) {
    sl += l[k];
    sm += m[k];
    if (sl > sm + 1e-12) return false;
  }
  return true;
}

namespace {

void check_interval(double mu, double a, double b) {
  if (!(a <= mu && mu <= b))
    fail("need a <= mu <= b, got a=" + std::to_string(a) + " mu=" +
         std::to_string(mu) + " b=" + std::to_string(b));
}

// Two-point law on lo <= hi with the given mean.
DiscreteDistribution diatomic(double lo, double hi, double mean) {
  if (hi - lo <= kAtomMergeTol) return DiscreteDistribution::point_mass(mean);
  const double p_hi = std::clamp((mean - lo) / (hi - lo), 0.0, 1.0);
  return DiscreteDistribution({lo, hi}, {1.0 - p_hi, p_hi});
}

}  // namespace

ExtremalPair extremal_bounded(double mu, double a, double b) {
  check_interval(mu, a, b);
  auto lo = DiscreteDistribution::point_mass(mu);
  if (a == b) return {lo, lo};
  return {lo, diatomic(a, b, mu)};
}

StopLossMax extremal_var_constrained(double mu, double sigma2, double a, double b,
                                     double t) {
  check_interval(mu, a, b);
  const double cap = (mu - a) * (b - mu);
  if (!(sigma2 >= 0.0) || sigma2 > cap * (1.0 + 1e-12) + 1e-15)
    fail("variance " + std::to_string(sigma2) + " outside feasible interval [0, " +
         std::to_string(cap) + "]");
  sigma2 = std::min(sigma2, cap);

  const double c = 0.5 * (a + b);
  const double s = std::sqrt(sigma2 + (mu - t) * (mu - t));

  int row;
  if (t <= c && s <= t - a) row = 1;
  else if (t <= c) row = 2;
  else if (s <= b - t) row = 3;
  else row = 4;

  auto law_for_row = [&](int r) {
    if (sigma2 == 0.0) return DiscreteDistribution::point_mass(mu);
    switch (r) {
      case 1:
      case 3: return diatomic(t - s, t + s, mu);
      case 2: return diatomic(a, mu + sigma2 / (mu - a), mu);
      default: return diatomic(mu - sigma2 / (b - mu), b, mu);
    }
  };

  if (sigma2 == 0.0) return {std::max(mu - t, 0.0), law_for_row(row), row};
  // Outside the support every feasible law gives the same stop-loss value.
  if (t < a) return {mu - t, law_for_row(2), 0};
  if (t > b) return {0.0, law_for_row(4), 0};

  double value;
  switch (row) {
    case 1:
    case 3: value = 0.5 * (mu - t + s); break;
    case 2:
      value = (mu - a) * ((mu - t) * (mu - a) + sigma2) / ((mu - a) * (mu - a) + sigma2);
      break;
    default: value = (b - t) * sigma2 / ((mu - b) * (mu - b) + sigma2); break;
  }
  return {value, law_for_row(row), row};
}

double supremal_cdf(double sigma2, double t) {
  if (!(sigma2 > 0.0)) fail("supremal cdf needs sigma2 > 0");
  if (!(t >= 0.0)) fail("supremal cdf needs t >= 0");
  if (t < 0.5 * (sigma2 + 1.0)) return sigma2 / (1.0 + sigma2);
  const double d = t - 1.0;
  return 0.5 + 0.5 * d / std::sqrt(sigma2 + d * d);
}

}  // namespace pmorder
