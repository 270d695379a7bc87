#include "pmorder/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "pmorder/error.hpp"
#include "pmorder/normal.hpp"

namespace pmorder {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error("samplers", what); }

std::seed_seq make_seed(RngSpec spec) {
  return std::seed_seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                       static_cast<std::uint32_t>(spec.stream),
                       static_cast<std::uint32_t>(spec.stream >> 32)};
}

void check_init(const MarginalChain& chain, std::size_t init) {
  if (init >= chain.size()) fail("initial state " + std::to_string(init) + " out of range");
}

std::span<const double> row(const MarginalChain& chain, std::size_t x, std::vector<double>& buf) {
  buf.resize(chain.size());
  for (std::size_t y = 0; y < chain.size(); ++y)
    buf[y] = chain.q()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  return buf;
}

// Proposal rows are cached once per run.
std::vector<std::vector<double>> proposal_rows(const MarginalChain& chain) {
  std::vector<std::vector<double>> rows(chain.size());
  for (std::size_t x = 0; x < chain.size(); ++x) row(chain, x, rows[x]);
  return rows;
}

double ratio_or_one(const MarginalChain& chain, std::size_t x, std::size_t y) {
  return x == y ? 1.0 : chain.ratio(x, y);
}

}  // namespace

Rng::Rng(RngSpec spec) {
  std::seed_seq seq = make_seed(spec);
  gen_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double Rng::open_uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

double Rng::normal() { return normal_quantile(open_uniform()); }

std::size_t Rng::categorical(std::span<const double> probs) {
  const double u = uniform();
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = i;
    if (u < cum) return i;
  }
  return last;
}

WeightSampler WeightSampler::discrete(DiscreteDistribution q) {
  if (!q.is_unit_mean()) fail("weight law must have unit mean");
  return WeightSampler(std::move(q));
}

WeightSampler WeightSampler::lognormal(double sigma) {
  if (!(sigma >= 0.0)) fail("lognormal sigma must be nonnegative");
  return WeightSampler(Lognormal{sigma});
}

double WeightSampler::sample(Rng& rng) const {
  if (const auto* q = std::get_if<DiscreteDistribution>(&kind_)) return q->atom(rng.categorical(q->probs()));
  const double s = std::get<Lognormal>(kind_).sigma;
  return std::exp(-0.5 * s * s + s * rng.normal());
}

double ChainTrace::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  std::size_t n = 0;
  for (auto a : accepted) n += a;
  return static_cast<double>(n) / static_cast<double>(accepted.size());
}

std::vector<double> ChainTrace::values(std::span<const double> f) const {
  std::vector<double> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) out[i] = f[states[i]];
  return out;
}

void ChainTrace::write_csv(std::ostream& os) const {
  os << "step,state,weight,accepted\n";
  char buf[64];
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", weights[i]);
    os << i + 1 << ',' << states[i] << ',' << buf << ',' << int(accepted[i]) << '\n';
  }
}

ChainTrace run_marginal_mh(const MarginalChain& chain, std::size_t m, RngSpec spec, std::size_t init) {
  check_init(chain, init);
  Rng rng(spec);
  const auto rows = proposal_rows(chain);
  ChainTrace tr;
  tr.states.reserve(m);
  tr.weights.assign(m, 1.0);
  tr.accepted.reserve(m);
  std::size_t x = init;
  rng.uniform();  // initial weight slot
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t y = rng.categorical(rows[x]);
    rng.uniform();  // weight slot
    const double u = rng.uniform();
    const bool acc = u < ratio_or_one(chain, x, y);
    if (acc) x = y;
    tr.states.push_back(static_cast<std::uint32_t>(x));
    tr.accepted.push_back(acc);
  }
  return tr;
}

ChainTrace run_pseudo_marginal(const MarginalChain& chain, std::span<const WeightSampler> samplers,
                               std::size_t m, RngSpec spec, std::size_t init) {
  check_init(chain, init);
  if (samplers.size() != chain.size()) fail("one weight sampler per state required");
  Rng rng(spec);
  const auto rows = proposal_rows(chain);
  ChainTrace tr;
  tr.states.reserve(m);
  tr.weights.reserve(m);
  tr.accepted.reserve(m);
  std::size_t x = init;
  double w = samplers[x].sample(rng);
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t y = rng.categorical(rows[x]);
    const double u = samplers[y].sample(rng);
    const double v = rng.uniform();
    const bool acc = v * w < ratio_or_one(chain, x, y) * u;
    if (acc) {
      x = y;
      w = u;
    }
    tr.states.push_back(static_cast<std::uint32_t>(x));
    tr.weights.push_back(w);
    tr.accepted.push_back(acc);
  }
  return tr;
}

ChainTrace run_ring(const MarginalChain& chain, std::span<const WeightSampler> pair_samplers,
                    std::size_t m, RngSpec spec, std::size_t init) {
  check_init(chain, init);
  const std::size_t n_states = chain.size();
  if (pair_samplers.size() != n_states * n_states) fail("one noise sampler per ordered pair required");
  Rng rng(spec);
  const auto rows = proposal_rows(chain);
  ChainTrace tr;
  tr.states.reserve(m);
  tr.weights.reserve(m);
  tr.accepted.reserve(m);
  std::size_t x = init;
  rng.uniform();  // initial weight slot, kept for alignment with the other samplers
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t y = rng.categorical(rows[x]);
    const double noise = pair_samplers[x * n_states + y].sample(rng);
    const double v = rng.uniform();
    const bool acc = v < ratio_or_one(chain, x, y) * noise;
    if (acc) x = y;
    tr.states.push_back(static_cast<std::uint32_t>(x));
    tr.weights.push_back(noise);
    tr.accepted.push_back(acc);
  }
  return tr;
}

BatchMeans batch_means(std::span<const double> values, std::size_t num_batches) {
  if (num_batches < 2) fail("batch means needs at least two batches");
  const std::size_t len = values.size() / num_batches;
  if (len == 0) fail("too few values for " + std::to_string(num_batches) + " batches");
  std::vector<double> means(num_batches, 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < num_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += values[b * len + i];
    means[b] = s / static_cast<double>(len);
    total += s;
  }
  BatchMeans out;
  out.batch_length = len;
  out.mean = total / static_cast<double>(len * num_batches);
  double ss = 0.0;
  for (double mb : means) ss += (mb - out.mean) * (mb - out.mean);
  out.asvar = static_cast<double>(len) * ss / static_cast<double>(num_batches - 1);
  out.std_error = out.asvar * std::sqrt(2.0 / static_cast<double>(num_batches));
  return out;
}

DiscreteDistribution discretized_lognormal(double sigma, int steps_per_sigma, int half_width) {
  if (!(sigma > 0.0) || steps_per_sigma < 1 || half_width < 0)
    fail("discretized lognormal needs sigma > 0, steps_per_sigma >= 1, half_width >= 0");
  const double h = sigma / steps_per_sigma;
  std::vector<double> atoms, probs;
  double total = 0.0;
  for (int k = -half_width; k <= half_width + steps_per_sigma; ++k) {
    const double z = h * k;
    atoms.push_back(std::exp(-0.5 * sigma * sigma + sigma * z));
    probs.push_back(std::exp(-0.5 * z * z));
    total += probs.back();
  }
  for (double& p : probs) p /= total;
  return DiscreteDistribution(std::move(atoms), std::move(probs));
}

}  // namespace pmorder
