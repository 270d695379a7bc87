#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pmorder/chains.hpp"
#include "pmorder/weightdist.hpp"

namespace pmorder {

struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// mt19937_64 seeded from (seed, stream) through seed_seq. Every draw used by
/// the samplers is a single 53-bit uniform, so the sequence of decisions is
/// fixed by (seed, stream) alone.
class Rng {
 public:
  explicit Rng(RngSpec spec);

  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1); never returns an endpoint.
  double open_uniform();
  double normal();
  // Index drawn from a probability vector by inverse cdf (one uniform).
  std::size_t categorical(std::span<const double> probs);

 private:
  std::mt19937_64 gen_;
};

/// Draws unit-mean weights: either from a finite law or exp(N(-s^2/2, s^2)).
class WeightSampler {
 public:
  struct Lognormal {
    double sigma;
  };

  static WeightSampler discrete(DiscreteDistribution q);
  static WeightSampler lognormal(double sigma);
  static WeightSampler unit() { return discrete(DiscreteDistribution::point_mass(1.0)); }

  // One uniform per draw.
  double sample(Rng& rng) const;
  bool is_discrete() const noexcept { return std::holds_alternative<DiscreteDistribution>(kind_); }
  const DiscreteDistribution& law() const { return std::get<DiscreteDistribution>(kind_); }
  double sigma() const { return std::get<Lognormal>(kind_).sigma; }

 private:
  explicit WeightSampler(std::variant<DiscreteDistribution, Lognormal> kind) : kind_(std::move(kind)) {}
  std::variant<DiscreteDistribution, Lognormal> kind_;
};

struct ChainTrace {
  std::vector<std::uint32_t> states;
  std::vector<double> weights;
  std::vector<std::uint8_t> accepted;

  std::size_t size() const noexcept { return states.size(); }
  double acceptance_rate() const;
  // f(X_n) along the trace.
  std::vector<double> values(std::span<const double> f) const;
  // step,state,weight,accepted with 12 significant digits.
  void write_csv(std::ostream& os) const;
};

/// Marginal MH with the same draw schedule as the pseudo-marginal sampler; the
/// weight slot is consumed and ignored.
ChainTrace run_marginal_mh(const MarginalChain& chain, std::size_t m, RngSpec rng, std::size_t init);

/// Each step draws, in order: proposal, weight at the proposal, acceptance
/// uniform. The initial weight is drawn fresh from the initial state's sampler.
ChainTrace run_pseudo_marginal(const MarginalChain& chain, std::span<const WeightSampler> samplers,
                               std::size_t m, RngSpec rng, std::size_t init);

/// Noise sampler for every ordered pair; index x * n + y.
ChainTrace run_ring(const MarginalChain& chain, std::span<const WeightSampler> pair_samplers,
                    std::size_t m, RngSpec rng, std::size_t init);

struct BatchMeans {
  double mean = 0.0;
  double asvar = 0.0;
  double std_error = 0.0;  // asvar * sqrt(2 / num_batches)
  std::size_t batch_length = 0;
};

/// asvar = L * sample variance of the batch means; trailing values that do
/// not fill a batch are dropped.
BatchMeans batch_means(std::span<const double> values, std::size_t num_batches);

/// Discretized lognormal on the grid z_k = h k, h = sigma / j, for
/// k = -K .. K + j: atoms exp(-sigma^2/2 + sigma z_k), weights proportional to
/// the standard normal density at z_k. The grid is symmetric about sigma / 2,
/// so the law has unit mean and satisfies the ring condition with itself.
DiscreteDistribution discretized_lognormal(double sigma, int steps_per_sigma, int half_width);

}  // namespace pmorder
