#pragma once

#include <cstdint>
#include <optional>

#include "polimp/experiments.hpp"
#include "polimp/pomdp.hpp"

// Sampling-based cross-checks that share no code path with the linear solves.
namespace polimp {

/// Counter-based generator: output k of stream (seed, stream) is a
/// SplitMix64 finalizer applied to a key derived from both and the counter k.
/// Streams are independent of scheduling, so trajectory i always sees the
/// same numbers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Index drawn from a probability vector by inverse CDF.
  int categorical(const double* probs, int n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct RolloutEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
  /// Upper bound on the bias of the mean: truncation tail plus rounding allowance.
  double bias = 0.0;
};

/// Bound on |E[truncated return] - V(w0)|: the discarded tail plus a
/// floating-point allowance for summing `horizon` discounted terms.
double rollout_bias_bound(double gamma, int horizon, double max_abs_reward);

/// Smallest horizon H >= 1 with rollout_bias_bound(gamma, H, max|R|) <= bias.
int horizon_for_bias(double gamma, double max_abs_reward, double bias);

/// Sample mean of truncated discounted returns from w0 (un-normalized, so it
/// estimates V^pi(w0)). When `horizon` is given it must meet the bias target,
/// otherwise ValidationError.
RolloutEstimate rollout_value(const Pomdp& p, const Policy& pi, double gamma, int w0, long n,
                              std::uint64_t seed, std::optional<int> horizon = std::nullopt,
                              double bias = 1e-6, int threads = 1);

/// Empirical frequency of w_t over n trajectories started from mu.
Vector empirical_state_dist(const Pomdp& p, const Policy& pi, const Distribution& mu, int t, long n,
                            std::uint64_t seed, int threads = 1);

struct GridArgmax {
  int idx = 0;
  Vector point;
  double value = 0.0;
};

/// Exhaustive maximum over the lattice at sensor s; ties to the lowest index.
GridArgmax grid_argmax(const Pomdp& p, const Distribution& mu, EvalMode mode, int s,
                       const Policy& fixed_rows, int resolution, int threads = 1);

}  // namespace polimp
