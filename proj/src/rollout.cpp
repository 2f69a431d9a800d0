#include "polimp/rollout.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polimp/errors.hpp"
#include "polimp/io.hpp"
#include "polimp/parallel.hpp"
#include "polimp/value.hpp"

namespace polimp {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

// Row-major copies of the kernels for fast sampling.
struct Sampler {
  explicit Sampler(const Pomdp& p, const Policy& pi)
      : nw(p.n_world()), ns(p.n_sensor()), na(p.n_action()),
        beta(static_cast<std::size_t>(nw * ns)), policy(static_cast<std::size_t>(ns * na)),
        alpha(static_cast<std::size_t>(nw * na * nw)), reward(p.reward()) {
    for (int w = 0; w < nw; ++w)
      for (int s = 0; s < ns; ++s) beta[static_cast<std::size_t>(w * ns + s)] = p.beta()(w, s);
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a) policy[static_cast<std::size_t>(s * na + a)] = pi.table()(s, a);
    for (int w = 0; w < nw; ++w)
      for (int a = 0; a < na; ++a)
        for (int v = 0; v < nw; ++v)
          alpha[static_cast<std::size_t>((w * na + a) * nw + v)] = p.alpha(w, a, v);
  }

  int action(CounterRng& rng, int w) const {
    const int s = rng.categorical(&beta[static_cast<std::size_t>(w * ns)], ns);
    return rng.categorical(&policy[static_cast<std::size_t>(s * na)], na);
  }
  int next_state(CounterRng& rng, int w, int a) const {
    return rng.categorical(&alpha[static_cast<std::size_t>((w * na + a) * nw)], nw);
  }

  int nw, ns, na;
  std::vector<double> beta, policy, alpha;
  Matrix reward;
};

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ (stream * kGolden + 0xD1B54A32D192ED03ULL))) {}

std::uint64_t CounterRng::next() { return mix64(key_ + kGolden * ++counter_); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int CounterRng::categorical(const double* probs, int n) {
  const double u = uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // u landed in the rounding gap above the cumulative sum
}

double rollout_bias_bound(double gamma, int horizon, double max_abs_reward) {
  // Discarded tail plus an allowance for rounding in the discounted sum of
  // `horizon` terms (each step rounds the discount and the running return).
  const double scale = max_abs_reward / (1.0 - gamma);
  const double rounding = 4.0 * horizon * std::numeric_limits<double>::epsilon() * scale;
  return std::pow(gamma, horizon) * scale + rounding;
}

int horizon_for_bias(double gamma, double max_abs_reward, double bias) {
  detail::check_gamma(gamma);
  if (!(bias > 0.0)) throw ValidationError("rollout bias target must be positive");
  if (max_abs_reward == 0.0 || gamma == 0.0) return 1;
  // gamma^H M / (1 - gamma) <= bias
  const double h = std::log(bias * (1.0 - gamma) / max_abs_reward) / std::log(gamma);
  int horizon = std::max(1, static_cast<int>(std::ceil(h)));
  while (rollout_bias_bound(gamma, horizon, max_abs_reward) > bias) {
    if (horizon > 100'000'000) throw ValidationError("rollout: bias target unreachable in double precision");
    ++horizon;
  }
  return horizon;
}

RolloutEstimate rollout_value(const Pomdp& p, const Policy& pi, double gamma, int w0, long n,
                              std::uint64_t seed, std::optional<int> horizon, double bias,
                              int threads) {
  detail::check_policy_shape(p, pi);
  detail::check_gamma(gamma);
  if (w0 < 0 || w0 >= p.n_world()) throw ValidationError("rollout: start state out of range");
  if (n < 1) throw ValidationError("rollout: need at least one trajectory");

  const double max_r = p.max_abs_reward();
  const int required = horizon_for_bias(gamma, max_r, bias);
  const int h = horizon.value_or(required);
  if (h < required) {
    throw ValidationError("rollout: horizon " + std::to_string(h) + " too small for bias " +
                          io::format_double(bias) + " (need " + std::to_string(required) + ")");
  }

  const Sampler sampler(p, pi);
  std::vector<double> returns(static_cast<std::size_t>(n));
  parallel_for(returns.size(), threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    int w = w0;
    double discount = 1.0;
    double ret = 0.0;
    for (int t = 0; t < h; ++t) {
      const int a = sampler.action(rng, w);
      ret += discount * sampler.reward(w, a);
      discount *= gamma;
      w = sampler.next_state(rng, w, a);
    }
    returns[i] = ret;
  });

  CompensatedSum sum;
  for (double r : returns) sum.add(r);
  const double mean = sum.value() / static_cast<double>(n);
  CompensatedSum sq;
  for (double r : returns) sq.add((r - mean) * (r - mean));
  const double var = n > 1 ? sq.value() / static_cast<double>(n - 1) : 0.0;

  RolloutEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(var / static_cast<double>(n));
  est.n = n;
  est.horizon = h;
  est.seed = seed;
  est.bias = rollout_bias_bound(gamma, h, max_r);
  return est;
}

Vector empirical_state_dist(const Pomdp& p, const Policy& pi, const Distribution& mu, int t, long n,
                            std::uint64_t seed, int threads) {
  detail::check_policy_shape(p, pi);
  detail::check_distribution_size(p, mu);
  if (t < 0) throw ValidationError("empirical_state_dist: t must be >= 0");
  if (n < 1) throw ValidationError("empirical_state_dist: need at least one trajectory");

  const Sampler sampler(p, pi);
  std::vector<int> final_state(static_cast<std::size_t>(n));
  parallel_for(final_state.size(), threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    int w = rng.categorical(mu.probs().data(), mu.size());
    for (int step = 0; step < t; ++step) w = sampler.next_state(rng, w, sampler.action(rng, w));
    final_state[i] = w;
  });

  Vector freq = Vector::Zero(p.n_world());
  for (int w : final_state) freq[w] += 1.0;
  return freq / static_cast<double>(n);
}

GridArgmax grid_argmax(const Pomdp& p, const Distribution& mu, EvalMode mode, int s,
                       const Policy& fixed_rows, int resolution, int threads) {
  const SurfaceTable table = reward_surface(p, mu, s, fixed_rows, resolution, mode, threads);
  std::vector<double> values;
  for (const auto& row : table.rows) values.push_back(row.value);
  const SurfaceRow* best = &table.rows[static_cast<std::size_t>(argmax_lowest(values))];
  return GridArgmax{best->idx, best->point, best->value};
}

}  // namespace polimp
